//! Small statistical toolbox shared by the samplers, estimators and the
//! validation suite: log-gamma, regularized incomplete gamma, chi-squared
//! goodness-of-fit (one- and two-sample) and Wilson score intervals.

/// Natural log of the gamma function, Lanczos approximation (g = 7, n = 9).
///
/// Accurate to ~1e-13 relative for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// ln C(n, k) via log-gamma; 0 when k > n or k < 0.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Lower regularized incomplete gamma P(a, x).
///
/// Series for x < a + 1, continued fraction (modified Lentz) otherwise.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_p domain");
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // Series representation.
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..500 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_q domain");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// p-value of a chi-squared statistic with `df` degrees of freedom.
pub fn chi_squared_pvalue(stat: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    gamma_q(df / 2.0, stat / 2.0).clamp(0.0, 1.0)
}

/// One-sample chi-squared goodness-of-fit against given cell probabilities.
///
/// Cells with expected count below `min_expected` are pooled into one
/// bucket, and any probability mass not covered by the listed cells is
/// pooled there too (with zero observed weight beyond the listed counts),
/// so truncated probability lists stay valid. Returns `(statistic, p_value)`.
pub fn chi_squared_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> (f64, f64) {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let mut pooled_obs = 0.0;
    let mut pooled_exp = 0.0;
    let mut seen_obs = 0.0;
    let mut seen_prob = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        seen_obs += o as f64;
        seen_prob += p;
        let e = nf * p;
        if e < min_expected {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            stat += (o as f64 - e) * (o as f64 - e) / e;
            cells += 1;
        }
    }
    if seen_prob < 1.0 - 1e-12 {
        pooled_obs += nf - seen_obs;
        pooled_exp += nf * (1.0 - seen_prob);
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        cells += 1;
    }
    let df = cells.saturating_sub(1) as f64;
    (stat, chi_squared_pvalue(stat, df))
}

/// Two-sample chi-squared homogeneity test over paired histograms.
///
/// Cells with combined count below `min_combined` are pooled. Returns
/// `(statistic, p_value)`.
pub fn chi_squared_two_sample(h1: &[u64], h2: &[u64], min_combined: u64) -> (f64, f64) {
    assert_eq!(h1.len(), h2.len());
    let n1: u64 = h1.iter().sum();
    let n2: u64 = h2.iter().sum();
    let k1 = (n2 as f64 / n1 as f64).sqrt();
    let k2 = (n1 as f64 / n2 as f64).sqrt();
    let mut stat = 0.0;
    let mut cells = 0usize;
    let mut pool1 = 0u64;
    let mut pool2 = 0u64;
    for (&a, &b) in h1.iter().zip(h2) {
        if a + b == 0 {
            continue;
        }
        if a + b < min_combined {
            pool1 += a;
            pool2 += b;
        } else {
            let d = k1 * a as f64 - k2 * b as f64;
            stat += d * d / (a + b) as f64;
            cells += 1;
        }
    }
    if pool1 + pool2 > 0 {
        let d = k1 * pool1 as f64 - k2 * pool2 as f64;
        stat += d * d / (pool1 + pool2) as f64;
        cells += 1;
    }
    let df = cells.saturating_sub(1) as f64;
    (stat, chi_squared_pvalue(stat, df))
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    wilson_interval_z(successes, trials, 1.959_963_984_540_054)
}

/// Wilson score interval at an arbitrary z.
pub fn wilson_interval_z(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Numerically stable log(sum of exp(terms)).
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = terms.iter().map(|&t| (t - m).exp()).sum();
    m + s.ln()
}
