//! Threshold functions and scalar parameter cascades for the scaling-window
//! experiments.
//!
//! Everything here is a pure function of the experiment point. The central
//! quantity is `psi(n)`, the solution above 1 of `psi * exp(-psi) = 2/n`
//! (equivalently `-W_{-1}(-2/n)` on the lower Lambert branch), which locates
//! the 3-to-4 window center.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `2e`, the lower bound on `n` for which the Lambert threshold exists.
pub const MIN_N: f64 = 2.0 * std::f64::consts::E;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("n = {0} out of domain (requires n > 2e)")]
    Domain(f64),
    #[error("parameter {name} = {value} outside {range}")]
    Range {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("cascade inversion failed to bracket target q2 = {0}")]
    NoBracket(f64),
}

/// Solves `psi * exp(-psi) = 2/n` for the branch `psi >= 1`.
///
/// Safeguarded bisection on `[1, max(3 ln n, 2)]` followed by Newton polish
/// on `ln psi - psi = ln(2/n)`; monotone increasing in `n`.
pub fn lambert_psi(n: f64) -> Result<f64, NumericsError> {
    if !(n > MIN_N) {
        return Err(NumericsError::Domain(n));
    }
    let target = (2.0 / n).ln();
    // g(psi) = ln psi - psi is strictly decreasing for psi > 1.
    let g = |psi: f64| psi.ln() - psi;
    let mut lo = 1.0f64;
    let mut hi = (3.0 * n.ln()).max(2.0);
    debug_assert!(g(lo) >= target && g(hi) <= target);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut psi = 0.5 * (lo + hi);
    // Newton polish; g' = 1/psi - 1 vanishes at psi = 1, where the
    // 80-step bisection interval is already far below double precision.
    for _ in 0..4 {
        let slope = 1.0 / psi - 1.0;
        if slope.abs() < 1e-6 {
            break;
        }
        let delta = (g(psi) - target) / slope;
        if !delta.is_finite() || psi - delta <= 1.0 {
            break;
        }
        psi -= delta;
    }
    Ok(psi)
}

/// Window center for the 3-to-4 transition: `(m_c, p_c)`.
///
/// `m_c = n^{3/2} sqrt(psi(n)/8)` and `p_c = sqrt(2 psi(n)/n)`.
pub fn window3_center(n: f64) -> Result<(f64, f64), NumericsError> {
    let psi = lambert_psi(n)?;
    Ok((n.powf(1.5) * (psi / 8.0).sqrt(), (2.0 * psi / n).sqrt()))
}

/// Independent-clause probability matched to the C4 partition function:
/// `(1 - lambda0)^4 (1 + 4 lambda + 2 lambda^2) = 1`.
pub fn lambda0_coupling(lambda: f64) -> f64 {
    1.0 - (1.0 + 4.0 * lambda + 2.0 * lambda * lambda).powf(-0.25)
}

/// Solves `r/(1-r) = x` in closed form.
#[inline]
pub fn odds_to_prob(x: f64) -> f64 {
    x / (1.0 + x)
}

/// The defect-probability cascade evaluated at fugacity `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cascade {
    pub q0: f64,
    pub q1: f64,
    pub mu: f64,
    pub q2: f64,
    /// Path-pair exponent `psi = lambda^3 n / 2`.
    pub path_weight_psi: f64,
}

/// Evaluates `q0, q1, mu, q2, psi` at fugacity `lambda` on `n` vertices.
pub fn cascade(n: f64, lambda: f64) -> Cascade {
    let l2n = lambda * lambda * n;
    let l3n = lambda * lambda * lambda * n;
    let l4n = l3n * lambda;
    let q0_odds = lambda * (-l2n / 2.0).exp();
    let q0 = odds_to_prob(q0_odds);
    let q1_odds = lambda * (-l2n / 2.0 + l3n - 1.75 * l4n).exp();
    let q1 = odds_to_prob(q1_odds);
    let half = n / 2.0;
    let mu = half * (half - 1.0) / 2.0 * q1 * (l3n * n * q0).exp();
    let q2_odds = q1_odds * (4.0 * lambda * lambda * lambda * mu).exp();
    Cascade {
        q0,
        q1,
        mu,
        q2: odds_to_prob(q2_odds),
        path_weight_psi: l3n / 2.0,
    }
}

/// How a parameter point was derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// 3-to-4 window at offset omega.
    Window3,
    /// 4-to-5 window at parameter c.
    Window4,
    /// Fixed edge count model.
    FixedM,
    /// Built directly from a fugacity.
    Direct,
}

/// All scalar parameters of one experiment point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub n: u64,
    pub m_edges: Option<u64>,
    pub lambda: f64,
    pub p: f64,
    pub q0: f64,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub q_ell: Option<f64>,
    pub q_u: Option<f64>,
    pub mu_param: Option<f64>,
    pub path_weight_psi: Option<f64>,
    pub lambda0_coupling: f64,
    pub psi_n: f64,
    pub m_c: f64,
    pub p_c: f64,
    pub omega: Option<f64>,
    pub c: Option<f64>,
    pub kappa: Option<f64>,
    pub provenance: Provenance,
}

impl ThresholdParams {
    /// Base point from a fugacity alone (window-agnostic fields filled).
    pub fn from_lambda(n: u64, lambda: f64) -> Result<Self, NumericsError> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(NumericsError::Range {
                name: "lambda",
                value: lambda,
                range: "[0, inf)",
            });
        }
        let nf = n as f64;
        let psi_n = lambert_psi(nf)?;
        let (m_c, p_c) = window3_center(nf)?;
        let casc = cascade(nf, lambda);
        Ok(ThresholdParams {
            n,
            m_edges: None,
            lambda,
            p: lambda / (1.0 + lambda),
            q0: casc.q0,
            q1: None,
            q2: None,
            q_ell: None,
            q_u: None,
            mu_param: None,
            path_weight_psi: None,
            lambda0_coupling: lambda0_coupling(lambda),
            psi_n,
            m_c,
            p_c,
            omega: None,
            c: None,
            kappa: None,
            provenance: Provenance::Direct,
        })
    }

    /// Checks the defining residuals and probability ranges.
    pub fn validate(&self) -> Result<(), NumericsError> {
        let nf = self.n as f64;
        let resid = (self.psi_n * (-self.psi_n).exp() - 2.0 / nf).abs() / (2.0 / nf);
        if self.psi_n < 1.0 || resid > 1e-12 {
            return Err(NumericsError::Range {
                name: "psi_n",
                value: self.psi_n,
                range: "psi e^-psi = 2/n to 1e-12",
            });
        }
        let odds = self.lambda * (-nf * self.lambda * self.lambda / 2.0).exp();
        let q0_ref = odds_to_prob(odds);
        if !(0.0..1.0).contains(&self.q0)
            || (self.q0 - q0_ref).abs() > 1e-12 * q0_ref.max(f64::MIN_POSITIVE)
        {
            return Err(NumericsError::Range {
                name: "q0",
                value: self.q0,
                range: "q0/(1-q0) = lambda e^{-n lambda^2/2} to 1e-12",
            });
        }
        let quartic = (1.0 - self.lambda0_coupling).powi(4)
            * (1.0 + 4.0 * self.lambda + 2.0 * self.lambda * self.lambda);
        if (quartic - 1.0).abs() > 1e-12 {
            return Err(NumericsError::Range {
                name: "lambda0_coupling",
                value: self.lambda0_coupling,
                range: "(1-l0)^4 (1+4l+2l^2) = 1 to 1e-12",
            });
        }
        for (name, v) in [
            ("p", Some(self.p)),
            ("q0", Some(self.q0)),
            ("q1", self.q1),
            ("q2", self.q2),
            ("q_ell", self.q_ell),
            ("q_u", self.q_u),
        ] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(NumericsError::Range {
                        name,
                        value: v,
                        range: "[0, 1]",
                    });
                }
            }
        }
        Ok(())
    }
}

/// Parameters for the 3-to-4 window at offset `omega`:
/// `p = p_c + n^{-2/3} (log n)^{-1/3} omega`.
pub fn params_for_window3(n: u64, omega: f64) -> Result<ThresholdParams, NumericsError> {
    let nf = n as f64;
    let (_, p_c) = window3_center(nf)?;
    let p = p_c + nf.powf(-2.0 / 3.0) * nf.ln().powf(-1.0 / 3.0) * omega;
    if !(0.0 < p && p < 1.0) {
        return Err(NumericsError::Range {
            name: "p",
            value: p,
            range: "(0, 1)",
        });
    }
    let lambda = p / (1.0 - p);
    let mut tp = ThresholdParams::from_lambda(n, lambda)?;
    tp.p = p;
    tp.omega = Some(omega);
    tp.provenance = Provenance::Window3;
    Ok(tp)
}

/// Parameters for the 4-to-5 window at `c in (0, 1)`.
///
/// The fugacity is the unique value on the decreasing branch for which the
/// cascade output satisfies `q2 = 2c/n` exactly; the resulting `p` equals
/// `sqrt((log n + log log n - 2 log(2c) + o(1)) / n)`. Also fills the
/// sandwich probabilities `q_ell = q2 (1 - n^{-2/5})`, `q_u = q2 (1 + n^{-2/5})`.
pub fn params_for_window4(n: u64, c: f64) -> Result<ThresholdParams, NumericsError> {
    if !(0.0 < c && c < 1.0) {
        return Err(NumericsError::Range {
            name: "c",
            value: c,
            range: "(0, 1)",
        });
    }
    if n < 3 {
        return Err(NumericsError::Domain(n as f64));
    }
    let nf = n as f64;
    let target = 2.0 * c / nf;
    // Scan for a bracket on the large-lambda (decreasing) branch, then bisect.
    let q2_at = |lambda: f64| cascade(nf, lambda).q2;
    let lam_max = 0.9f64;
    let lam_min = 1e-9f64;
    let steps = 4000;
    let ratio = (lam_max / lam_min).powf(1.0 / steps as f64);
    let mut hi = lam_max; // q2(hi) < target side
    let mut lo = f64::NAN;
    let mut lam = lam_max;
    for _ in 0..steps {
        let next = lam / ratio;
        if q2_at(next) >= target {
            lo = next;
            hi = lam;
            break;
        }
        lam = next;
    }
    if !lo.is_finite() {
        return Err(NumericsError::NoBracket(target));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q2_at(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut tp = ThresholdParams::from_lambda(n, lambda)?;
    let casc = cascade(nf, lambda);
    let shift = nf.powf(-0.4);
    tp.q1 = Some(casc.q1);
    tp.q2 = Some(casc.q2);
    tp.q_ell = Some(casc.q2 * (1.0 - shift));
    tp.q_u = Some(casc.q2 * (1.0 + shift));
    tp.mu_param = Some(casc.mu);
    tp.path_weight_psi = Some(casc.path_weight_psi);
    tp.c = Some(c);
    tp.provenance = Provenance::Window4;
    for v in [tp.q1.unwrap(), tp.q2.unwrap(), tp.q_u.unwrap()] {
        if !(0.0..1.0).contains(&v) {
            return Err(NumericsError::Range {
                name: "q",
                value: v,
                range: "[0, 1)",
            });
        }
    }
    Ok(tp)
}

/// Fugacity matched to the fixed edge count `m`:
/// `lambda = l0 + l0^2 + (l0^2 n - 1) l0 e^{-l0^2 n/2}` with `l0 = 4m/n^2`.
pub fn lambda_of_m(n: u64, m_edges: u64) -> Result<f64, NumericsError> {
    let nf = n as f64;
    let mf = m_edges as f64;
    if !(mf > 0.0 && mf < nf * nf / 4.0) {
        return Err(NumericsError::Range {
            name: "m_edges",
            value: mf,
            range: "(0, n^2/4)",
        });
    }
    let l0 = 4.0 * mf / (nf * nf);
    Ok(l0 + l0 * l0 + (l0 * l0 * nf - 1.0) * l0 * (-l0 * l0 * nf / 2.0).exp())
}

/// Full parameter point for the fixed-m model.
pub fn params_for_fixed_m(n: u64, m_edges: u64) -> Result<ThresholdParams, NumericsError> {
    let lambda = lambda_of_m(n, m_edges)?;
    let mut tp = ThresholdParams::from_lambda(n, lambda)?;
    tp.m_edges = Some(m_edges);
    tp.provenance = Provenance::FixedM;
    Ok(tp)
}

/// Limiting probability of 4-colorability inside the 4-to-5 window:
/// `((1-c)/(1+c))^{1/2} exp(-c - c^3/3)`, with endpoint limits 1 and 0.
pub fn chi4_limit_probability(c: f64) -> Result<f64, NumericsError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(NumericsError::Range {
            name: "c",
            value: c,
            range: "[0, 1]",
        });
    }
    if c == 0.0 {
        return Ok(1.0);
    }
    if c == 1.0 {
        return Ok(0.0);
    }
    Ok(((1.0 - c) / (1.0 + c)).sqrt() * (-c - c * c * c / 3.0).exp())
}

/// Limiting probability that two independent cycle-intensity-`c` defect
/// graphs, each conditioned triangle-free, are both bipartite, evaluated
/// directly from the Poisson odd-cycle sums:
/// `exp(-2 sum_{odd k >= 5} c^k / 2k) = ((1-c)/(1+c))^{1/2} exp(c + c^3/3)`.
///
/// This is the same quantity [`chi4_limit_probability`] targets; the two
/// differ by the sign of the exponential factor, and simulation matches this
/// cycle-sum version (strictly decreasing from 1 to 0 as well).
pub fn chi4_limit_probability_cycle_sum(c: f64) -> Result<f64, NumericsError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(NumericsError::Range {
            name: "c",
            value: c,
            range: "[0, 1]",
        });
    }
    if c == 0.0 {
        return Ok(1.0);
    }
    if c == 1.0 {
        return Ok(0.0);
    }
    Ok(((1.0 - c) / (1.0 + c)).sqrt() * (c + c * c * c / 3.0).exp())
}

/// 2-SAT window parameter `kappa = (2 (NM)^{1/2} q - 1) (NM)^{1/6}`.
pub fn kappa_of(n_vars: u64, m_vars: u64, clause_prob: f64) -> f64 {
    let nm = n_vars as f64 * m_vars as f64;
    (2.0 * nm.sqrt() * clause_prob - 1.0) * nm.powf(1.0 / 6.0)
}

/// Clause probability realizing a given `kappa` at `(N, M)`:
/// `q = (1 + kappa (NM)^{-1/6}) / (2 (NM)^{1/2})`.
pub fn clause_prob_for_kappa(n_vars: u64, m_vars: u64, kappa: f64) -> Result<f64, NumericsError> {
    let nm = n_vars as f64 * m_vars as f64;
    let q = (1.0 + kappa * nm.powf(-1.0 / 6.0)) / (2.0 * nm.sqrt());
    if !(0.0..=1.0).contains(&q) {
        return Err(NumericsError::Range {
            name: "q",
            value: q,
            range: "[0, 1]",
        });
    }
    Ok(q)
}
