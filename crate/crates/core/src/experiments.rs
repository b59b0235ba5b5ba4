//! Batch experiment drivers behind the CLI: window sweeps for 3- and
//! 4-colorability, the bipartite 2-SAT window, a pinned-seed validation
//! suite, and CSV/JSON table emission.
//!
//! Every row carries its parameters, seed, trial count, estimate, Wilson 95%
//! interval and wall time. Trials fan out over a work-stealing pool but each
//! trial owns a stream keyed by (sweep index, trial index), and aggregation
//! is integer counting, so reruns with the same seed reproduce every
//! estimate exactly.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coloring::{decide_chi3_pipeline, decide_chi4_structural, Chi3Verdict};
use crate::numerics::{
    chi4_limit_probability, clause_prob_for_kappa, params_for_window3, params_for_window4,
    NumericsError,
};
use crate::sampler::{
    sample_mu_lambda_1, sample_mu_lambda_2_defects, SamplerConfig, SamplerError, SamplerModel,
};
use crate::stats::wilson_interval;
use crate::stream_rng;
use crate::twosat::{decide_sat, decode_clause, BipartiteFormula};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    Window3,
    Window4,
    SatWindow,
    Validate,
    Sample,
}

/// One experiment request as assembled by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub n: u64,
    /// Second variable bank for the 2-SAT window (defaults to `n`).
    pub m_vars: Option<u64>,
    /// Sweep values: omega for window3, c for window4, kappa for sat-window.
    pub sweep: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub format: OutputFormat,
    pub budget_seconds: Option<f64>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials < 1 {
            return Err(ExperimentError::Invalid("trials must be >= 1".into()));
        }
        if self.sweep.is_empty() && !matches!(self.kind, ExperimentKind::Validate) {
            return Err(ExperimentError::Invalid("sweep must be non-empty".into()));
        }
        Ok(())
    }
}

/// One table row of a window experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowRow {
    /// omega, c or kappa depending on the experiment.
    pub sweep_value: f64,
    pub n: u64,
    pub m_vars: Option<u64>,
    pub trials: u64,
    pub successes: u64,
    /// Successes over non-violating trials.
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// Aborts plus assumption violations, excluded from the denominator.
    pub violations: u64,
    /// Limit-formula value where one applies (window4).
    pub formula_value: Option<f64>,
    pub seed: u64,
    pub wall_secs: f64,
}

fn finish_row(
    sweep_value: f64,
    n: u64,
    m_vars: Option<u64>,
    successes: u64,
    violations: u64,
    trials: u64,
    formula_value: Option<f64>,
    seed: u64,
    started: Instant,
) -> WindowRow {
    let effective = trials - violations;
    let estimate = if effective > 0 {
        successes as f64 / effective as f64
    } else {
        f64::NAN
    };
    let (lo, hi) = wilson_interval(successes, effective.max(1));
    WindowRow {
        sweep_value,
        n,
        m_vars,
        trials,
        successes,
        estimate,
        wilson_lo: lo,
        wilson_hi: hi,
        violations,
        formula_value,
        seed,
        wall_secs: started.elapsed().as_secs_f64(),
    }
}

/// Scales the trial count down when the projected wall time exceeds the
/// budget, warning on stderr.
fn autoscale_trials(
    requested: u64,
    per_trial_secs: f64,
    points: u64,
    budget_seconds: Option<f64>,
) -> u64 {
    let Some(budget) = budget_seconds else {
        return requested;
    };
    let projected = per_trial_secs * requested as f64 * points as f64;
    if projected <= budget {
        return requested;
    }
    let scaled = ((budget / (per_trial_secs * points as f64)) as u64).max(10);
    eprintln!(
        "warning: projected {projected:.0}s exceeds budget {budget:.0}s; \
         scaling trials {requested} -> {scaled}"
    );
    scaled.min(requested)
}

/// 3-colorability fraction across an omega sweep at fixed `n`.
///
/// Per trial: one high-density sample and the full pipeline verdict. Trials
/// share stream indices across omegas (coupled seeds).
pub fn run_window3(
    n: u64,
    omegas: &[f64],
    trials: u64,
    seed: u64,
    budget_seconds: Option<f64>,
) -> Result<Vec<WindowRow>, ExperimentError> {
    let mut rows = Vec::with_capacity(omegas.len());
    let mut trials_eff = trials;
    for (w_idx, &omega) in omegas.iter().enumerate() {
        let started = Instant::now();
        let params = params_for_window3(n, omega)?;
        let config = SamplerConfig::new(SamplerModel::MuLambda1, params, seed);
        if w_idx == 0 {
            let probe = Instant::now();
            let mut rng = stream_rng(seed, u64::MAX);
            let s = sample_mu_lambda_1(&config, &mut rng)?;
            let _ = decide_chi3_pipeline(&s.graph);
            let per_trial = probe.elapsed().as_secs_f64();
            trials_eff = autoscale_trials(trials, per_trial, omegas.len() as u64, budget_seconds);
        }
        let outcomes: Vec<(bool, bool)> = (0..trials_eff)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(seed, t);
                let s = sample_mu_lambda_1(&config, &mut rng).expect("sampler");
                if s.abort.is_some() {
                    return (false, true);
                }
                match decide_chi3_pipeline(&s.graph) {
                    Chi3Verdict::AssumptionViolated { .. } => (false, true),
                    v => (v.is_three_colorable_verdict(), false),
                }
            })
            .collect();
        let successes = outcomes.iter().filter(|&&(s, v)| s && !v).count() as u64;
        let violations = outcomes.iter().filter(|&&(_, v)| v).count() as u64;
        rows.push(finish_row(
            omega, n, None, successes, violations, trials_eff, None, seed, started,
        ));
    }
    Ok(rows)
}

/// P[both defect graphs bipartite] across a `c` sweep at fixed `n`, with the
/// limit formula attached.
///
/// The verdict depends only on the defect stage of the low-density sampler,
/// so crossing edges are not drawn here.
pub fn run_window4(
    n: u64,
    cs: &[f64],
    trials: u64,
    seed: u64,
    budget_seconds: Option<f64>,
) -> Result<Vec<WindowRow>, ExperimentError> {
    let mut rows = Vec::with_capacity(cs.len());
    let mut trials_eff = trials;
    for (c_idx, &c) in cs.iter().enumerate() {
        let started = Instant::now();
        let params = params_for_window4(n, c)?;
        let config = SamplerConfig::new(SamplerModel::MuLambda2, params, seed);
        if c_idx == 0 {
            let probe = Instant::now();
            let mut rng = stream_rng(seed, u64::MAX);
            let s = sample_mu_lambda_2_defects(&config, &mut rng)?;
            let _ = decide_chi4_structural(&s.graph);
            let per_trial = probe.elapsed().as_secs_f64();
            trials_eff = autoscale_trials(trials, per_trial, cs.len() as u64, budget_seconds);
        }
        let outcomes: Vec<(bool, bool)> = (0..trials_eff)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(seed, t);
                let s = sample_mu_lambda_2_defects(&config, &mut rng).expect("sampler");
                if s.abort.is_some() {
                    return (false, true);
                }
                let verdict = decide_chi4_structural(&s.graph);
                (verdict.is_four_colorable_certificate(), false)
            })
            .collect();
        let successes = outcomes.iter().filter(|&&(s, v)| s && !v).count() as u64;
        let violations = outcomes.iter().filter(|&&(_, v)| v).count() as u64;
        rows.push(finish_row(
            c,
            n,
            None,
            successes,
            violations,
            trials_eff,
            Some(chi4_limit_probability(c)?),
            seed,
            started,
        ));
    }
    Ok(rows)
}

/// P[SAT] across a kappa sweep at `(N, M)` variables.
///
/// Formulas across the sweep are coupled pathwise per trial: each candidate
/// clause carries a uniform birthday, and the kappa-q formula keeps the
/// clauses born before its probability, so the satisfiability indicator is
/// monotone along the sweep within every trial.
pub fn run_sat_window(
    n_vars: u64,
    m_vars: u64,
    kappas: &[f64],
    trials: u64,
    seed: u64,
    budget_seconds: Option<f64>,
) -> Result<Vec<WindowRow>, ExperimentError> {
    let mut kappas_sorted = kappas.to_vec();
    kappas_sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let qs: Vec<f64> = kappas_sorted
        .iter()
        .map(|&k| clause_prob_for_kappa(n_vars, m_vars, k))
        .collect::<Result<_, _>>()?;
    let q_max = *qs.last().expect("non-empty sweep");
    let started_all = Instant::now();
    let probe = Instant::now();
    {
        let mut rng = stream_rng(seed, u64::MAX);
        let flags = sat_sweep_trial(n_vars, m_vars, &qs, q_max, &mut rng);
        debug_assert_eq!(flags.len(), qs.len());
    }
    let trials_eff = autoscale_trials(
        trials,
        probe.elapsed().as_secs_f64(),
        1,
        budget_seconds,
    );
    let per_kappa: Vec<u64> = (0..trials_eff)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            sat_sweep_trial(n_vars, m_vars, &qs, q_max, &mut rng)
        })
        .reduce(
            || vec![0u64; qs.len()],
            |mut acc, flags| {
                for (a, f) in acc.iter_mut().zip(flags) {
                    *a += f;
                }
                acc
            },
        );
    let mut rows = Vec::with_capacity(qs.len());
    for (i, &kappa) in kappas_sorted.iter().enumerate() {
        rows.push(finish_row(
            kappa,
            n_vars,
            Some(m_vars),
            per_kappa[i],
            0,
            trials_eff,
            None,
            seed,
            started_all,
        ));
    }
    Ok(rows)
}

/// One coupled sweep trial: SAT flags per q (ascending), as 0/1 counts.
fn sat_sweep_trial<R: rand::Rng>(
    n_vars: u64,
    m_vars: u64,
    qs: &[f64],
    q_max: f64,
    rng: &mut R,
) -> Vec<u64> {
    use rand_distr::{Binomial, Distribution};
    let slots = 4 * n_vars * m_vars;
    let k_max = if q_max >= 1.0 {
        slots
    } else {
        Binomial::new(slots, q_max).expect("params").sample(rng)
    };
    let mut seen = std::collections::HashSet::with_capacity(2 * k_max as usize);
    let mut births: Vec<(f64, u64)> = Vec::with_capacity(k_max as usize);
    while (births.len() as u64) < k_max {
        let idx = rng.random_range(0..slots);
        if seen.insert(idx) {
            births.push((rng.random::<f64>() * q_max, idx));
        }
    }
    births.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut flags = vec![0u64; qs.len()];
    let mut sat_so_far = true;
    for (i, &q) in qs.iter().enumerate() {
        if !sat_so_far {
            // Monotone: once UNSAT, denser formulas stay UNSAT.
            continue;
        }
        let cut = births.partition_point(|&(b, _)| b <= q);
        let clauses: Vec<_> = births[..cut]
            .iter()
            .map(|&(_, idx)| decode_clause(idx, m_vars as u32))
            .collect();
        let f = BipartiteFormula::new(n_vars as u32, m_vars as u32, clauses)
            .expect("distinct generated clauses");
        if decide_sat(&f).is_sat() {
            flags[i] = 1;
        } else {
            sat_so_far = false;
        }
    }
    flags
}

/// CSV emission; one row per sweep point.
pub fn write_rows_csv<W: Write>(rows: &[WindowRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "sweep_value,n,m_vars,trials,successes,estimate,wilson_lo,wilson_hi,\
         violations,formula_value,seed,wall_secs"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{:.6},{:.6},{:.6},{},{},{},{:.3}",
            r.sweep_value,
            r.n,
            r.m_vars.map_or(String::new(), |m| m.to_string()),
            r.trials,
            r.successes,
            r.estimate,
            r.wilson_lo,
            r.wilson_hi,
            r.violations,
            r.formula_value
                .map_or(String::new(), |v| format!("{v:.6}")),
            r.seed,
            r.wall_secs,
        )?;
    }
    Ok(())
}

pub fn write_rows_json<W: Write>(rows: &[WindowRow], w: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(w, rows).map_err(std::io::Error::other)
}

/// One block of the validation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationBlock {
    pub name: String,
    pub pass: bool,
    pub details: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub blocks: Vec<ValidationBlock>,
    pub all_pass: bool,
    /// FNV-1a over the deterministic block content.
    pub report_hash: String,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Pinned-seed property suite across every module; deterministic report.
pub fn run_validate(seed: u64) -> ValidationReport {
    let mut blocks: Vec<ValidationBlock> = Vec::new();
    let mut push = |name: &str, pass: bool, details: String| {
        blocks.push(ValidationBlock {
            name: name.to_string(),
            pass,
            details,
        });
    };

    // Lambert threshold residuals.
    {
        let mut worst: f64 = 0.0;
        for i in 0..=40 {
            let n = 10.0f64 * 10f64.powf(7.0 * i as f64 / 40.0);
            let psi = crate::numerics::lambert_psi(n).unwrap();
            let rel = (psi * (-psi).exp() - 2.0 / n).abs() / (2.0 / n);
            worst = worst.max(rel);
        }
        push(
            "lambert-residual",
            worst <= 1e-12,
            format!("worst relative residual {worst:.2e}"),
        );
    }

    // SAT decision vs exhaustive search.
    {
        let mut rng = stream_rng(seed, 1);
        let mut agree = true;
        for trial in 0..1000 {
            let q = [0.05, 0.1, 0.3][trial % 3];
            let f = crate::twosat::gen_formula(5, 6, q, &mut rng);
            let fast = decide_sat(&f).is_sat();
            let slow = crate::twosat::brute_force_sat(&f).is_some();
            if fast != slow {
                agree = false;
                break;
            }
        }
        push(
            "sat-oracle-agreement",
            agree,
            "1000 random formulas vs exhaustive search".into(),
        );
    }

    // Green-edge coloring equals SAT.
    {
        let mut rng = stream_rng(seed, 2);
        let mut agree = true;
        for _ in 0..400 {
            let g = random_planted_for_validation(&mut rng);
            let fast = crate::coloring::decide_green_edge_coloring(&g)
                .unwrap()
                .is_colorable();
            let slow = crate::coloring::brute_force_gec_exists(&g).unwrap();
            if fast != slow {
                agree = false;
                break;
            }
        }
        push(
            "gec-equals-sat",
            agree,
            "400 planted instances vs endpoint enumeration".into(),
        );
    }

    // Hard-core C4 law.
    {
        let mut rng = stream_rng(seed, 3);
        let ps = crate::hardcore::product_structure(4, &[0, 1], &[(0, 1)], &[2, 3], &[(2, 3)]);
        let lambda = 0.3;
        let z = 1.0 + 4.0 * lambda + 2.0 * lambda * lambda;
        let mut counts = [0u64; 3];
        for _ in 0..100_000 {
            let cfg = crate::hardcore::sample_hardcore(&ps, lambda, &mut rng).unwrap();
            counts[cfg.len()] += 1;
        }
        let probs = [
            1.0 / z,
            4.0 * lambda / z,
            2.0 * lambda * lambda / z,
        ];
        let (_, p) = crate::stats::chi_squared_gof(&counts, &probs, 5.0);
        push(
            "hardcore-c4-law",
            p > 1e-4,
            format!("chi-squared p = {p:.6}"),
        );
    }

    // Coupling marginals and subset property.
    {
        let mut rng = stream_rng(seed, 4);
        let lambda = 0.1;
        let coupler =
            crate::coupling::C4Coupler::new(lambda, crate::numerics::lambda0_coupling(lambda))
                .unwrap();
        let mut e_counts = [0u64; 7];
        let mut subset_ok = true;
        for _ in 0..100_000 {
            let out = coupler.draw(&mut rng);
            let idx = match out.hardcore_config {
                crate::coupling::C4Outcome::Empty => 0,
                crate::coupling::C4Outcome::Single(c) => 1 + c as usize,
                crate::coupling::C4Outcome::Diagonal(d) => 5 + d as usize,
            };
            e_counts[idx] += 1;
            if out.success {
                let m = out.hardcore_config.mask();
                if m & out.independent_config != m {
                    subset_ok = false;
                }
            }
        }
        let (_, p) = crate::stats::chi_squared_gof(&e_counts, coupler.marginal_hardcore(), 5.0);
        push(
            "coupling-marginals",
            p > 1e-4 && subset_ok,
            format!("chi-squared p = {p:.6}, subset property {subset_ok}"),
        );
    }

    // Digraph skew symmetry.
    {
        let mut rng = stream_rng(seed, 5);
        let ok = (0..100).all(|_| {
            let f = crate::twosat::gen_formula(8, 8, 0.08, &mut rng);
            crate::twosat::ImplicationDigraph::from_formula(&f).is_skew_symmetric()
        });
        push("digraph-skew-symmetry", ok, "100 random formulas".into());
    }

    // Spine strictly distinct iff SAT.
    {
        let mut rng = stream_rng(seed, 6);
        let mut ok = true;
        for _ in 0..500 {
            let f = crate::twosat::gen_formula(6, 6, 0.1, &mut rng);
            let sp = crate::twosat::spine(&f, 1000).unwrap();
            if crate::twosat::strictly_distinct(&sp) != decide_sat(&f).is_sat() {
                ok = false;
                break;
            }
        }
        push("spine-criterion", ok, "500 random formulas".into());
    }

    // Counting ground truth at small sizes.
    {
        let mut ok = true;
        for (k, l) in [(2u32, 2u32), (2, 3), (3, 3), (2, 5)] {
            let t = crate::enumeration::count_connected_bipartite(k, l).unwrap();
            if t.counts[0] != crate::enumeration::BipConnTable::tree_count_formula(k, l) {
                ok = false;
            }
            let rec = crate::enumeration::connected_table_recursive(k, l);
            if rec != t {
                ok = false;
            }
        }
        push(
            "counting-ground-truth",
            ok,
            "tree counts and dual-route tables at small (k,l)".into(),
        );
    }

    // Exploration law vs BFS law.
    {
        let mut rng = stream_rng(seed, 7);
        let trials = 30_000u64;
        let mut h1 = vec![0u64; 21 * 22];
        let mut h2 = vec![0u64; 21 * 22];
        for _ in 0..trials {
            let (a, b) = crate::branching::run_exploration(20, 20, 0.05, &mut rng).side_sizes();
            h1[(a * 21 + b) as usize] += 1;
            let (a, b) = crate::branching::cluster_side_sizes_bfs(20, 20, 0.05, &mut rng);
            h2[(a * 21 + b) as usize] += 1;
        }
        let (_, p) = crate::stats::chi_squared_two_sample(&h1, &h2, 20);
        push(
            "exploration-law",
            p > 1e-4,
            format!("two-sample chi-squared p = {p:.6}"),
        );
    }

    // Fixed-size sampler uniformity on one C4.
    {
        let mut rng = stream_rng(seed, 8);
        let ps = crate::hardcore::product_structure(4, &[0, 1], &[(0, 1)], &[2, 3], &[(2, 3)]);
        let mut first = 0u64;
        let trials = 40_000u64;
        for _ in 0..trials {
            let mut cfg =
                crate::hardcore::sample_uniform_indset_fixed_size(&ps, 2, &mut rng).unwrap();
            cfg.sort_unstable();
            if cfg == vec![(0, 2), (1, 3)] {
                first += 1;
            }
        }
        let est = first as f64 / trials as f64;
        push(
            "fixed-size-uniformity",
            (est - 0.5).abs() < 0.02,
            format!("diagonal frequency {est:.4}"),
        );
    }

    let all_pass = blocks.iter().all(|b| b.pass);
    let canonical = blocks
        .iter()
        .map(|b| format!("{}:{}:{}", b.name, b.pass, b.details))
        .collect::<Vec<_>>()
        .join("|");
    ValidationReport {
        seed,
        blocks,
        all_pass,
        report_hash: format!("{:016x}", fnv1a(canonical.as_bytes())),
    }
}

fn random_planted_for_validation<R: rand::Rng>(rng: &mut R) -> crate::graphcore::PlantedGraph {
    let ka = 8u32;
    let ns = rng.random_range(1..=3u32);
    let nt = rng.random_range(1..=3u32);
    let s: Vec<(u32, u32)> = (0..ns).map(|i| (2 * i, 2 * i + 1)).collect();
    let t: Vec<(u32, u32)> = (0..nt).map(|j| (ka + 2 * j, ka + 2 * j + 1)).collect();
    let mut cr = Vec::new();
    for a in 0..2 * ns {
        for b in 0..2 * nt {
            if rng.random::<f64>() < 0.35 {
                cr.push((a, ka + b));
            }
        }
    }
    crate::graphcore::PlantedGraph::new(16, (0..ka).collect(), s, t, cr).unwrap()
}
