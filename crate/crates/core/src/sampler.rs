//! The planted-bipartition graph samplers and a small-n rejection oracle.
//!
//! All three samplers share the same skeleton: draw the part-size tilt
//! `zeta`, a uniform part `A`, sparse defect graphs on each side, then the
//! crossing edges from the hard-core model on the defect product (or a
//! fixed-size uniform independent set for the fixed-edge-count model). The
//! abort paths prescribed by the model definitions are preserved verbatim
//! and surfaced as flags, never silently resampled.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphcore::{is_triangle_free_edges, PlantedGraph};
use crate::hardcore::{
    product_structure, sample_hardcore, sample_uniform_indset_fixed_size, HardcoreError,
};
use crate::numerics::ThresholdParams;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("parameters missing for model: {0}")]
    MissingParams(&'static str),
    #[error("oracle acceptance estimated below {min_acceptance:e} (n = {n}, p = {p})")]
    OracleHopeless {
        n: u32,
        p: f64,
        min_acceptance: f64,
    },
    #[error("oracle gave up after {attempts} attempts (acceptance estimate {est:e})")]
    OracleBudget { attempts: u64, est: f64 },
    #[error(transparent)]
    Hardcore(#[from] HardcoreError),
}

/// Which sampler to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerModel {
    MuLambda1,
    MuLambda2,
    MuM1,
    RejectionOracle,
}

/// Law of the defect graphs in the low-density sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DefectLaw {
    /// ER(q2) resampled until triangle-free (default; justified by the
    /// sandwich coupling between `q_ell` and `q_u`).
    ErConditioned,
    /// Edge-flip Metropolis chain targeting the exponential weight
    /// `(q2/(1-q2))^{e(H)} exp(psi P2(H))` on triangle-free, degree-capped
    /// graphs; for sensitivity analysis only.
    ExponentialMcmc { burn_in_sweeps: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub model: SamplerModel,
    pub params: ThresholdParams,
    pub defect_law: DefectLaw,
    pub seed: u64,
    /// Tail cut for the part-size tilt: `P[zeta = t] ~ (1+lambda)^{-t^2}`
    /// truncated at `|t| <= T` with tail mass below 1e-12.
    pub zeta_truncation: u32,
}

impl SamplerConfig {
    pub fn new(model: SamplerModel, params: ThresholdParams, seed: u64) -> Self {
        let t = zeta_truncation_for(params.lambda);
        SamplerConfig {
            model,
            params,
            defect_law: DefectLaw::ErConditioned,
            seed,
            zeta_truncation: t,
        }
    }
}

/// `T = ceil(sqrt(30 / log(1+lambda)))`, giving tail mass < e^{-30}.
pub fn zeta_truncation_for(lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 1;
    }
    (30.0 / (1.0 + lambda).ln()).sqrt().ceil() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbortReason {
    /// `zeta` fell outside `[-ceil(n/2), floor(n/2)]`.
    ZetaOutOfRange,
    /// A defect graph contained a triangle (high-density sampler only).
    DefectTriangle,
    /// Fixed-size target `m - |S| - |T|` negative or unreachable.
    InfeasibleTarget,
}

/// Mixing diagnostics from the Metropolis defect path; reported, with no
/// exactness claim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcDiagnostics {
    pub acceptance_rate: f64,
    pub p2_trace: Vec<u64>,
    pub degree_cap: u32,
}

/// One sampler draw: the graph, the abort flag, and path diagnostics.
#[derive(Debug, Clone)]
pub struct Sample {
    pub graph: PlantedGraph,
    pub abort: Option<AbortReason>,
    /// Rejection rounds spent conditioning each defect graph (mu_lambda_2
    /// and mu_m_1 paths).
    pub defect_rejections: u64,
    /// Degree-cap violations observed on the ER-conditioned path.
    pub degree_cap_violations: u64,
    pub mcmc: Option<McmcDiagnostics>,
}

/// Draws `zeta` from `P[zeta = t] ~ (1+lambda)^{-t^2}`, truncated at `|t| <= T`.
pub fn sample_zeta<R: Rng>(lambda: f64, truncation: u32, rng: &mut R) -> i64 {
    assert!(lambda > 0.0, "zeta tilt needs lambda > 0");
    let t = truncation as i64;
    let base = (1.0 + lambda).ln();
    let weights: Vec<f64> = (-t..=t)
        .map(|k| (-(k * k) as f64 * base).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i as i64 - t;
        }
        u -= w;
    }
    t
}

/// Sparse Erdos-Renyi edges on the given vertex set by geometric skipping
/// over the pair index space.
pub fn sample_er_edges<R: Rng>(vertices: &[u32], q: f64, rng: &mut R) -> Vec<(u32, u32)> {
    let k = vertices.len() as u64;
    let count = k * k.saturating_sub(1) / 2;
    let mut out = Vec::new();
    if count == 0 || q <= 0.0 {
        return out;
    }
    if q >= 1.0 {
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                out.push((vertices[i], vertices[j]));
            }
        }
        return out;
    }
    let geo = Geometric::new(q).expect("q in (0,1)");
    let mut pos: u64 = 0;
    loop {
        let skip = geo.sample(rng);
        pos = match pos.checked_add(skip) {
            Some(p) => p,
            None => break,
        };
        if pos >= count {
            break;
        }
        let (i, j) = pair_from_index(k, pos);
        out.push((vertices[i as usize], vertices[j as usize]));
        pos += 1;
    }
    out
}

/// Inverts the row-major linear index over pairs `(i, j)` with `i < j < k`.
fn pair_from_index(k: u64, idx: u64) -> (u64, u64) {
    // Row i starts at offset i*k - i*(i+1)/2 - i... solve approximately then
    // fix up exactly.
    let kf = k as f64;
    let mut i = (kf - 0.5 - ((kf - 0.5) * (kf - 0.5) - 2.0 * idx as f64).max(0.0).sqrt())
        .floor()
        .max(0.0) as u64;
    let row_start = |i: u64| i * k - i * (i + 1) / 2;
    while i + 1 < k && row_start(i + 1) <= idx {
        i += 1;
    }
    while i > 0 && row_start(i) > idx {
        i -= 1;
    }
    let j = idx - row_start(i) + i + 1;
    debug_assert!(i < j && j < k);
    (i, j)
}

/// Uniform subset of `0..n` of the given size via partial Fisher-Yates.
fn uniform_subset<R: Rng>(n: u32, size: u32, rng: &mut R) -> Vec<u32> {
    let mut all: Vec<u32> = (0..n).collect();
    let (chosen, _) = all.partial_shuffle(rng, size as usize);
    let mut v = chosen.to_vec();
    v.sort_unstable();
    v
}

fn split_parts<R: Rng>(
    n: u32,
    lambda: f64,
    truncation: u32,
    rng: &mut R,
) -> Result<(Vec<u32>, Vec<u32>), AbortReason> {
    let zeta = sample_zeta(lambda, truncation, rng);
    let half_floor = (n / 2) as i64;
    let half_ceil = n as i64 - half_floor;
    if zeta > half_floor || zeta < -half_ceil {
        return Err(AbortReason::ZetaOutOfRange);
    }
    let size_a = (half_floor - zeta) as u32;
    let part_a = uniform_subset(n, size_a, rng);
    let in_a: std::collections::HashSet<u32> = part_a.iter().copied().collect();
    let part_b: Vec<u32> = (0..n).filter(|v| !in_a.contains(v)).collect();
    Ok((part_a, part_b))
}

/// High-density sampler: aborts to the empty graph on a defect triangle.
pub fn sample_mu_lambda_1<R: Rng>(config: &SamplerConfig, rng: &mut R) -> Result<Sample, SamplerError> {
    let p = &config.params;
    let n = p.n as u32;
    let (part_a, part_b) = match split_parts(n, p.lambda, config.zeta_truncation, rng) {
        Ok(parts) => parts,
        Err(reason) => return Ok(abort_sample(n, reason)),
    };
    let s_edges = sample_er_edges(&part_a, p.q0, rng);
    let t_edges = sample_er_edges(&part_b, p.q0, rng);
    // Re-check rather than assume: abort exactly as the model specifies.
    if !is_triangle_free_edges(n, &s_edges) || !is_triangle_free_edges(n, &t_edges) {
        return Ok(abort_sample(n, AbortReason::DefectTriangle));
    }
    let ps = product_structure(n, &part_a, &s_edges, &part_b, &t_edges);
    let cr = sample_hardcore(&ps, p.lambda, rng)?;
    let graph = PlantedGraph::new(n, part_a, s_edges, t_edges, cr).expect("sampler output valid");
    Ok(Sample {
        graph,
        abort: None,
        defect_rejections: 0,
        degree_cap_violations: 0,
        mcmc: None,
    })
}

fn abort_sample(n: u32, reason: AbortReason) -> Sample {
    Sample {
        graph: PlantedGraph::empty(n, vec![]),
        abort: Some(reason),
        defect_rejections: 0,
        degree_cap_violations: 0,
        mcmc: None,
    }
}

/// ER(q) on the vertex set conditioned on triangle-freeness by rejection.
/// Returns the edges and the number of rejected rounds.
fn sample_er_conditioned<R: Rng>(
    n: u32,
    vertices: &[u32],
    q: f64,
    rng: &mut R,
) -> (Vec<(u32, u32)>, u64) {
    let mut rejections = 0;
    loop {
        let edges = sample_er_edges(vertices, q, rng);
        if is_triangle_free_edges(n, &edges) {
            return (edges, rejections);
        }
        rejections += 1;
    }
}

/// Low-density sampler with exponential defect graphs.
///
/// Default path approximates the exponential law by `ER(q2)` conditioned on
/// triangle-freeness (sandwiched between the `q_ell` and `q_u` conditioned
/// laws); degree-cap violations are recorded as diagnostics. The MCMC path
/// targets the exponential weight directly and reports mixing diagnostics.
pub fn sample_mu_lambda_2<R: Rng>(config: &SamplerConfig, rng: &mut R) -> Result<Sample, SamplerError> {
    mu_lambda_2_impl(config, rng, true)
}

/// Steps 1-3 of the low-density sampler only: part split and defect graphs,
/// with the crossing edges left empty. Sufficient for statistics that read
/// the defect graphs alone (bipartiteness, component structure).
pub fn sample_mu_lambda_2_defects<R: Rng>(
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<Sample, SamplerError> {
    mu_lambda_2_impl(config, rng, false)
}

fn mu_lambda_2_impl<R: Rng>(
    config: &SamplerConfig,
    rng: &mut R,
    with_crossing: bool,
) -> Result<Sample, SamplerError> {
    let p = &config.params;
    let q2 = p.q2.ok_or(SamplerError::MissingParams("q2"))?;
    let psi = p
        .path_weight_psi
        .ok_or(SamplerError::MissingParams("path_weight_psi"))?;
    let n = p.n as u32;
    let (part_a, part_b) = match split_parts(n, p.lambda, config.zeta_truncation, rng) {
        Ok(parts) => parts,
        Err(reason) => return Ok(abort_sample(n, reason)),
    };
    let cap = degree_cap(q2, n);
    let mut rejections = 0;
    let mut cap_violations = 0;
    let mut mcmc = None;
    let (s_edges, t_edges) = match config.defect_law {
        DefectLaw::ErConditioned => {
            let (s, r1) = sample_er_conditioned(n, &part_a, q2, rng);
            let (t, r2) = sample_er_conditioned(n, &part_b, q2, rng);
            rejections = r1 + r2;
            cap_violations = count_cap_violations(n, &s, cap) + count_cap_violations(n, &t, cap);
            (s, t)
        }
        DefectLaw::ExponentialMcmc { burn_in_sweeps } => {
            let (s, d1) = sample_defect_mcmc(&part_a, q2, psi, cap, burn_in_sweeps, rng);
            let (t, d2) = sample_defect_mcmc(&part_b, q2, psi, cap, burn_in_sweeps, rng);
            mcmc = Some(McmcDiagnostics {
                acceptance_rate: 0.5 * (d1.acceptance_rate + d2.acceptance_rate),
                p2_trace: d1
                    .p2_trace
                    .iter()
                    .zip(&d2.p2_trace)
                    .map(|(a, b)| a + b)
                    .collect(),
                degree_cap: cap,
            });
            (s, t)
        }
    };
    let cr = if with_crossing {
        let ps = product_structure(n, &part_a, &s_edges, &part_b, &t_edges);
        sample_hardcore(&ps, p.lambda, rng)?
    } else {
        vec![]
    };
    let graph = PlantedGraph::new(n, part_a, s_edges, t_edges, cr).expect("sampler output valid");
    Ok(Sample {
        graph,
        abort: None,
        defect_rejections: rejections,
        degree_cap_violations: cap_violations,
        mcmc,
    })
}

/// `Delta(H) <= 50 max(q2 n, log n)`.
pub fn degree_cap(q2: f64, n: u32) -> u32 {
    (50.0 * (q2 * n as f64).max((n as f64).ln())).ceil() as u32
}

fn count_cap_violations(n: u32, edges: &[(u32, u32)], cap: u32) -> u64 {
    let mut deg = vec![0u32; n as usize];
    for &(u, v) in edges {
        deg[u as usize] += 1;
        deg[v as usize] += 1;
    }
    deg.iter().filter(|&&d| d > cap).count() as u64
}

/// Fixed-edge-count sampler: defect graphs ER(q0) conditioned triangle-free,
/// then a uniform independent set of exactly `m - |S| - |T|` crossing edges.
pub fn sample_mu_m_1<R: Rng>(config: &SamplerConfig, rng: &mut R) -> Result<Sample, SamplerError> {
    let p = &config.params;
    let m = p.m_edges.ok_or(SamplerError::MissingParams("m_edges"))?;
    let n = p.n as u32;
    if m == 0 {
        return Ok(Sample {
            graph: PlantedGraph::empty(n, vec![]),
            abort: None,
            defect_rejections: 0,
            degree_cap_violations: 0,
            mcmc: None,
        });
    }
    let (part_a, part_b) = match split_parts(n, p.lambda, config.zeta_truncation, rng) {
        Ok(parts) => parts,
        Err(reason) => return Ok(abort_sample(n, reason)),
    };
    let (s_edges, r1) = sample_er_conditioned(n, &part_a, p.q0, rng);
    let (t_edges, r2) = sample_er_conditioned(n, &part_b, p.q0, rng);
    let used = (s_edges.len() + t_edges.len()) as u64;
    if used > m {
        return Ok(abort_sample(n, AbortReason::InfeasibleTarget));
    }
    let ps = product_structure(n, &part_a, &s_edges, &part_b, &t_edges);
    let cr = match sample_uniform_indset_fixed_size(&ps, m - used, rng) {
        Ok(cr) => cr,
        Err(HardcoreError::Infeasible { .. }) => {
            return Ok(abort_sample(n, AbortReason::InfeasibleTarget))
        }
        Err(e) => return Err(e.into()),
    };
    let graph = PlantedGraph::new(n, part_a, s_edges, t_edges, cr).expect("sampler output valid");
    debug_assert_eq!(graph.edge_count() as u64, m);
    Ok(Sample {
        graph,
        abort: None,
        defect_rejections: r1 + r2,
        degree_cap_violations: 0,
        mcmc: None,
    })
}

/// Dispatches on the configured model.
pub fn sample<R: Rng>(config: &SamplerConfig, rng: &mut R) -> Result<Sample, SamplerError> {
    match config.model {
        SamplerModel::MuLambda1 => sample_mu_lambda_1(config, rng),
        SamplerModel::MuLambda2 => sample_mu_lambda_2(config, rng),
        SamplerModel::MuM1 => sample_mu_m_1(config, rng),
        SamplerModel::RejectionOracle => {
            let edges = sample_conditioned_oracle(
                config.params.n as u32,
                config.params.p,
                10_000_000,
                rng,
            )?;
            // The oracle has no planted structure; classify against part {}.
            let graph = PlantedGraph::new(config.params.n as u32, vec![], vec![], edges, vec![])
                .expect("oracle edges valid");
            Ok(Sample {
                graph,
                abort: None,
                defect_rejections: 0,
                degree_cap_violations: 0,
                mcmc: None,
            })
        }
    }
}

/// Ground-truth oracle: rejection sampling of `G(n, p)` until triangle-free.
pub fn sample_conditioned_oracle<R: Rng>(
    n: u32,
    p: f64,
    max_attempts: u64,
    rng: &mut R,
) -> Result<Vec<(u32, u32)>, SamplerError> {
    let nf = n as f64;
    let est = (-(nf * (nf - 1.0) * (nf - 2.0) / 6.0) * p * p * p).exp();
    if n > 64 && est < 1e-6 {
        return Err(SamplerError::OracleHopeless {
            n,
            p,
            min_acceptance: 1e-6,
        });
    }
    let vertices: Vec<u32> = (0..n).collect();
    for _ in 0..max_attempts {
        let edges = sample_er_edges(&vertices, p, rng);
        if is_triangle_free_edges(n, &edges) {
            return Ok(edges);
        }
    }
    Err(SamplerError::OracleBudget {
        attempts: max_attempts,
        est,
    })
}

/// Coupled pair of triangle-free-conditioned defect graphs at nested edge
/// probabilities, sharing per-attempt uniforms (each edge of the denser draw
/// is kept in the sparser one independently with probability `q_lo/q_hi`).
/// Returns both edge sets and whether the pair came out nested.
pub fn sample_defect_pair_coupled<R: Rng>(
    n: u32,
    vertices: &[u32],
    q_lo: f64,
    q_hi: f64,
    rng: &mut R,
) -> (Vec<(u32, u32)>, Vec<(u32, u32)>, bool) {
    assert!(q_lo <= q_hi);
    let keep = q_lo / q_hi;
    let mut lo_result: Option<Vec<(u32, u32)>> = None;
    let mut hi_result: Option<Vec<(u32, u32)>> = None;
    let mut nested_round = false;
    for round in 0..100_000 {
        let hi = sample_er_edges(vertices, q_hi, rng);
        let lo: Vec<(u32, u32)> = hi
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() < keep)
            .collect();
        let hi_ok = hi_result.is_none() && is_triangle_free_edges(n, &hi);
        let lo_ok = lo_result.is_none() && is_triangle_free_edges(n, &lo);
        if hi_ok {
            hi_result = Some(hi);
            if lo_ok {
                lo_result = Some(lo);
                nested_round = true;
            }
        } else if lo_ok {
            lo_result = Some(lo);
        }
        if lo_result.is_some() && hi_result.is_some() {
            let lo = lo_result.unwrap();
            let hi = hi_result.unwrap();
            let nested = nested_round || {
                let set: std::collections::HashSet<(u32, u32)> = hi.iter().copied().collect();
                lo.iter().all(|e| set.contains(e))
            };
            return (lo, hi, nested);
        }
        let _ = round;
    }
    unreachable!("triangle-free conditioning acceptance is bounded away from 0");
}

/// Metropolis edge-flip chain for the exponential defect law.
fn sample_defect_mcmc<R: Rng>(
    vertices: &[u32],
    q2: f64,
    psi: f64,
    cap: u32,
    burn_in_sweeps: u32,
    rng: &mut R,
) -> (Vec<(u32, u32)>, McmcDiagnostics) {
    let k = vertices.len();
    let pair_count = (k * k.saturating_sub(1) / 2) as u64;
    let odds = q2 / (1.0 - q2);
    let mut adj: Vec<std::collections::HashSet<u32>> = vec![Default::default(); k];
    let mut deg = vec![0u32; k];
    let mut p2: u64 = 0;
    let mut edges: std::collections::HashSet<(usize, usize)> = Default::default();
    let mut accepted = 0u64;
    let mut proposed = 0u64;
    let mut p2_trace = Vec::with_capacity(burn_in_sweeps as usize);
    for _ in 0..burn_in_sweeps {
        for _ in 0..pair_count {
            proposed += 1;
            let idx = rng.random_range(0..pair_count);
            let (i, j) = pair_from_index(k as u64, idx);
            let (i, j) = (i as usize, j as usize);
            if edges.contains(&(i, j)) {
                // Removal: delta P2 = -(deg i - 1) - (deg j - 1).
                let delta = (deg[i] - 1) as f64 + (deg[j] - 1) as f64;
                let ratio = (1.0 / odds) * (-psi * delta).exp();
                if ratio >= 1.0 || rng.random::<f64>() < ratio {
                    edges.remove(&(i, j));
                    adj[i].remove(&(j as u32));
                    adj[j].remove(&(i as u32));
                    deg[i] -= 1;
                    deg[j] -= 1;
                    p2 -= delta as u64;
                    accepted += 1;
                }
            } else {
                // Addition: forbidden if it closes a triangle or breaks the cap.
                if deg[i] + 1 > cap || deg[j] + 1 > cap {
                    continue;
                }
                let (small, large) = if adj[i].len() <= adj[j].len() {
                    (i, j)
                } else {
                    (j, i)
                };
                if adj[small].iter().any(|w| adj[large].contains(w)) {
                    continue;
                }
                let delta = deg[i] as f64 + deg[j] as f64;
                let ratio = odds * (psi * delta).exp();
                if ratio >= 1.0 || rng.random::<f64>() < ratio {
                    edges.insert((i, j));
                    adj[i].insert(j as u32);
                    adj[j].insert(i as u32);
                    deg[i] += 1;
                    deg[j] += 1;
                    p2 += delta as u64;
                    accepted += 1;
                }
            }
        }
        p2_trace.push(p2);
    }
    let mut out: Vec<(u32, u32)> = edges
        .iter()
        .map(|&(i, j)| (vertices[i], vertices[j]))
        .collect();
    out.sort_unstable();
    (
        out,
        McmcDiagnostics {
            acceptance_rate: accepted as f64 / proposed.max(1) as f64,
            p2_trace,
            degree_cap: cap,
        },
    )
}

/// Sidecar metadata emitted next to the edge-list file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub model: SamplerModel,
    pub seed: u64,
    pub params: ThresholdParams,
    pub abort: Option<AbortReason>,
    pub n_edges: usize,
    pub defect_rejections: u64,
    pub degree_cap_violations: u64,
    pub mcmc: Option<McmcDiagnostics>,
}

impl SampleMetadata {
    pub fn for_sample(config: &SamplerConfig, sample: &Sample) -> Self {
        SampleMetadata {
            model: config.model,
            seed: config.seed,
            params: config.params.clone(),
            abort: sample.abort,
            n_edges: sample.graph.edge_count(),
            defect_rejections: sample.defect_rejections,
            degree_cap_violations: sample.degree_cap_violations,
            mcmc: sample.mcmc.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::write_edge_list;
    use crate::numerics::{params_for_fixed_m, params_for_window3, params_for_window4};
    use crate::stats::chi_squared_gof;
    use crate::stream_rng;

    #[test]
    fn pair_index_roundtrip() {
        for k in [2u64, 3, 7, 100] {
            let mut idx = 0u64;
            for i in 0..k {
                for j in i + 1..k {
                    assert_eq!(pair_from_index(k, idx), (i, j));
                    idx += 1;
                }
            }
        }
    }

    #[test]
    fn er_edges_density() {
        let mut rng = stream_rng(1, 0);
        let vertices: Vec<u32> = (0..100).collect();
        let q = 0.03;
        let trials = 2000;
        let mut total = 0usize;
        for _ in 0..trials {
            total += sample_er_edges(&vertices, q, &mut rng).len();
        }
        let mean = total as f64 / trials as f64;
        let expect = 4950.0 * q;
        let sigma = (4950.0 * q * (1.0 - q) / trials as f64).sqrt();
        assert!((mean - expect).abs() < 4.0 * sigma, "{mean} vs {expect}");
        assert!(sample_er_edges(&vertices, 0.0, &mut rng).is_empty());
        assert_eq!(sample_er_edges(&vertices, 1.0, &mut rng).len(), 4950);
    }

    #[test]
    fn zeta_law_at_lambda_one() {
        // Weights at lambda = 1: 2^{-t^2}; P[0]:P[1]:P[2] = 1 : 1/2 : 1/16.
        let mut rng = stream_rng(2, 0);
        let trials = 200_000u64;
        let mut counts = std::collections::HashMap::new();
        let mut sum: i64 = 0;
        for _ in 0..trials {
            let z = sample_zeta(1.0, 6, &mut rng);
            *counts.entry(z).or_insert(0u64) += 1;
            sum += z;
        }
        let z_total: f64 = (-6i64..=6).map(|t| 2f64.powi((-t * t) as i32)).sum();
        let keys: Vec<i64> = (-6..=6).collect();
        let obs: Vec<u64> = keys.iter().map(|k| *counts.get(k).unwrap_or(&0)).collect();
        let probs: Vec<f64> = keys
            .iter()
            .map(|&t| 2f64.powi((-t * t) as i32) / z_total)
            .collect();
        let (stat, p) = chi_squared_gof(&obs, &probs, 5.0);
        assert!(p > 1e-4, "stat {stat} p {p}");
        // Symmetry: mean within 3 sigma of 0.
        let var: f64 = (-6i64..=6)
            .map(|t| (t * t) as f64 * 2f64.powi((-t * t) as i32) / z_total)
            .sum();
        let sigma_mean = (var / trials as f64).sqrt();
        assert!((sum as f64 / trials as f64).abs() < 3.0 * sigma_mean);

        // Large lambda: P[zeta = 0] = 1/(1 + 2/(1+lambda) + ...) -> 1.
        let mut zeros = 0;
        for _ in 0..1000 {
            if sample_zeta(1e4, 3, &mut rng) == 0 {
                zeros += 1;
            }
        }
        assert!(zeros >= 995, "zeros = {zeros}");
    }

    #[test]
    fn mu_lambda_1_structurally_sound() {
        let params = params_for_window3(400, 0.0).unwrap();
        let config = SamplerConfig::new(SamplerModel::MuLambda1, params, 7);
        let mut rng = stream_rng(config.seed, 0);
        for _ in 0..100 {
            let s = sample_mu_lambda_1(&config, &mut rng).unwrap();
            assert!(s.abort.is_none());
            assert!(s.graph.is_triangle_free());
            // Planted cut value is |E_cr| by construction.
            assert_eq!(s.graph.planted_cut_value(), s.graph.cr_edges().len());
        }
    }

    #[test]
    fn mu_lambda_1_defect_mean_matches_q0() {
        // Mean |S| over 1000 samples within 3 sigma of q0 n^2 / 8.
        let n = 2000u64;
        let params = params_for_window3(n, 0.0).unwrap();
        let expect = params.q0 * (n * n) as f64 / 8.0;
        let config = SamplerConfig::new(SamplerModel::MuLambda1, params, 11);
        let mut rng = stream_rng(config.seed, 0);
        let trials = 1000;
        let mut total = 0usize;
        let mut aborts = 0;
        for _ in 0..trials {
            let s = sample_mu_lambda_1(&config, &mut rng).unwrap();
            if s.abort.is_some() {
                aborts += 1;
                continue;
            }
            total += s.graph.s_edges().len();
        }
        assert_eq!(aborts, 0, "aborts must be vanishingly rare here");
        let mean = total as f64 / trials as f64;
        // |S| is Binomial-ish with mean ~ expect; sigma of the mean:
        let sigma = (expect / trials as f64).sqrt();
        assert!(
            (mean - expect).abs() < 3.0 * sigma + 0.01 * expect,
            "mean {mean} vs {expect}"
        );
    }

    #[test]
    fn mu_lambda_2_parts_balanced_and_triangle_free() {
        let params = params_for_window4(2000, 0.5).unwrap();
        let config = SamplerConfig::new(SamplerModel::MuLambda2, params, 3);
        let mut rng = stream_rng(config.seed, 0);
        for _ in 0..20 {
            let s = sample_mu_lambda_2(&config, &mut rng).unwrap();
            assert!(s.abort.is_none());
            assert!(s.graph.is_triangle_free());
            let half = 1000.0;
            let dev = (s.graph.part_a().len() as f64 - half).abs();
            // |A| = n/2 + O((n log n)^{1/4}); generous constant.
            assert!(dev < 8.0 * (2000.0f64 * 2000.0f64.ln()).powf(0.25));
        }
    }

    #[test]
    fn mu_m_1_exact_edge_count() {
        let n = 500u64;
        let m = 9000u64;
        let params = params_for_fixed_m(n, m).unwrap();
        let config = SamplerConfig::new(SamplerModel::MuM1, params, 5);
        let mut rng = stream_rng(config.seed, 0);
        for _ in 0..20 {
            let s = sample_mu_m_1(&config, &mut rng).unwrap();
            assert!(s.abort.is_none(), "unexpected abort");
            assert_eq!(s.graph.edge_count() as u64, m);
            assert!(s.graph.is_triangle_free());
        }
    }

    #[test]
    fn mu_m_1_zero_edges_is_empty() {
        let mut params = params_for_fixed_m(500, 1000).unwrap();
        params.m_edges = Some(0);
        let config = SamplerConfig::new(SamplerModel::MuM1, params, 5);
        let mut rng = stream_rng(5, 0);
        let s = sample_mu_m_1(&config, &mut rng).unwrap();
        assert_eq!(s.graph.edge_count(), 0);
        assert!(s.abort.is_none());
    }

    #[test]
    fn mu_m_1_crossing_mean() {
        // mean |E_cr| = m - E|S| - E|T|; E|S| ~ q0 C(|A|,2).
        let n = 500u64;
        let m = 9000u64;
        let params = params_for_fixed_m(n, m).unwrap();
        let q0 = params.q0;
        let config = SamplerConfig::new(SamplerModel::MuM1, params, 17);
        let mut rng = stream_rng(config.seed, 0);
        let trials = 300;
        let mut cr_total = 0usize;
        for _ in 0..trials {
            let s = sample_mu_m_1(&config, &mut rng).unwrap();
            cr_total += s.graph.cr_edges().len();
        }
        let e_defect = 2.0 * q0 * (n as f64 / 2.0) * (n as f64 / 2.0 - 1.0) / 2.0;
        let expect = m as f64 - e_defect;
        let mean = cr_total as f64 / trials as f64;
        let sigma = (e_defect / trials as f64).sqrt() + 1e-9;
        assert!(
            (mean - expect).abs() < 4.0 * sigma + 0.002 * expect,
            "mean {mean} vs {expect}"
        );
    }

    #[test]
    fn oracle_trivial_and_tv_against_enumeration() {
        let mut rng = stream_rng(6, 0);
        // p = 0: empty graph first attempt.
        assert!(sample_conditioned_oracle(5, 0.0, 10, &mut rng)
            .unwrap()
            .is_empty());
        // n = 3, p = 1/2: uniform over the 7 triangle-free graphs weighted by
        // p^e (1-p)^{3-e}; at p = 1/2 all 8 graphs equal weight, K3 removed,
        // so each of the 7 has probability 1/7.
        let trials = 1_000_000u64;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..trials {
            let mut edges = sample_conditioned_oracle(3, 0.5, 1000, &mut rng).unwrap();
            edges.sort_unstable();
            *counts.entry(edges).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 7);
        let tv: f64 = counts
            .values()
            .map(|&c| (c as f64 / trials as f64 - 1.0 / 7.0).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.005, "TV distance {tv}");
        // Output always triangle-free.
        for _ in 0..50 {
            let edges = sample_conditioned_oracle(10, 0.3, 100_000, &mut rng).unwrap();
            assert!(is_triangle_free_edges(10, &edges));
        }
    }

    #[test]
    fn oracle_rejects_hopeless_parameters() {
        let mut rng = stream_rng(7, 0);
        assert!(matches!(
            sample_conditioned_oracle(1000, 0.5, 10, &mut rng),
            Err(SamplerError::OracleHopeless { .. })
        ));
    }

    #[test]
    fn seed_determinism_byte_for_byte() {
        let params = params_for_window3(300, 1.0).unwrap();
        let config = SamplerConfig::new(SamplerModel::MuLambda1, params, 99);
        let run = || {
            let mut rng = stream_rng(config.seed, 0);
            let s = sample_mu_lambda_1(&config, &mut rng).unwrap();
            let mut buf = Vec::new();
            write_edge_list(&s.graph, &mut buf).unwrap();
            buf
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn abort_frequency_negligible_at_window_params() {
        let params = params_for_window3(2000, 0.0).unwrap();
        let config = SamplerConfig::new(SamplerModel::MuLambda1, params, 23);
        let mut rng = stream_rng(config.seed, 0);
        let mut aborts = 0;
        for _ in 0..2000 {
            if sample_mu_lambda_1(&config, &mut rng).unwrap().abort.is_some() {
                aborts += 1;
            }
        }
        assert_eq!(aborts, 0);
    }

    #[test]
    fn sandwich_coupling_mostly_nested() {
        // q_ell, q_u around q2 = 2c/n at modest c: nested in >= 99% of draws.
        let n = 1500u32;
        let params = params_for_window4(n as u64, 0.25).unwrap();
        let vertices: Vec<u32> = (0..n / 2).collect();
        let (q_lo, q_hi) = (params.q_ell.unwrap(), params.q_u.unwrap());
        let mut rng = stream_rng(8, 0);
        let trials = 600;
        let mut nested = 0;
        for _ in 0..trials {
            let (lo, hi, is_nested) =
                sample_defect_pair_coupled(n, &vertices, q_lo, q_hi, &mut rng);
            assert!(is_triangle_free_edges(n, &lo));
            assert!(is_triangle_free_edges(n, &hi));
            if is_nested {
                nested += 1;
            }
        }
        let frac = nested as f64 / trials as f64;
        assert!(frac >= 0.99, "nested fraction {frac}");
    }

    #[test]
    fn mcmc_matches_conditioned_er_when_psi_zero() {
        // With psi = 0 and a loose cap, the exponential law reduces to
        // ER(q2) conditioned on triangle-freeness; compare edge-count laws.
        let vertices: Vec<u32> = (0..8).collect();
        let q2 = 0.15;
        let mut rng = stream_rng(9, 0);
        let samples = 3000;
        let mut h_mcmc = vec![0u64; 29];
        let mut h_er = vec![0u64; 29];
        for _ in 0..samples {
            let (edges, _) = sample_defect_mcmc(&vertices, q2, 0.0, 100, 60, &mut rng);
            h_mcmc[edges.len()] += 1;
            let (edges, _) = sample_er_conditioned(8, &vertices, q2, &mut rng);
            h_er[edges.len()] += 1;
        }
        let (stat, p) = crate::stats::chi_squared_two_sample(&h_mcmc, &h_er, 20);
        assert!(p > 1e-4, "stat {stat} p {p}");
    }

    #[test]
    fn fidelity_diagnostic_small_n() {
        // Empirical law of (|S|+|T|, |E_cr|, bipartite) under mu_lambda_1 vs
        // the conditioned oracle at n = 12. Diagnostic: the theorem backing
        // the sampler is asymptotic, so only gross disagreement fails.
        let n = 12u32;
        let lambda = 0.3;
        let params = crate::numerics::ThresholdParams::from_lambda(n as u64, lambda).unwrap();
        let config = SamplerConfig::new(SamplerModel::MuLambda1, params, 31);
        let mut rng = stream_rng(config.seed, 0);
        let trials = 30_000u64;
        let mut h1 = std::collections::HashMap::new();
        let mut h2 = std::collections::HashMap::new();
        let key = |edges: &[(u32, u32)], n: u32| {
            let mc = crate::graphcore::max_cut_exact(n, edges).unwrap();
            let in_a: std::collections::HashSet<u32> = mc.part_a.iter().copied().collect();
            let mut s_t = 0usize;
            let mut cr = 0usize;
            for &(u, v) in edges {
                if in_a.contains(&u) == in_a.contains(&v) {
                    s_t += 1;
                } else {
                    cr += 1;
                }
            }
            let bip = crate::graphcore::is_bipartite(n, edges).is_bipartite();
            (s_t, cr, bip)
        };
        for _ in 0..trials {
            let s = sample_mu_lambda_1(&config, &mut rng).unwrap();
            let edges: Vec<(u32, u32)> = s.graph.edges().collect();
            *h1.entry(key(&edges, n)).or_insert(0u64) += 1;
            let edges = sample_conditioned_oracle(n, lambda / (1.0 + lambda), 1_000_000, &mut rng)
                .unwrap();
            *h2.entry(key(&edges, n)).or_insert(0u64) += 1;
        }
        let mut tv = 0.0;
        let keys: std::collections::HashSet<_> = h1.keys().chain(h2.keys()).collect();
        for k in keys {
            let a = *h1.get(k).unwrap_or(&0) as f64 / trials as f64;
            let b = *h2.get(k).unwrap_or(&0) as f64 / trials as f64;
            tv += (a - b).abs() / 2.0;
        }
        eprintln!("sampler fidelity diagnostic at n=12, lambda=0.3: TV = {tv:.4}");
        assert!(tv < 0.5, "gross disagreement: TV = {tv}");
    }
}
