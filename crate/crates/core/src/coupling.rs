//! Explicit per-4-cycle coupling between the hard-core crossing-edge law and
//! an independent Bernoulli vertex set, with success accounting.
//!
//! On each 4-cycle of the defect product the hard-core law has seven
//! outcomes (empty, four singles, two diagonals) with normalizer
//! `1 + 4 lambda + 2 lambda^2`; the independent law places each of the four
//! vertices with probability `lambda0 = 1 - (1+4l+2l^2)^{-1/4}`, which makes
//! the two empty-set masses equal exactly. A concrete maximal-overlap joint
//! table is built once and sampled by inverse CDF on a shared uniform; the
//! success rows pair each single with itself and its designated adjacent
//! pair, and each diagonal with itself.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::graphcore::PlantedGraph;
use crate::hardcore::product_structure;
use crate::twosat::{BipartiteFormula, Clause, TwoSatError};

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("marginal mass mismatch {0:e} exceeds 1e-12")]
    MarginalMismatch(f64),
    #[error("lambda = {0} outside (0, 0.2]")]
    LambdaRange(f64),
    #[error(transparent)]
    TwoSat(#[from] TwoSatError),
}

/// Hard-core outcomes on one 4-cycle. Corners are numbered
/// 0 = (u, w), 1 = (u, z), 2 = (v, w), 3 = (v, z) for defect edges
/// `e = (u, v)` and `f = (w, z)`; diagonals are {0,3} and {1,2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C4Outcome {
    Empty,
    Single(u8),
    Diagonal(u8), // 0 -> {0,3}, 1 -> {1,2}
}

impl C4Outcome {
    pub fn mask(&self) -> u8 {
        match *self {
            C4Outcome::Empty => 0,
            C4Outcome::Single(c) => 1 << c,
            C4Outcome::Diagonal(0) => 0b1001,
            C4Outcome::Diagonal(_) => 0b0110,
        }
    }
    fn from_index(i: usize) -> Self {
        match i {
            0 => C4Outcome::Empty,
            1..=4 => C4Outcome::Single(i as u8 - 1),
            5 => C4Outcome::Diagonal(0),
            _ => C4Outcome::Diagonal(1),
        }
    }
}

/// One coupled draw on a 4-cycle.
#[derive(Debug, Clone, Copy)]
pub struct C4CouplingOutcome {
    pub hardcore_config: C4Outcome,
    /// Independent Bernoulli set as a 4-bit corner mask.
    pub independent_config: u8,
    pub success: bool,
}

/// The designated adjacent-pair companion of each single corner:
/// 0 -> top {0,1}, 1 -> right {1,3}, 2 -> left {0,2}, 3 -> bottom {2,3}.
fn companion_mask(corner: u8) -> u8 {
    match corner {
        0 => 0b0011,
        1 => 0b1010,
        2 => 0b0101,
        _ => 0b1100,
    }
}

fn is_success(e: C4Outcome, x_mask: u8) -> bool {
    match e {
        C4Outcome::Empty => x_mask == 0,
        C4Outcome::Single(c) => x_mask == 1 << c || x_mask == companion_mask(c),
        C4Outcome::Diagonal(_) => x_mask == e.mask(),
    }
}

/// Precomputed joint table for repeated coupled draws at one `lambda`.
#[derive(Debug, Clone)]
pub struct C4Coupler {
    cum: Vec<f64>,
    cells: Vec<(usize, u8)>,
    fail_prob: f64,
    marginal_e: [f64; 7],
    marginal_x: [f64; 16],
}

impl C4Coupler {
    pub fn new(lambda: f64, lambda0: f64) -> Result<Self, CouplingError> {
        if !(0.0 < lambda && lambda <= 0.2) {
            return Err(CouplingError::LambdaRange(lambda));
        }
        let z = 1.0 + 4.0 * lambda + 2.0 * lambda * lambda;
        let quartic = (1.0 - lambda0).powi(4) * z;
        if (quartic - 1.0).abs() > 1e-12 {
            return Err(CouplingError::MarginalMismatch((quartic - 1.0).abs()));
        }
        let mut p_e = [0.0f64; 7];
        p_e[0] = 1.0 / z;
        for i in 1..=4 {
            p_e[i] = lambda / z;
        }
        p_e[5] = lambda * lambda / z;
        p_e[6] = lambda * lambda / z;
        let mut p_x = [0.0f64; 16];
        for (mask, px) in p_x.iter_mut().enumerate() {
            let k = (mask as u32).count_ones() as i32;
            *px = lambda0.powi(k) * (1.0 - lambda0).powi(4 - k);
        }
        // Fill success cells first (maximal overlap on the success structure),
        // then complete the transport plan northwest-corner style.
        let mut joint = vec![[0.0f64; 16]; 7];
        let mut row_rem = p_e;
        let mut col_rem = p_x;
        let put = |joint: &mut Vec<[f64; 16]>,
                       row_rem: &mut [f64; 7],
                       col_rem: &mut [f64; 16],
                       e: usize,
                       x: u8| {
            let amt = row_rem[e].min(col_rem[x as usize]);
            if amt > 0.0 {
                joint[e][x as usize] += amt;
                row_rem[e] -= amt;
                col_rem[x as usize] -= amt;
            }
        };
        put(&mut joint, &mut row_rem, &mut col_rem, 0, 0);
        for c in 0..4u8 {
            put(&mut joint, &mut row_rem, &mut col_rem, 1 + c as usize, 1 << c);
            put(
                &mut joint,
                &mut row_rem,
                &mut col_rem,
                1 + c as usize,
                companion_mask(c),
            );
        }
        put(&mut joint, &mut row_rem, &mut col_rem, 5, 0b1001);
        put(&mut joint, &mut row_rem, &mut col_rem, 6, 0b0110);
        for e in 0..7 {
            for x in 0..16u8 {
                put(&mut joint, &mut row_rem, &mut col_rem, e, x);
            }
        }
        let leftover: f64 =
            row_rem.iter().sum::<f64>().abs() + col_rem.iter().sum::<f64>().abs();
        if leftover > 1e-12 {
            return Err(CouplingError::MarginalMismatch(leftover));
        }
        let mut cum = Vec::with_capacity(112);
        let mut cells = Vec::with_capacity(112);
        let mut acc = 0.0;
        let mut fail = 0.0;
        for (e, row) in joint.iter().enumerate() {
            for (x, &mass) in row.iter().enumerate() {
                if mass > 0.0 {
                    acc += mass;
                    cum.push(acc);
                    cells.push((e, x as u8));
                    if !is_success(C4Outcome::from_index(e), x as u8) {
                        fail += mass;
                    }
                }
            }
        }
        if (acc - 1.0).abs() > 1e-12 {
            return Err(CouplingError::MarginalMismatch((acc - 1.0).abs()));
        }
        Ok(C4Coupler {
            cum,
            cells,
            fail_prob: fail,
            marginal_e: p_e,
            marginal_x: p_x,
        })
    }

    /// Exact failure probability of the coupling table.
    pub fn failure_probability(&self) -> f64 {
        self.fail_prob
    }

    pub fn marginal_hardcore(&self) -> &[f64; 7] {
        &self.marginal_e
    }

    pub fn marginal_independent(&self) -> &[f64; 16] {
        &self.marginal_x
    }

    /// One inverse-CDF draw on a shared uniform.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> C4CouplingOutcome {
        let u = rng.random::<f64>();
        let idx = match self
            .cum
            .binary_search_by(|probe| probe.partial_cmp(&u).expect("finite"))
        {
            Ok(i) | Err(i) => i.min(self.cells.len() - 1),
        };
        let (e, x) = self.cells[idx];
        let e_out = C4Outcome::from_index(e);
        C4CouplingOutcome {
            hardcore_config: e_out,
            independent_config: x,
            success: is_success(e_out, x),
        }
    }
}

/// Single coupled draw on one 4-cycle (builds the table; use [`C4Coupler`]
/// for repeated draws).
pub fn couple_c4<R: Rng>(
    lambda: f64,
    lambda0: f64,
    rng: &mut R,
) -> Result<C4CouplingOutcome, CouplingError> {
    Ok(C4Coupler::new(lambda, lambda0)?.draw(rng))
}

/// The coupled formula pair of a planted graph.
#[derive(Debug, Clone)]
pub struct CoupledFormulas {
    pub phi_ecr: BipartiteFormula,
    pub phi_x: BipartiteFormula,
    /// Per-4-cycle success flags, indexed by (s-edge, t-edge) in row-major
    /// order.
    pub c4_success: Vec<bool>,
    /// Count of isolated-pool and K2 components on which the maximally
    /// coupled point laws disagreed (diagnostic; these carry no clauses).
    pub non_c4_disagreements: u64,
}

impl CoupledFormulas {
    pub fn all_succeeded(&self) -> bool {
        self.c4_success.iter().all(|&s| s)
    }
}

/// Runs the per-4-cycle coupling over every square of the defect product at
/// the given fugacity and assembles the two formulas. When every cycle
/// succeeds, the hard-core formula's clause set is contained in the
/// independent one's.
pub fn coupled_formula_pair<R: Rng>(
    g: &PlantedGraph,
    lambda: f64,
    rng: &mut R,
) -> Result<CoupledFormulas, CouplingError> {
    let lambda0 = crate::numerics::lambda0_coupling(lambda);
    let coupler = C4Coupler::new(lambda, lambda0)?;
    let ps = product_structure(
        g.n_vertices(),
        g.part_a(),
        g.s_edges(),
        g.part_b(),
        g.t_edges(),
    );
    let corner_clause = |i: usize, j: usize, corner: u8| Clause {
        x_index: i as u32,
        y_index: j as u32,
        x_positive: corner < 2,
        y_positive: corner % 2 == 0,
    };
    let mut ecr_clauses = Vec::new();
    let mut x_clauses = Vec::new();
    let mut success = Vec::with_capacity(ps.edge_comps_a.len() * ps.edge_comps_b.len());
    for i in 0..ps.edge_comps_a.len() {
        for j in 0..ps.edge_comps_b.len() {
            let out = coupler.draw(rng);
            success.push(out.success);
            let e_mask = out.hardcore_config.mask();
            for corner in 0..4u8 {
                if e_mask >> corner & 1 == 1 {
                    ecr_clauses.push(corner_clause(i, j, corner));
                }
                if out.independent_config >> corner & 1 == 1 {
                    x_clauses.push(corner_clause(i, j, corner));
                }
            }
        }
    }
    // Point-law maximal couplings on the clause-free components: the
    // hard-core marginal lambda/(1+lambda) exceeds lambda0 there, so the
    // shared-uniform coupling disagrees with probability p_hc - lambda0 per
    // pool vertex, and with the closed-form defect below per K2.
    let p_hc = lambda / (1.0 + lambda);
    let pool_disagree = binom(ps.pool_count(), (p_hc - lambda0).max(0.0), rng);
    let k2_overlap = {
        let z = 1.0 + 2.0 * lambda;
        let both_empty = (1.0 / z).min((1.0 - lambda0) * (1.0 - lambda0));
        let each_single = (lambda / z).min(lambda0 * (1.0 - lambda0));
        both_empty + 2.0 * each_single
    };
    let k2_disagree = binom(ps.single_edge_count(), 1.0 - k2_overlap, rng);
    let nx = g.s_edges().len() as u32;
    let ny = g.t_edges().len() as u32;
    Ok(CoupledFormulas {
        phi_ecr: BipartiteFormula::new(nx, ny, ecr_clauses)?,
        phi_x: BipartiteFormula::new(nx, ny, x_clauses)?,
        c4_success: success,
        non_c4_disagreements: pool_disagree + k2_disagree,
    })
}

fn binom<R: Rng>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    Binomial::new(n, p.min(1.0)).expect("params").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::lambda0_coupling;
    use crate::stats::chi_squared_gof;
    use crate::stream_rng;

    #[test]
    fn empty_masses_align_exactly() {
        for &lambda in &[0.01, 0.05, 0.1, 0.2] {
            let lambda0 = lambda0_coupling(lambda);
            let z = 1.0 + 4.0 * lambda + 2.0 * lambda * lambda;
            assert!(((1.0 - lambda0).powi(4) - 1.0 / z).abs() < 1e-15);
            let coupler = C4Coupler::new(lambda, lambda0).unwrap();
            // P[E = empty, X = empty] equals both empties, so the coupling
            // never fails on the empty outcome.
            assert!(coupler.failure_probability() < 1.0);
        }
    }

    #[test]
    fn coupler_rejects_bad_lambda0() {
        assert!(matches!(
            C4Coupler::new(0.1, 0.1),
            Err(CouplingError::MarginalMismatch(_))
        ));
        assert!(matches!(
            C4Coupler::new(0.5, lambda0_coupling(0.5)),
            Err(CouplingError::LambdaRange(_))
        ));
    }

    #[test]
    fn marginals_exact_by_chi_squared() {
        let mut rng = stream_rng(1, 0);
        for &lambda in &[0.05, 0.1] {
            let coupler = C4Coupler::new(lambda, lambda0_coupling(lambda)).unwrap();
            let trials = 300_000u64;
            let mut e_counts = [0u64; 7];
            let mut x_counts = [0u64; 16];
            for _ in 0..trials {
                let out = coupler.draw(&mut rng);
                let e_idx = match out.hardcore_config {
                    C4Outcome::Empty => 0,
                    C4Outcome::Single(c) => 1 + c as usize,
                    C4Outcome::Diagonal(d) => 5 + d as usize,
                };
                e_counts[e_idx] += 1;
                x_counts[out.independent_config as usize] += 1;
            }
            let (stat_e, p_e) = chi_squared_gof(&e_counts, coupler.marginal_hardcore(), 5.0);
            assert!(p_e > 1e-4, "hard-core marginal stat {stat_e}, p {p_e}");
            let (stat_x, p_x) =
                chi_squared_gof(&x_counts, coupler.marginal_independent(), 5.0);
            assert!(p_x > 1e-4, "independent marginal stat {stat_x}, p {p_x}");
        }
    }

    #[test]
    fn success_implies_subset_and_strict_means_adjacent_pair() {
        let mut rng = stream_rng(2, 0);
        let coupler = C4Coupler::new(0.1, lambda0_coupling(0.1)).unwrap();
        let mut strict_seen = 0;
        for _ in 0..200_000 {
            let out = coupler.draw(&mut rng);
            if out.success {
                let e_mask = out.hardcore_config.mask();
                assert_eq!(e_mask & out.independent_config, e_mask, "subset");
                if out.independent_config != e_mask {
                    strict_seen += 1;
                    // Strict inclusion only through the adjacent-pair channel.
                    assert_eq!(out.independent_config.count_ones(), 2);
                    let m = out.independent_config;
                    let adjacent = [0b0011u8, 0b1100, 0b0101, 0b1010].contains(&m);
                    assert!(adjacent, "mask {m:04b} not an adjacent pair");
                }
            }
        }
        assert!(strict_seen > 0);
    }

    #[test]
    fn failure_rate_scales_like_lambda_cubed() {
        // Closed-form fit: K = fail / lambda^3 stable within a factor 2.
        let k_at = |lambda: f64| {
            let coupler = C4Coupler::new(lambda, lambda0_coupling(lambda)).unwrap();
            coupler.failure_probability() / (lambda * lambda * lambda)
        };
        let k1 = k_at(0.05);
        let k2 = k_at(0.1);
        assert!(k1 > 0.0 && k2 > 0.0);
        let ratio = (k1 / k2).max(k2 / k1);
        assert!(ratio < 2.0, "K(0.05) = {k1}, K(0.1) = {k2}");
        // Success probability tends to 1 as lambda -> 0.
        let coupler = C4Coupler::new(0.01, lambda0_coupling(0.01)).unwrap();
        assert!(coupler.failure_probability() < 1e-4);
    }

    #[test]
    fn formula_pair_no_squares_identical() {
        let mut rng = stream_rng(3, 0);
        // Defects on one side only: no 4-cycles, no clauses.
        let g = PlantedGraph::new(6, vec![0, 1, 2], vec![(0, 1)], vec![], vec![(2, 3)])
            .unwrap();
        let pair = coupled_formula_pair(&g, 0.1, &mut rng).unwrap();
        assert_eq!(pair.phi_ecr, pair.phi_x);
        assert!(pair.phi_ecr.clauses().is_empty());
        assert!(pair.c4_success.is_empty());
    }

    #[test]
    fn formula_pair_subset_and_sat_direction_on_success() {
        let mut rng = stream_rng(4, 0);
        let g = PlantedGraph::new(
            12,
            (0..6).collect(),
            vec![(0, 1), (2, 3), (4, 5)],
            vec![(6, 7), (8, 9), (10, 11)],
            vec![],
        )
        .unwrap();
        let mut successes = 0u64;
        let mut trials = 0u64;
        for _ in 0..2000 {
            let pair = coupled_formula_pair(&g, 0.1, &mut rng).unwrap();
            trials += 1;
            if pair.all_succeeded() {
                successes += 1;
                let x_set: std::collections::HashSet<_> =
                    pair.phi_x.clauses().iter().collect();
                for c in pair.phi_ecr.clauses() {
                    assert!(x_set.contains(c), "phi_ecr must embed in phi_x");
                }
                // Monotonicity: SAT(phi_x) implies SAT(phi_ecr).
                let sat_x = crate::twosat::decide_sat(&pair.phi_x).is_sat();
                let sat_e = crate::twosat::decide_sat(&pair.phi_ecr).is_sat();
                if sat_x {
                    assert!(sat_e);
                }
            }
        }
        // At lambda = 0.1 with 9 squares, most draws succeed everywhere.
        assert!(successes as f64 / trials as f64 > 0.9);
    }

    #[test]
    fn failure_count_mean_fits_union_bound() {
        // Mean number of failed squares ~ K |S||T| lambda^3 with the
        // closed-form K from the table.
        let mut rng = stream_rng(5, 0);
        let lambda = 0.1;
        let coupler = C4Coupler::new(lambda, lambda0_coupling(lambda)).unwrap();
        let per_square = coupler.failure_probability();
        let g = PlantedGraph::new(
            20,
            (0..10).collect(),
            vec![(0, 1), (2, 3), (4, 5), (6, 7)],
            vec![(10, 11), (12, 13), (14, 15), (16, 17)],
            vec![],
        )
        .unwrap();
        let trials = 30_000u64;
        let mut failures = 0u64;
        for _ in 0..trials {
            let pair = coupled_formula_pair(&g, lambda, &mut rng).unwrap();
            failures += pair.c4_success.iter().filter(|&&s| !s).count() as u64;
        }
        let expect = 16.0 * per_square;
        let mean = failures as f64 / trials as f64;
        let sigma = (expect / trials as f64).sqrt();
        assert!(
            (mean - expect).abs() < 4.0 * sigma + 0.01 * expect,
            "mean {mean} vs {expect}"
        );
    }
}
