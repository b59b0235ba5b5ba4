//! Karp-style bipartite exploration: two Binomial thinning chains whose
//! first simultaneous zero of the seen-but-unexplored counts reproduces the
//! law of the component side-sizes in a bipartite random graph.
//!
//! With `N_0 = n - 1`, `N_t ~ Binom(N_{t-1}, 1 - p)` and `M_0 = m`,
//! `M_t ~ Binom(M_{t-1}, 1 - p)`, set `X_{r,s} = n - N_r - s` and
//! `Y_{r,s} = m - M_s - r`; the hitting pair `(r*, s*)` minimizing `r + s`
//! with `X = Y = 0` corresponds to the exploration finishing with `s`
//! left-side and `r` right-side vertices explored, i.e. the left-side count
//! of the cluster is `s*` and the right-side count is `r*`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// The thinning chains and the hitting pair of one exploration run.
#[derive(Debug, Clone)]
pub struct ExplorationTrace {
    /// `N_0 ..= N_{r_max}` with `N_0 = n - 1`.
    pub n_chain: Vec<u64>,
    /// `M_0 ..= M_{s_max}` with `M_0 = m`.
    pub m_chain: Vec<u64>,
    /// `(r*, s*)`: first (minimal `r + s`, ties to smallest `r`) with
    /// `X_{r,s} = Y_{r,s} = 0`.
    pub hit: (u64, u64),
}

impl ExplorationTrace {
    /// Cluster side sizes under the exploration-table semantics:
    /// left-side (A) count is `s*`, right-side (B) count is `r*`.
    pub fn side_sizes(&self) -> (u64, u64) {
        (self.hit.1, self.hit.0)
    }
}

/// Cached per-size binomial samplers for one thinning probability.
struct Thinner {
    dists: Vec<Option<Binomial>>,
    keep: f64,
}

impl Thinner {
    fn new(max: u64, p_tilde: f64) -> Self {
        let keep = 1.0 - p_tilde;
        let dists = (0..=max)
            .map(|k| {
                if k == 0 || keep <= 0.0 || keep >= 1.0 {
                    None
                } else {
                    Some(Binomial::new(k, keep).expect("binomial params"))
                }
            })
            .collect();
        Thinner { dists, keep }
    }
    fn step<R: Rng>(&self, prev: u64, rng: &mut R) -> u64 {
        if prev == 0 || self.keep <= 0.0 {
            return 0;
        }
        if self.keep >= 1.0 {
            return prev;
        }
        self.dists[prev as usize]
            .as_ref()
            .expect("built for range")
            .sample(rng)
    }
}

/// Runs both thinning chains and scans anti-diagonals `r + s = 0, 1, ...`
/// for the first `X = Y = 0`, ties broken by smallest `r`.
pub fn run_exploration<R: Rng>(n: u64, m: u64, p_tilde: f64, rng: &mut R) -> ExplorationTrace {
    assert!((0.0..=1.0).contains(&p_tilde));
    assert!(n >= 1);
    let thin = Thinner::new((n - 1).max(m), p_tilde);
    let mut n_chain = vec![n - 1];
    for _ in 0..m {
        let next = thin.step(*n_chain.last().unwrap(), rng);
        n_chain.push(next);
    }
    let mut m_chain = vec![m];
    for _ in 0..n {
        let next = thin.step(*m_chain.last().unwrap(), rng);
        m_chain.push(next);
    }
    let x = |r: u64, s: u64| n as i64 - n_chain[r as usize] as i64 - s as i64;
    let y = |r: u64, s: u64| m as i64 - m_chain[s as usize] as i64 - r as i64;
    for d in 0..=(n + m) {
        for r in 0..=d.min(m) {
            let s = d - r;
            if s > n {
                continue;
            }
            if x(r, s) == 0 && y(r, s) == 0 {
                return ExplorationTrace {
                    n_chain,
                    m_chain,
                    hit: (r, s),
                };
            }
        }
    }
    unreachable!("a monotone self-map on a finite lattice has a fixed point");
}

/// Coupled explorations across a sorted probability grid sharing per-round
/// uniforms, so the survivor sets are nested and the chains monotone.
pub fn run_exploration_coupled<R: Rng>(
    n: u64,
    m: u64,
    p_grid: &[f64],
    rng: &mut R,
) -> Vec<(u64, u64)> {
    assert!(p_grid.windows(2).all(|w| w[0] <= w[1]));
    let rounds = (n + m) as usize;
    let max_width = ((n - 1).max(m)) as usize;
    // One row of uniforms per thinning round, shared across the grid.
    let u_n: Vec<Vec<f64>> = (0..rounds)
        .map(|_| (0..max_width).map(|_| rng.random::<f64>()).collect())
        .collect();
    let u_m: Vec<Vec<f64>> = (0..rounds)
        .map(|_| (0..max_width).map(|_| rng.random::<f64>()).collect())
        .collect();
    p_grid
        .iter()
        .map(|&p| {
            let mut n_chain = vec![n - 1];
            for t in 0..m as usize {
                let prev = *n_chain.last().unwrap() as usize;
                let next = u_n[t][..prev].iter().filter(|&&u| u >= p).count() as u64;
                n_chain.push(next);
            }
            let mut m_chain = vec![m];
            for t in 0..n as usize {
                let prev = *m_chain.last().unwrap() as usize;
                let next = u_m[t][..prev].iter().filter(|&&u| u >= p).count() as u64;
                m_chain.push(next);
            }
            let x = |r: u64, s: u64| n as i64 - n_chain[r as usize] as i64 - s as i64;
            let y = |r: u64, s: u64| m as i64 - m_chain[s as usize] as i64 - r as i64;
            for d in 0..=(n + m) {
                for r in 0..=d.min(m) {
                    let s = d - r;
                    if s > n {
                        continue;
                    }
                    if x(r, s) == 0 && y(r, s) == 0 {
                        return (r, s);
                    }
                }
            }
            unreachable!()
        })
        .collect()
}

/// Direct BFS reference: samples `G(n, m, p_tilde)` and returns the
/// component side sizes `(a_count, b_count)` of the first left vertex.
pub fn cluster_side_sizes_bfs<R: Rng>(
    n: u64,
    m: u64,
    p_tilde: f64,
    rng: &mut R,
) -> (u64, u64) {
    assert!(n >= 1);
    // Sparse bipartite edge generation by geometric skipping.
    let total = n * m;
    let mut adj_a: Vec<Vec<u32>> = vec![Vec::new(); n as usize];
    let mut adj_b: Vec<Vec<u32>> = vec![Vec::new(); m as usize];
    if p_tilde >= 1.0 {
        for a in 0..n as usize {
            for b in 0..m as usize {
                adj_a[a].push(b as u32);
                adj_b[b].push(a as u32);
            }
        }
    } else if p_tilde > 0.0 {
        let geo = rand_distr::Geometric::new(p_tilde).expect("p in (0,1)");
        let mut pos = 0u64;
        loop {
            let skip = geo.sample(rng);
            pos = match pos.checked_add(skip) {
                Some(p) => p,
                None => break,
            };
            if pos >= total {
                break;
            }
            let (a, b) = ((pos / m) as usize, (pos % m) as usize);
            adj_a[a].push(b as u32);
            adj_b[b].push(a as u32);
            pos += 1;
        }
    }
    let mut seen_a = vec![false; n as usize];
    let mut seen_b = vec![false; m as usize];
    seen_a[0] = true;
    let mut count_a = 1u64;
    let mut count_b = 0u64;
    let mut queue_a = vec![0u32];
    let mut queue_b: Vec<u32> = Vec::new();
    while !queue_a.is_empty() || !queue_b.is_empty() {
        if let Some(a) = queue_a.pop() {
            for &b in &adj_a[a as usize] {
                if !seen_b[b as usize] {
                    seen_b[b as usize] = true;
                    count_b += 1;
                    queue_b.push(b);
                }
            }
        }
        if let Some(b) = queue_b.pop() {
            for &a in &adj_b[b as usize] {
                if !seen_a[a as usize] {
                    seen_a[a as usize] = true;
                    count_a += 1;
                    queue_a.push(a);
                }
            }
        }
    }
    (count_a, count_b)
}

/// Exact hitting-pair law by enumeration of every chain path; reference
/// oracle for tiny `(n, m)`.
pub fn exact_hit_law(n: u64, m: u64, p_tilde: f64) -> std::collections::HashMap<(u64, u64), f64> {
    use std::collections::HashMap;
    let keep = 1.0 - p_tilde;
    let binom_pmf = |n: u64, k: u64| {
        let ln = crate::stats::ln_binomial(n, k)
            + k as f64 * keep.max(1e-300).ln()
            + (n - k) as f64 * (1.0 - keep).max(1e-300).ln();
        if keep == 0.0 {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        } else if keep == 1.0 {
            if k == n {
                1.0
            } else {
                0.0
            }
        } else {
            ln.exp()
        }
    };
    // Enumerate monotone chains with their probabilities.
    fn chains(start: u64, steps: u64, pmf: &dyn Fn(u64, u64) -> f64) -> Vec<(Vec<u64>, f64)> {
        let mut out: Vec<(Vec<u64>, f64)> = vec![(vec![start], 1.0)];
        for _ in 0..steps {
            let mut next = Vec::new();
            for (chain, prob) in out {
                let last = *chain.last().unwrap();
                for k in 0..=last {
                    let mut c = chain.clone();
                    c.push(k);
                    next.push((c, prob * pmf(last, k)));
                }
            }
            out = next;
        }
        out
    }
    let n_chains = chains(n - 1, m, &binom_pmf);
    let m_chains = chains(m, n, &binom_pmf);
    let mut law: HashMap<(u64, u64), f64> = HashMap::new();
    for (nc, pn) in &n_chains {
        for (mc, pm) in &m_chains {
            let x = |r: u64, s: u64| n as i64 - nc[r as usize] as i64 - s as i64;
            let y = |r: u64, s: u64| m as i64 - mc[s as usize] as i64 - r as i64;
            'scan: for d in 0..=(n + m) {
                for r in 0..=d.min(m) {
                    let s = d - r;
                    if s > n {
                        continue;
                    }
                    if x(r, s) == 0 && y(r, s) == 0 {
                        *law.entry((r, s)).or_insert(0.0) += pn * pm;
                        break 'scan;
                    }
                }
            }
        }
    }
    law
}
