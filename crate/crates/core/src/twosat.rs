//! Bipartite 2-SAT: formulas over two variable banks with one literal per
//! bank in every clause, the skew-symmetric implication digraph, SCC-based
//! satisfiability, spine and trimmed-outgraph machinery, cluster-law
//! estimators and hourglass detection.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::{self, BufRead, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphcore::PlantedGraph;

#[derive(Debug, Error)]
pub enum TwoSatError {
    #[error("formula invalid: {0}")]
    Invalid(String),
    #[error("defect component of size {0} exceeds the matching precondition")]
    DefectComponentTooLarge(usize),
    #[error("literal count {n} exceeds cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One bipartite clause: a literal over the X bank and one over the Y bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Clause {
    pub x_index: u32,
    pub y_index: u32,
    pub x_positive: bool,
    pub y_positive: bool,
}

/// A bipartite 2-SAT instance with `N` X-variables and `M` Y-variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteFormula {
    pub n_vars_x: u32,
    pub n_vars_y: u32,
    clauses: Vec<Clause>,
}

impl BipartiteFormula {
    pub fn new(n_vars_x: u32, n_vars_y: u32, mut clauses: Vec<Clause>) -> Result<Self, TwoSatError> {
        for c in &clauses {
            if c.x_index >= n_vars_x || c.y_index >= n_vars_y {
                return Err(TwoSatError::Invalid(format!("clause {c:?} out of range")));
            }
        }
        clauses.sort_unstable();
        if clauses.windows(2).any(|w| w[0] == w[1]) {
            return Err(TwoSatError::Invalid("duplicate clause".into()));
        }
        Ok(BipartiteFormula {
            n_vars_x,
            n_vars_y,
            clauses,
        })
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn n_literals(&self) -> usize {
        2 * (self.n_vars_x as usize + self.n_vars_y as usize)
    }

    /// True iff the assignment satisfies every clause.
    pub fn satisfied_by(&self, x_assign: &[bool], y_assign: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            x_assign[c.x_index as usize] == c.x_positive
                || y_assign[c.y_index as usize] == c.y_positive
        })
    }
}

/// Samples each of the `4NM` possible bipartite clauses independently with
/// probability `q`, via a Binomial count followed by uniform distinct
/// placement (equivalent in law).
pub fn gen_formula<R: Rng>(n_vars_x: u32, n_vars_y: u32, q: f64, rng: &mut R) -> BipartiteFormula {
    assert!((0.0..=1.0).contains(&q), "q must be a probability");
    let slots = 4 * n_vars_x as u64 * n_vars_y as u64;
    let k = if q == 1.0 {
        slots
    } else {
        Binomial::new(slots, q).expect("binomial params").sample(rng)
    };
    let clauses = if k == slots {
        (0..slots).map(|idx| decode_clause(idx, n_vars_y)).collect()
    } else {
        let mut seen = HashSet::with_capacity(k as usize * 2);
        let mut out = Vec::with_capacity(k as usize);
        while (out.len() as u64) < k {
            let idx = rng.random_range(0..slots);
            if seen.insert(idx) {
                out.push(decode_clause(idx, n_vars_y));
            }
        }
        out
    };
    BipartiteFormula::new(n_vars_x, n_vars_y, clauses).expect("generated clauses are valid")
}

/// Decodes a clause slot index in `[0, 4NM)` into a clause; the layout is
/// `((i * M + j) << 2) | (sx << 1) | sy`.
pub fn decode_clause(idx: u64, n_vars_y: u32) -> Clause {
    let sy = idx & 1 == 1;
    let sx = (idx >> 1) & 1 == 1;
    let rest = idx >> 2;
    Clause {
        x_index: (rest / n_vars_y as u64) as u32,
        y_index: (rest % n_vars_y as u64) as u32,
        x_positive: sx,
        y_positive: sy,
    }
}

/// Builds the formula encoding green-edge-colorability of a planted graph.
///
/// Variables are the defect edges: `S` is the X bank (indexed by position in
/// `g.s_edges()`), `T` the Y bank. Every crossing edge joining two
/// defect-incident endpoints emits one clause; the literal is positive
/// exactly when the endpoint is the smaller vertex of its defect edge.
///
/// Requires both defect graphs to be matchings (components of size <= 2).
pub fn formula_from_graph(g: &PlantedGraph) -> Result<BipartiteFormula, TwoSatError> {
    for side in [crate::graphcore::Side::A, crate::graphcore::Side::B] {
        let (_, hist) = crate::graphcore::defect_components(g, side);
        if let Some((&sz, _)) = hist.iter().rev().next() {
            if sz > 2 {
                return Err(TwoSatError::DefectComponentTooLarge(sz));
            }
        }
    }
    // Map defect-incident vertices to (edge index, is smaller endpoint).
    let mut vertex_map: HashMap<u32, (u32, bool, bool)> = HashMap::new(); // v -> (idx, positive, is_x)
    for (i, &(u, v)) in g.s_edges().iter().enumerate() {
        vertex_map.insert(u, (i as u32, true, true));
        vertex_map.insert(v, (i as u32, false, true));
    }
    for (j, &(u, v)) in g.t_edges().iter().enumerate() {
        vertex_map.insert(u, (j as u32, true, false));
        vertex_map.insert(v, (j as u32, false, false));
    }
    let mut clauses = Vec::new();
    for &(a, b) in g.cr_edges() {
        let (ea, eb) = (vertex_map.get(&a), vertex_map.get(&b));
        if let (Some(&(i, pi, xi)), Some(&(j, pj, xj))) = (ea, eb) {
            debug_assert!(xi != xj, "crossing edge endpoints on one side");
            let ((xi_idx, xi_pos), (yj_idx, yj_pos)) =
                if xi { ((i, pi), (j, pj)) } else { ((j, pj), (i, pi)) };
            clauses.push(Clause {
                x_index: xi_idx,
                y_index: yj_idx,
                x_positive: xi_pos,
                y_positive: yj_pos,
            });
        }
    }
    BipartiteFormula::new(g.s_edges().len() as u32, g.t_edges().len() as u32, clauses)
}

/// Implication digraph on `2N + 2M` literal vertices.
///
/// Literal codes: X variable `i` has positive literal `2i` and negative
/// `2i + 1`; Y variable `j` has `2N + 2j` and `2N + 2j + 1`. Negation is
/// `code ^ 1`. For each clause `(lx, ly)` the arcs `!lx -> ly` and
/// `!ly -> lx` are present, so the arc set is skew-symmetric.
#[derive(Debug, Clone)]
pub struct ImplicationDigraph {
    pub n_vars_x: u32,
    pub n_vars_y: u32,
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl ImplicationDigraph {
    pub fn from_formula(f: &BipartiteFormula) -> Self {
        let n_lits = f.n_literals();
        let x_lit = |i: u32, pos: bool| 2 * i + if pos { 0 } else { 1 };
        let y_lit = |j: u32, pos: bool| 2 * f.n_vars_x + 2 * j + if pos { 0 } else { 1 };
        let mut arcs: Vec<(u32, u32)> = Vec::with_capacity(2 * f.clauses.len());
        for c in &f.clauses {
            let lx = x_lit(c.x_index, c.x_positive);
            let ly = y_lit(c.y_index, c.y_positive);
            arcs.push((lx ^ 1, ly));
            arcs.push((ly ^ 1, lx));
        }
        let mut offsets = vec![0u32; n_lits + 1];
        for &(s, _) in &arcs {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..n_lits {
            offsets[i + 1] += offsets[i];
        }
        let mut targets = vec![0u32; arcs.len()];
        let mut cursor = offsets.clone();
        for &(s, t) in &arcs {
            targets[cursor[s as usize] as usize] = t;
            cursor[s as usize] += 1;
        }
        for i in 0..n_lits {
            targets[offsets[i] as usize..offsets[i + 1] as usize].sort_unstable();
        }
        ImplicationDigraph {
            n_vars_x: f.n_vars_x,
            n_vars_y: f.n_vars_y,
            offsets,
            targets,
        }
    }

    pub fn n_literals(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn out_neighbors(&self, lit: u32) -> &[u32] {
        &self.targets[self.offsets[lit as usize] as usize..self.offsets[lit as usize + 1] as usize]
    }

    pub fn arcs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n_literals() as u32)
            .flat_map(move |s| self.out_neighbors(s).iter().map(move |&t| (s, t)))
    }

    /// True iff the X-bank literal code; otherwise Y bank.
    pub fn is_x_literal(&self, lit: u32) -> bool {
        lit < 2 * self.n_vars_x
    }

    /// Structural skew-symmetry: arc `z -> z'` present iff `!z' -> !z` is.
    pub fn is_skew_symmetric(&self) -> bool {
        self.arcs()
            .all(|(s, t)| self.out_neighbors(t ^ 1).binary_search(&(s ^ 1)).is_ok())
    }

    /// Iterative Tarjan SCC; component ids are assigned in completion order,
    /// so id(u) < id(v) means u's component is closer to the sinks.
    pub fn sccs(&self) -> (u32, Vec<u32>) {
        let n = self.n_literals();
        const UNSET: u32 = u32::MAX;
        let mut comp = vec![UNSET; n];
        let mut low = vec![0u32; n];
        let mut index = vec![UNSET; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<u32> = Vec::new();
        let mut work: Vec<(u32, u32)> = Vec::new();
        let mut next_index = 0u32;
        let mut next_comp = 0u32;
        for root in 0..n as u32 {
            if index[root as usize] != UNSET {
                continue;
            }
            work.push((root, 0));
            while let Some(&mut (v, ref mut ei)) = work.last_mut() {
                if *ei == 0 {
                    index[v as usize] = next_index;
                    low[v as usize] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v as usize] = true;
                }
                let outs = self.out_neighbors(v);
                if (*ei as usize) < outs.len() {
                    let w = outs[*ei as usize];
                    *ei += 1;
                    if index[w as usize] == UNSET {
                        work.push((w, 0));
                    } else if on_stack[w as usize] {
                        low[v as usize] = low[v as usize].min(index[w as usize]);
                    }
                } else {
                    work.pop();
                    if let Some(&mut (p, _)) = work.last_mut() {
                        low[p as usize] = low[p as usize].min(low[v as usize]);
                    }
                    if low[v as usize] == index[v as usize] {
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w as usize] = false;
                            comp[w as usize] = next_comp;
                            if w == v {
                                break;
                            }
                        }
                        next_comp += 1;
                    }
                }
            }
        }
        (next_comp, comp)
    }
}

/// Outcome of the SCC satisfiability decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat {
        x_assign: Vec<bool>,
        y_assign: Vec<bool>,
    },
    Unsat {
        /// A variable whose two literals share a strongly connected component.
        witness_is_x: bool,
        witness_index: u32,
    },
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat { .. })
    }
}

/// Linear-time satisfiability via strongly connected components.
///
/// UNSAT iff some variable shares a component with its negation; otherwise a
/// satisfying assignment sets each literal true iff its component is closer
/// to the sinks than its negation's.
pub fn decide_sat(f: &BipartiteFormula) -> SatResult {
    let g = ImplicationDigraph::from_formula(f);
    let (_, comp) = g.sccs();
    let n = f.n_vars_x as usize;
    let m = f.n_vars_y as usize;
    for i in 0..n {
        if comp[2 * i] == comp[2 * i + 1] {
            return SatResult::Unsat {
                witness_is_x: true,
                witness_index: i as u32,
            };
        }
    }
    for j in 0..m {
        if comp[2 * n + 2 * j] == comp[2 * n + 2 * j + 1] {
            return SatResult::Unsat {
                witness_is_x: false,
                witness_index: j as u32,
            };
        }
    }
    let x_assign = (0..n).map(|i| comp[2 * i] < comp[2 * i + 1]).collect();
    let y_assign = (0..m)
        .map(|j| comp[2 * n + 2 * j] < comp[2 * n + 2 * j + 1])
        .collect();
    SatResult::Sat { x_assign, y_assign }
}

/// Exhaustive assignment search; reference oracle for `decide_sat`.
///
/// Independent of the SCC path: it scans all `2^(N+M)` assignments.
pub fn brute_force_sat(f: &BipartiteFormula) -> Option<(Vec<bool>, Vec<bool>)> {
    let n = f.n_vars_x as usize;
    let m = f.n_vars_y as usize;
    assert!(n + m <= 26, "brute force cap");
    // Precompute per-clause violation masks over the packed assignment.
    let tests: Vec<(u32, bool, u32, bool)> = f
        .clauses
        .iter()
        .map(|c| (c.x_index, c.x_positive, n as u32 + c.y_index, c.y_positive))
        .collect();
    'outer: for a in 0u64..(1u64 << (n + m)) {
        for &(xb, xw, yb, yw) in &tests {
            if ((a >> xb) & 1 == 1) != xw && ((a >> yb) & 1 == 1) != yw {
                continue 'outer;
            }
        }
        let x_assign = (0..n).map(|i| (a >> i) & 1 == 1).collect();
        let y_assign = (0..m).map(|j| (a >> (n + j)) & 1 == 1).collect();
        return Some((x_assign, y_assign));
    }
    None
}

/// The spine: literals `z` with a directed path `z ~> !z`.
///
/// Computed by bitset reachability over the condensation; errors above the
/// literal cap (default `2e4`).
pub fn spine(f: &BipartiteFormula, size_cap: usize) -> Result<Vec<u32>, TwoSatError> {
    let g = ImplicationDigraph::from_formula(f);
    let n = g.n_literals();
    if n > size_cap {
        return Err(TwoSatError::TooLarge { n, cap: size_cap });
    }
    let (n_comp, comp) = g.sccs();
    let nc = n_comp as usize;
    let words = nc.div_ceil(64);
    let mut reach = vec![0u64; nc * words];
    // Component arcs point from larger ids to smaller (sink-first numbering),
    // so one pass in increasing id order closes reachability.
    let mut comp_arcs: Vec<Vec<u32>> = vec![Vec::new(); nc];
    for (s, t) in g.arcs() {
        let (cs, ct) = (comp[s as usize], comp[t as usize]);
        if cs != ct {
            comp_arcs[cs as usize].push(ct);
        }
    }
    for c in 0..nc {
        let (head, tail) = reach.split_at_mut(c * words);
        let row = &mut tail[..words];
        row[c / 64] |= 1u64 << (c % 64);
        for &t in &comp_arcs[c] {
            debug_assert!((t as usize) < c);
            let src = &head[t as usize * words..(t as usize + 1) * words];
            for (a, b) in row.iter_mut().zip(src) {
                *a |= b;
            }
        }
    }
    let mut out = Vec::new();
    for z in 0..n as u32 {
        let cz = comp[z as usize] as usize;
        let cn = comp[(z ^ 1) as usize] as usize;
        if reach[cz * words + cn / 64] >> (cn % 64) & 1 == 1 {
            out.push(z);
        }
    }
    Ok(out)
}

/// True iff the literal set contains no variable together with its negation.
pub fn strictly_distinct(lits: &[u32]) -> bool {
    let set: HashSet<u32> = lits.iter().copied().collect();
    lits.iter().all(|&z| !set.contains(&(z ^ 1)))
}

/// A trimmed closure: FIFO worklist keeping at most one polarity per variable.
fn trimmed_closure(
    g: &ImplicationDigraph,
    seeds: &[u32],
    banned_vars: &HashSet<u32>,
    reversed: Option<&Vec<Vec<u32>>>,
) -> Vec<u32> {
    let mut collected: Vec<u32> = Vec::new();
    let mut state: HashMap<u32, ()> = HashMap::new(); // variable-polarity presence
    let mut queue: VecDeque<u32> = seeds.iter().copied().collect();
    let present = |state: &HashMap<u32, ()>, t: u32| {
        state.contains_key(&t) || state.contains_key(&(t ^ 1))
    };
    while let Some(t) = queue.pop_front() {
        if present(&state, t) || banned_vars.contains(&(t >> 1 << 1)) {
            continue;
        }
        state.insert(t, ());
        collected.push(t);
        match reversed {
            None => {
                for &w in g.out_neighbors(t) {
                    queue.push_back(w);
                }
            }
            Some(radj) => {
                for &w in &radj[t as usize] {
                    queue.push_back(w);
                }
            }
        }
    }
    collected
}

/// The trimmed outgraph `L+(z)`: worklist-pruned reachable set from `z`
/// keeping at most one polarity per variable; FIFO order. Returns the
/// collected literals (including `z`) and the per-bank sizes `(k_x, k_y)`.
pub fn trimmed_outgraph(g: &ImplicationDigraph, z: u32) -> (Vec<u32>, u32, u32) {
    let lits = trimmed_closure(g, &[z], &HashSet::new(), None);
    let kx = lits.iter().filter(|&&l| g.is_x_literal(l)).count() as u32;
    let ky = lits.len() as u32 - kx;
    (lits, kx, ky)
}

/// Plain BFS reachability `from ~> to`.
pub fn reaches(g: &ImplicationDigraph, from: u32, to: u32) -> bool {
    if from == to {
        return true;
    }
    let mut seen = vec![false; g.n_literals()];
    let mut queue = VecDeque::from([from]);
    seen[from as usize] = true;
    while let Some(u) = queue.pop_front() {
        for &w in g.out_neighbors(u) {
            if w == to {
                return true;
            }
            if !seen[w as usize] {
                seen[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

/// Empirical cluster-law tables keyed by per-bank sizes `(k, l)`.
#[derive(Debug, Clone, Default)]
pub struct ClusterLawTables {
    pub trials: u64,
    /// All trials: sizes of the trimmed outgraph of a fresh X-literal.
    pub q_hat: HashMap<(u32, u32), u64>,
    /// Trials where additionally `x` does not reach `!x`.
    pub p_hat: HashMap<(u32, u32), u64>,
    /// Trials where the sub-digraph induced on the trimmed outgraph is a tree.
    pub r_hat: HashMap<(u32, u32), u64>,
}

/// Monte Carlo estimators for the cluster laws `Q`, `P`, `R` at `(N, M, q)`.
///
/// Each trial draws a fresh formula and examines the trimmed outgraph of the
/// positive literal of the first X variable (a generic literal by symmetry).
pub fn cluster_law_estimators<R: Rng>(
    n_vars_x: u32,
    n_vars_y: u32,
    q: f64,
    trials: u64,
    rng: &mut R,
) -> ClusterLawTables {
    let mut tables = ClusterLawTables {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        let f = gen_formula(n_vars_x, n_vars_y, q, rng);
        let g = ImplicationDigraph::from_formula(&f);
        let x = 0u32;
        let (lits, kx, ky) = trimmed_outgraph(&g, x);
        *tables.q_hat.entry((kx, ky)).or_insert(0) += 1;
        if !reaches(&g, x, x ^ 1) {
            *tables.p_hat.entry((kx, ky)).or_insert(0) += 1;
        }
        let set: HashSet<u32> = lits.iter().copied().collect();
        let arcs_inside: usize = lits
            .iter()
            .map(|&l| g.out_neighbors(l).iter().filter(|t| set.contains(t)).count())
            .sum();
        if arcs_inside == lits.len() - 1 {
            *tables.r_hat.entry((kx, ky)).or_insert(0) += 1;
        }
    }
    tables
}

/// An hourglass: a central literal with an in-portion all reaching it and an
/// out-portion all reached from it, jointly strictly distinct.
#[derive(Debug, Clone)]
pub struct Hourglass {
    pub center: u32,
    pub in_portion: Vec<u32>,
    pub out_portion: Vec<u32>,
    /// `|I ∩ X| / |I ∩ Y|` and `|O ∩ X| / |O ∩ Y|`.
    pub balance_in: f64,
    pub balance_out: f64,
}

/// Scans all literals for balanced hourglasses and greedily keeps a
/// variable-disjoint subfamily.
///
/// The in-portion is the trimmed in-graph of the center (dual construction on
/// reversed arcs); the out-portion is the trimmed outgraph computed with the
/// in-portion's variables removed. Portions must have at least `min_portion`
/// literals and balance ratios inside `balance_window`.
pub fn find_hourglasses(
    f: &BipartiteFormula,
    min_portion: usize,
    balance_window: (f64, f64),
) -> Vec<Hourglass> {
    let g = ImplicationDigraph::from_formula(f);
    let n = g.n_literals();
    let mut radj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (s, t) in g.arcs() {
        radj[t as usize].push(s);
    }
    let ratio = |lits: &[u32]| {
        let kx = lits.iter().filter(|&&l| g.is_x_literal(l)).count() as f64;
        let ky = lits.len() as f64 - kx;
        kx / ky
    };
    // An infinite upper bound accepts one-bank portions (ratio 0 or inf).
    let balanced = |r: f64| {
        if balance_window.1.is_infinite() {
            r >= balance_window.0
        } else {
            r > balance_window.0 && r < balance_window.1
        }
    };
    let mut used_vars: HashSet<u32> = HashSet::new();
    let mut out = Vec::new();
    for v in 0..n as u32 {
        if used_vars.contains(&(v >> 1 << 1)) {
            continue;
        }
        let center_ban: HashSet<u32> = [v >> 1 << 1].into_iter().collect();
        let in_portion = trimmed_closure(&g, &radj[v as usize], &center_ban, Some(&radj));
        if in_portion.len() < min_portion {
            continue;
        }
        let mut bans = center_ban.clone();
        bans.extend(in_portion.iter().map(|&l| l >> 1 << 1));
        let out_portion = trimmed_closure(&g, g.out_neighbors(v), &bans, None);
        if out_portion.len() < min_portion {
            continue;
        }
        let (bi, bo) = (ratio(&in_portion), ratio(&out_portion));
        if !balanced(bi) || !balanced(bo) {
            continue;
        }
        // Greedy disjointification across accepted hourglasses.
        let vars: Vec<u32> = std::iter::once(v)
            .chain(in_portion.iter().copied())
            .chain(out_portion.iter().copied())
            .map(|l| l >> 1 << 1)
            .collect();
        if vars.iter().any(|var| used_vars.contains(var)) {
            continue;
        }
        used_vars.extend(vars);
        debug_assert!(strictly_distinct(
            &std::iter::once(v)
                .chain(in_portion.iter().copied())
                .chain(out_portion.iter().copied())
                .collect::<Vec<_>>()
        ));
        out.push(Hourglass {
            center: v,
            in_portion,
            out_portion,
            balance_in: bi,
            balance_out: bo,
        });
    }
    out
}

/// The defect literal set `Z`: literals receiving arcs from both polarities
/// of some variable.
pub fn defect_clause_set(f: &BipartiteFormula) -> Vec<u32> {
    let g = ImplicationDigraph::from_formula(f);
    let mut out: Vec<u32> = Vec::new();
    let n_vars = (g.n_literals() / 2) as u32;
    for var in 0..n_vars {
        let pos = 2 * var;
        let a = g.out_neighbors(pos);
        let b = g.out_neighbors(pos + 1);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Writes the formula file format: header `p bisat N M K`, then one clause
/// per line as `±i ±j` with 1-based indices; clauses in canonical order.
pub fn write_formula<W: Write>(f: &BipartiteFormula, mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "p bisat {} {} {}",
        f.n_vars_x,
        f.n_vars_y,
        f.clauses.len()
    )?;
    for c in &f.clauses {
        let i = (c.x_index + 1) as i64 * if c.x_positive { 1 } else { -1 };
        let j = (c.y_index + 1) as i64 * if c.y_positive { 1 } else { -1 };
        writeln!(w, "{i} {j}")?;
    }
    Ok(())
}

/// Reads the formula file format.
pub fn read_formula<R: BufRead>(r: R) -> Result<BipartiteFormula, TwoSatError> {
    let mut lines = r.lines().enumerate();
    let perr = |line: usize, msg: &str| TwoSatError::Parse {
        line: line + 1,
        msg: msg.into(),
    };
    let (ln, header) = lines.next().ok_or_else(|| perr(0, "missing header"))?;
    let header = header?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "p" || toks[1] != "bisat" {
        return Err(perr(ln, "expected `p bisat N M K`"));
    }
    let n: u32 = toks[2].parse().map_err(|_| perr(ln, "bad N"))?;
    let m: u32 = toks[3].parse().map_err(|_| perr(ln, "bad M"))?;
    let k: usize = toks[4].parse().map_err(|_| perr(ln, "bad K"))?;
    let mut clauses = Vec::with_capacity(k);
    for (ln, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let i: i64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(ln, "bad literal"))?;
        let j: i64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(ln, "bad literal"))?;
        if i == 0 || j == 0 {
            return Err(perr(ln, "zero literal"));
        }
        clauses.push(Clause {
            x_index: i.unsigned_abs() as u32 - 1,
            y_index: j.unsigned_abs() as u32 - 1,
            x_positive: i > 0,
            y_positive: j > 0,
        });
    }
    if clauses.len() != k {
        return Err(perr(0, "clause count mismatch"));
    }
    BipartiteFormula::new(n, m, clauses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream_rng;

    fn clause(i: u32, sx: bool, j: u32, sy: bool) -> Clause {
        Clause {
            x_index: i,
            y_index: j,
            x_positive: sx,
            y_positive: sy,
        }
    }

    #[test]
    fn gen_formula_extremes() {
        let mut rng = stream_rng(1, 0);
        let f = gen_formula(5, 7, 0.0, &mut rng);
        assert!(f.clauses().is_empty());
        let f = gen_formula(3, 4, 1.0, &mut rng);
        assert_eq!(f.clauses().len(), 4 * 3 * 4);
    }

    #[test]
    fn gen_formula_product_law_1x1() {
        // N = M = 1, q = 1/2: the 16 clause subsets are uniform.
        let mut rng = stream_rng(2, 0);
        let trials = 200_000u64;
        let mut counts = [0u64; 16];
        for _ in 0..trials {
            let f = gen_formula(1, 1, 0.5, &mut rng);
            let mut key = 0usize;
            for c in f.clauses() {
                let bit = (c.x_positive as usize) << 1 | c.y_positive as usize;
                key |= 1 << bit;
            }
            counts[key] += 1;
        }
        let probs = [1.0 / 16.0; 16];
        let (_, p) = crate::stats::chi_squared_gof(&counts, &probs, 5.0);
        assert!(p > 1e-4, "chi-squared p = {p}");
    }

    #[test]
    fn decide_sat_examples() {
        // Empty formula: SAT, all-false satisfies.
        let f = BipartiteFormula::new(2, 2, vec![]).unwrap();
        match decide_sat(&f) {
            SatResult::Sat { x_assign, y_assign } => {
                assert!(f.satisfied_by(&x_assign, &y_assign));
            }
            _ => panic!("empty formula must be SAT"),
        }

        // All four clauses on one variable pair: UNSAT.
        let f = BipartiteFormula::new(
            1,
            1,
            vec![
                clause(0, true, 0, true),
                clause(0, true, 0, false),
                clause(0, false, 0, true),
                clause(0, false, 0, false),
            ],
        )
        .unwrap();
        assert!(!decide_sat(&f).is_sat());
        assert!(brute_force_sat(&f).is_none());

        // (!x | y) & (!x | !y): SAT with x = false.
        let f = BipartiteFormula::new(
            1,
            1,
            vec![clause(0, false, 0, true), clause(0, false, 0, false)],
        )
        .unwrap();
        match decide_sat(&f) {
            SatResult::Sat { x_assign, y_assign } => {
                assert!(!x_assign[0], "x must be forced false");
                assert!(f.satisfied_by(&x_assign, &y_assign));
            }
            _ => panic!("must be SAT"),
        }
        assert!(brute_force_sat(&f).is_some());
    }

    #[test]
    fn decide_sat_matches_brute_force_small() {
        let mut rng = stream_rng(3, 0);
        for trial in 0..2000 {
            let (n, m) = (4 + trial % 3, 4 + trial % 4);
            let q = [0.05, 0.1, 0.3][trial % 3];
            let f = gen_formula(n as u32, m as u32, q, &mut rng);
            let fast = decide_sat(&f);
            let slow = brute_force_sat(&f);
            assert_eq!(fast.is_sat(), slow.is_some(), "disagreement on {f:?}");
            if let SatResult::Sat { x_assign, y_assign } = fast {
                assert!(f.satisfied_by(&x_assign, &y_assign));
            }
        }
    }

    #[test]
    fn digraph_skew_symmetric_always() {
        let mut rng = stream_rng(4, 0);
        for _ in 0..50 {
            let f = gen_formula(6, 5, 0.1, &mut rng);
            let g = ImplicationDigraph::from_formula(&f);
            assert!(g.is_skew_symmetric());
            assert_eq!(g.arcs().count(), 2 * f.clauses().len());
        }
    }

    #[test]
    fn monotone_adding_clauses_never_resatisfies() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..1000 {
            // Nested coupled formulas via a shared clause stream.
            let full = gen_formula(8, 8, 0.35, &mut rng);
            let mut sat_seen_unsat = false;
            for k in 0..=full.clauses().len() {
                let f =
                    BipartiteFormula::new(8, 8, full.clauses()[..k].to_vec()).unwrap();
                let is_sat = decide_sat(&f).is_sat();
                if sat_seen_unsat {
                    assert!(!is_sat, "UNSAT became SAT after adding clauses");
                }
                if !is_sat {
                    sat_seen_unsat = true;
                }
            }
        }
    }

    #[test]
    fn spine_examples_and_oracle() {
        // Empty formula: empty spine.
        let f = BipartiteFormula::new(3, 3, vec![]).unwrap();
        assert!(spine(&f, 100).unwrap().is_empty());

        // Random formulas: spine membership equals per-literal reachability.
        let mut rng = stream_rng(6, 0);
        for _ in 0..300 {
            let f = gen_formula(5, 5, 0.12, &mut rng);
            let g = ImplicationDigraph::from_formula(&f);
            let sp: HashSet<u32> = spine(&f, 1000).unwrap().into_iter().collect();
            for z in 0..g.n_literals() as u32 {
                assert_eq!(sp.contains(&z), reaches(&g, z, z ^ 1), "literal {z}");
            }
            // Satisfiable iff the spine is strictly distinct.
            let sp_vec: Vec<u32> = sp.iter().copied().collect();
            assert_eq!(decide_sat(&f).is_sat(), strictly_distinct(&sp_vec));
        }
    }

    #[test]
    fn spine_size_cap_enforced() {
        let f = BipartiteFormula::new(100, 100, vec![]).unwrap();
        assert!(spine(&f, 10).is_err());
    }

    #[test]
    fn trimmed_outgraph_semantics() {
        // Isolated literal: just itself.
        let f = BipartiteFormula::new(2, 2, vec![]).unwrap();
        let g = ImplicationDigraph::from_formula(&f);
        let (lits, kx, ky) = trimmed_outgraph(&g, 0);
        assert_eq!(lits, vec![0]);
        assert_eq!((kx, ky), (1, 0));

        // z -> t and z -> !t: exactly one of t, !t collected (FIFO order).
        // Arcs from x0: clauses (!x0 | y0) and (!x0 | !y0).
        let f = BipartiteFormula::new(
            1,
            1,
            vec![clause(0, false, 0, true), clause(0, false, 0, false)],
        )
        .unwrap();
        let g = ImplicationDigraph::from_formula(&f);
        let (lits, _, _) = trimmed_outgraph(&g, 0);
        let y_pos = 2u32; // first Y literal code with N = 1
        let y_count = lits
            .iter()
            .filter(|&&l| l == y_pos || l == y_pos + 1)
            .count();
        assert_eq!(y_count, 1);
        assert!(strictly_distinct(&lits));
    }

    #[test]
    fn trimmed_outgraph_always_strictly_distinct_and_order_invariant_off_spine() {
        // On the event x does not reach !x, the reachable set from x is
        // strictly distinct (x ~> a and x ~> !a would give x ~> a ~> !x by
        // skew symmetry), so the trimmed set equals the full reachable set
        // and no worklist order can matter. Off that event the kept
        // polarities, and even the variable set, are order-dependent.
        let mut rng = stream_rng(7, 0);
        let mut checked = 0;
        for _ in 0..300 {
            let f = gen_formula(6, 6, 0.15, &mut rng);
            let g = ImplicationDigraph::from_formula(&f);
            let (lits, _, _) = trimmed_outgraph(&g, 0);
            assert!(strictly_distinct(&lits));
            if reaches(&g, 0, 1) {
                continue;
            }
            checked += 1;
            // LIFO variant collects the same literal set off the spine.
            let mut collected: Vec<u32> = Vec::new();
            let mut present: HashSet<u32> = HashSet::new();
            let mut stack = vec![0u32];
            while let Some(t) = stack.pop() {
                if present.contains(&t) || present.contains(&(t ^ 1)) {
                    continue;
                }
                present.insert(t);
                collected.push(t);
                stack.extend_from_slice(g.out_neighbors(t));
            }
            let fifo: HashSet<u32> = lits.iter().copied().collect();
            let lifo: HashSet<u32> = collected.iter().copied().collect();
            assert_eq!(fifo, lifo);
        }
        assert!(checked > 100);
    }

    #[test]
    fn cluster_tables_q_zero() {
        let mut rng = stream_rng(8, 0);
        let t = cluster_law_estimators(4, 4, 0.0, 100, &mut rng);
        assert_eq!(t.q_hat.get(&(1, 0)), Some(&100));
        assert_eq!(t.p_hat.get(&(1, 0)), Some(&100));
        assert_eq!(t.r_hat.get(&(1, 0)), Some(&100));
        let total: u64 = t.q_hat.values().sum();
        assert_eq!(total, t.trials);
    }

    #[test]
    fn hourglass_detection_on_directed_path() {
        // Arcs x0 -> y0 -> x1 via clauses (!x0 | y0), (x1 | !y0).
        let f = BipartiteFormula::new(
            2,
            1,
            vec![clause(0, false, 0, true), clause(1, true, 0, false)],
        )
        .unwrap();
        let wide = (-1.0, f64::INFINITY);
        let hgs = find_hourglasses(&f, 1, wide);
        let y0 = 4u32; // N = 2, so Y literal codes start at 4
        let found = hgs.iter().find(|h| h.center == y0).expect("hourglass at y0");
        assert_eq!(found.in_portion, vec![0]); // x0 positive
        assert_eq!(found.out_portion, vec![2]); // x1 positive

        // Empty formula with min_portion >= 1: nothing.
        let f = BipartiteFormula::new(2, 2, vec![]).unwrap();
        assert!(find_hourglasses(&f, 1, wide).is_empty());
    }

    #[test]
    fn hourglass_augmentation_forces_unsat() {
        // Adding (u | u') for u, u' in I_v and (!w | !w') for w, w' in O_v
        // creates a contradictory cycle through v.
        let mut rng = stream_rng(9, 0);
        let mut tested = 0;
        'outer: for round in 0..400 {
            let q = 0.9 / (2.0 * 120.0); // slightly subcritical at N = M = 120
            let f = gen_formula(120, 120, q, &mut rng);
            if !decide_sat(&f).is_sat() {
                continue;
            }
            let hgs = find_hourglasses(&f, 4, (0.0, f64::INFINITY));
            for h in hgs {
                // Need one literal from each bank in each portion to keep the
                // augmentation clauses bipartite.
                let pick = |lits: &[u32]| {
                    let x = lits.iter().find(|&&l| l < 240).copied();
                    let y = lits.iter().find(|&&l| l >= 240).copied();
                    x.zip(y)
                };
                if let (Some((ux, uy)), Some((wx, wy))) =
                    (pick(&h.in_portion), pick(&h.out_portion))
                {
                    let lit_clause = |lx: u32, ly: u32, negate: bool| {
                        let xp = lx % 2 == 0;
                        let yp = ly % 2 == 0;
                        clause(
                            lx / 2,
                            xp ^ negate,
                            (ly - 240) / 2,
                            yp ^ negate,
                        )
                    };
                    let mut clauses = f.clauses().to_vec();
                    let c1 = lit_clause(ux, uy, false); // u | u'
                    let c2 = lit_clause(wx, wy, true); // !w | !w'
                    for c in [c1, c2] {
                        if !clauses.contains(&c) {
                            clauses.push(c);
                        }
                    }
                    let aug = BipartiteFormula::new(120, 120, clauses).unwrap();
                    assert!(
                        !decide_sat(&aug).is_sat(),
                        "augmented formula must be UNSAT (round {round})"
                    );
                    tested += 1;
                    if tested >= 100 {
                        break 'outer;
                    }
                }
            }
        }
        assert!(tested >= 30, "too few augmentation cases exercised: {tested}");
    }

    #[test]
    fn defect_clause_set_examples() {
        // Empty formula.
        let f = BipartiteFormula::new(2, 2, vec![]).unwrap();
        assert!(defect_clause_set(&f).is_empty());

        // (x | y) & (x | !y): arcs !y -> x and y -> x, so Z = {x}.
        let f = BipartiteFormula::new(
            1,
            1,
            vec![clause(0, true, 0, true), clause(0, true, 0, false)],
        )
        .unwrap();
        assert_eq!(defect_clause_set(&f), vec![0]);

        // Arc-scan oracle on random formulas.
        let mut rng = stream_rng(10, 0);
        for _ in 0..100 {
            let f = gen_formula(5, 5, 0.2, &mut rng);
            let g = ImplicationDigraph::from_formula(&f);
            let z = defect_clause_set(&f);
            for lit in 0..g.n_literals() as u32 {
                let expected = (0..g.n_literals() as u32 / 2).any(|var| {
                    g.out_neighbors(2 * var).contains(&lit)
                        && g.out_neighbors(2 * var + 1).contains(&lit)
                });
                assert_eq!(z.binary_search(&lit).is_ok(), expected);
            }
        }
    }

    #[test]
    fn formula_file_roundtrip() {
        let mut rng = stream_rng(11, 0);
        let f = gen_formula(7, 9, 0.1, &mut rng);
        let mut buf = Vec::new();
        write_formula(&f, &mut buf).unwrap();
        let f2 = read_formula(&buf[..]).unwrap();
        assert_eq!(f, f2);
        let mut buf2 = Vec::new();
        write_formula(&f2, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert!(String::from_utf8(buf).unwrap().starts_with("p bisat 7 9 "));
    }
}
