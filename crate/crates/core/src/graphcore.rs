//! Undirected simple graphs carrying a planted bipartition `(A, B)` with the
//! edge set split into defect edges `S` (inside A), `T` (inside B) and
//! crossing edges.
//!
//! Vertices are dense indices `0..n`; parts are sorted index sets. Edges are
//! kept as sorted normalized pairs so that file output is byte-stable.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("graph too large for exact operation: n = {n}, cap = {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which side of the planted bipartition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// A simple graph plus its planted bipartition and edge classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedGraph {
    n: u32,
    part_a: Vec<u32>,
    part_b: Vec<u32>,
    in_a: Vec<bool>,
    s_edges: Vec<(u32, u32)>,
    t_edges: Vec<(u32, u32)>,
    cr_edges: Vec<(u32, u32)>,
}

fn normalize_sort(edges: &mut Vec<(u32, u32)>) {
    for e in edges.iter_mut() {
        if e.0 > e.1 {
            *e = (e.1, e.0);
        }
    }
    edges.sort_unstable();
}

impl PlantedGraph {
    /// Builds and validates a planted graph from its parts and edge classes.
    pub fn new(
        n: u32,
        part_a: Vec<u32>,
        mut s_edges: Vec<(u32, u32)>,
        mut t_edges: Vec<(u32, u32)>,
        mut cr_edges: Vec<(u32, u32)>,
    ) -> Result<Self, GraphError> {
        let mut in_a = vec![false; n as usize];
        let mut part_a = part_a;
        part_a.sort_unstable();
        part_a.dedup();
        for &v in &part_a {
            if v >= n {
                return Err(GraphError::Invalid(format!("part vertex {v} >= n = {n}")));
            }
            in_a[v as usize] = true;
        }
        let part_b: Vec<u32> = (0..n).filter(|&v| !in_a[v as usize]).collect();
        normalize_sort(&mut s_edges);
        normalize_sort(&mut t_edges);
        normalize_sort(&mut cr_edges);
        let g = PlantedGraph {
            n,
            part_a,
            part_b,
            in_a,
            s_edges,
            t_edges,
            cr_edges,
        };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<(), GraphError> {
        let mut all: Vec<(u32, u32)> = Vec::with_capacity(self.edge_count());
        for (set, name) in [(&self.s_edges, "S"), (&self.t_edges, "T"), (&self.cr_edges, "cr")] {
            for &(u, v) in set.iter() {
                if u == v {
                    return Err(GraphError::Invalid(format!("self-loop {u} in {name}")));
                }
                if u >= self.n || v >= self.n {
                    return Err(GraphError::Invalid(format!(
                        "edge ({u},{v}) in {name} out of range"
                    )));
                }
                let (ua, va) = (self.in_a[u as usize], self.in_a[v as usize]);
                let ok = match name {
                    "S" => ua && va,
                    "T" => !ua && !va,
                    _ => ua != va,
                };
                if !ok {
                    return Err(GraphError::Invalid(format!(
                        "edge ({u},{v}) misclassified as {name}"
                    )));
                }
                all.push((u, v));
            }
        }
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(GraphError::Invalid("duplicate edge".into()));
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> u32 {
        self.n
    }
    pub fn part_a(&self) -> &[u32] {
        &self.part_a
    }
    pub fn part_b(&self) -> &[u32] {
        &self.part_b
    }
    pub fn side(&self, v: u32) -> Side {
        if self.in_a[v as usize] {
            Side::A
        } else {
            Side::B
        }
    }
    pub fn s_edges(&self) -> &[(u32, u32)] {
        &self.s_edges
    }
    pub fn t_edges(&self) -> &[(u32, u32)] {
        &self.t_edges
    }
    pub fn cr_edges(&self) -> &[(u32, u32)] {
        &self.cr_edges
    }
    pub fn edge_count(&self) -> usize {
        self.s_edges.len() + self.t_edges.len() + self.cr_edges.len()
    }
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.s_edges
            .iter()
            .chain(&self.t_edges)
            .chain(&self.cr_edges)
            .copied()
    }
    /// Empty graph on `n` vertices with the given part (abort output).
    pub fn empty(n: u32, part_a: Vec<u32>) -> Self {
        PlantedGraph::new(n, part_a, vec![], vec![], vec![]).expect("empty graph is valid")
    }

    /// Sorted adjacency lists.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        adjacency(self.n, self.edges())
    }

    /// True iff the graph has no 3-clique (adjacency-set intersection per edge).
    pub fn is_triangle_free(&self) -> bool {
        let adj = self.adjacency();
        for (u, v) in self.edges() {
            if sorted_intersect(&adj[u as usize], &adj[v as usize]) {
                return false;
            }
        }
        true
    }

    /// Cut value achieved by the planted bipartition: `|E_cr|` plus any
    /// misclassified edges (none by construction).
    pub fn planted_cut_value(&self) -> usize {
        self.cr_edges.len()
    }
}

pub fn adjacency(n: u32, edges: impl Iterator<Item = (u32, u32)>) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n as usize];
    for (u, v) in edges {
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

fn sorted_intersect(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Triangle check over a bare edge list.
pub fn is_triangle_free_edges(n: u32, edges: &[(u32, u32)]) -> bool {
    let adj = adjacency(n, edges.iter().copied());
    edges
        .iter()
        .all(|&(u, v)| !sorted_intersect(&adj[u as usize], &adj[v as usize]))
}

/// Result of a bipartiteness test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BipartiteResult {
    /// Color per vertex (0/1); isolated vertices get 0.
    TwoColoring(Vec<u8>),
    /// An odd cycle as a vertex list `v0, v1, ..., v_{2k}` (closing edge
    /// `v_{2k} v0` implied).
    OddCycle(Vec<u32>),
}

impl BipartiteResult {
    pub fn is_bipartite(&self) -> bool {
        matches!(self, BipartiteResult::TwoColoring(_))
    }
}

/// BFS 2-coloring; on failure returns an odd-cycle witness.
pub fn is_bipartite(n: u32, edges: &[(u32, u32)]) -> BipartiteResult {
    let adj = adjacency(n, edges.iter().copied());
    let mut color = vec![u8::MAX; n as usize];
    let mut parent = vec![u32::MAX; n as usize];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if color[start as usize] != u8::MAX {
            continue;
        }
        color[start as usize] = 0;
        parent[start as usize] = start;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u as usize] {
                if color[v as usize] == u8::MAX {
                    color[v as usize] = 1 - color[u as usize];
                    parent[v as usize] = u;
                    queue.push_back(v);
                } else if color[v as usize] == color[u as usize] && v != u {
                    return BipartiteResult::OddCycle(odd_cycle_witness(&parent, u, v));
                }
            }
        }
    }
    for c in &mut color {
        if *c == u8::MAX {
            *c = 0;
        }
    }
    BipartiteResult::TwoColoring(color)
}

fn odd_cycle_witness(parent: &[u32], u: u32, v: u32) -> Vec<u32> {
    // Walk both ancestor chains to the root, then splice at the LCA.
    let chain = |mut x: u32| {
        let mut path = vec![x];
        while parent[x as usize] != x {
            x = parent[x as usize];
            path.push(x);
        }
        path
    };
    let pu = chain(u);
    let pv = chain(v);
    // Find lowest common ancestor by comparing from the root end.
    let mut i = pu.len();
    let mut j = pv.len();
    while i > 1 && j > 1 && pu[i - 2] == pv[j - 2] {
        i -= 1;
        j -= 1;
    }
    // Cycle: u -> ... -> lca -> ... -> v, closed by edge (v, u).
    let mut cycle: Vec<u32> = pu[..i].to_vec();
    for k in (0..j - 1).rev() {
        cycle.push(pv[k]);
    }
    debug_assert!(cycle.len() % 2 == 1);
    cycle
}

/// Connected components of one defect graph with a size histogram.
pub fn defect_components(
    g: &PlantedGraph,
    side: Side,
) -> (Vec<Vec<u32>>, BTreeMap<usize, usize>) {
    let (vertices, edges) = match side {
        Side::A => (g.part_a(), g.s_edges()),
        Side::B => (g.part_b(), g.t_edges()),
    };
    components_of(g.n_vertices(), vertices, edges)
}

/// Components of the graph `(vertices, edges)`; vertices not incident to an
/// edge appear as singleton components.
pub fn components_of(
    n: u32,
    vertices: &[u32],
    edges: &[(u32, u32)],
) -> (Vec<Vec<u32>>, BTreeMap<usize, usize>) {
    let adj = adjacency(n, edges.iter().copied());
    let mut seen = vec![false; n as usize];
    let mut comps = Vec::new();
    let mut hist = BTreeMap::new();
    for &start in vertices {
        if seen[start as usize] {
            continue;
        }
        seen[start as usize] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in &adj[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        *hist.entry(comp.len()).or_insert(0) += 1;
        comps.push(comp);
    }
    (comps, hist)
}

/// Exhaustive max-cut result.
#[derive(Debug, Clone)]
pub struct MaxCut {
    pub part_a: Vec<u32>,
    pub value: u64,
    /// True iff exactly one bipartition (up to swapping sides) attains the max.
    pub unique: bool,
}

/// Exhaustive max cut by Gray-code enumeration; `n <= 28`.
pub fn max_cut_exact(n: u32, edges: &[(u32, u32)]) -> Result<MaxCut, GraphError> {
    const CAP: usize = 28;
    if n as usize > CAP {
        return Err(GraphError::TooLarge {
            n: n as usize,
            cap: CAP,
        });
    }
    if n == 0 {
        return Ok(MaxCut {
            part_a: vec![],
            value: 0,
            unique: true,
        });
    }
    let mut adj = vec![0u32; n as usize];
    for &(u, v) in edges {
        adj[u as usize] |= 1 << v;
        adj[v as usize] |= 1 << u;
    }
    let deg: Vec<u32> = adj.iter().map(|m| m.count_ones()).collect();
    // Vertex 0 pinned to side 0; Gray code over the rest.
    let mut mask = 0u32;
    let mut cut: i64 = 0;
    let mut best = 0i64;
    let mut best_mask = 0u32;
    let mut best_count = 1u64;
    let total = 1u64 << (n - 1);
    for i in 1..total {
        let v = i.trailing_zeros() + 1;
        let side1 = (mask >> v) & 1 == 1;
        let nbr_on_1 = (adj[v as usize] & mask).count_ones() as i64;
        let cross = if side1 {
            deg[v as usize] as i64 - nbr_on_1
        } else {
            nbr_on_1
        };
        cut += deg[v as usize] as i64 - 2 * cross;
        mask ^= 1 << v;
        match cut.cmp(&best) {
            std::cmp::Ordering::Greater => {
                best = cut;
                best_mask = mask;
                best_count = 1;
            }
            std::cmp::Ordering::Equal => best_count += 1,
            std::cmp::Ordering::Less => {}
        }
    }
    let part_a = (0..n).filter(|&v| best_mask >> v & 1 == 0).collect();
    Ok(MaxCut {
        part_a,
        value: best as u64,
        unique: best_count == 1,
    })
}

/// Writes the text edge-list format:
/// header `n <n> A <|A|>`, a part line `P <indices>`, then one `u v` per line
/// in sorted order. Output is byte-stable for a given graph.
pub fn write_edge_list<W: Write>(g: &PlantedGraph, mut w: W) -> io::Result<()> {
    writeln!(w, "n {} A {}", g.n_vertices(), g.part_a().len())?;
    write!(w, "P")?;
    for &v in g.part_a() {
        write!(w, " {v}")?;
    }
    writeln!(w)?;
    let mut all: Vec<(u32, u32)> = g.edges().collect();
    all.sort_unstable();
    for (u, v) in all {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// Reads the text edge-list format back into a validated graph.
pub fn read_edge_list<R: BufRead>(r: R) -> Result<PlantedGraph, GraphError> {
    let mut lines = r.lines().enumerate();
    let parse_err = |line: usize, msg: &str| GraphError::Parse {
        line: line + 1,
        msg: msg.into(),
    };
    let (ln, header) = lines
        .next()
        .ok_or_else(|| parse_err(0, "missing header"))?;
    let header = header?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 4 || toks[0] != "n" || toks[2] != "A" {
        return Err(parse_err(ln, "expected `n <n> A <|A|>`"));
    }
    let n: u32 = toks[1].parse().map_err(|_| parse_err(ln, "bad n"))?;
    let a_len: usize = toks[3].parse().map_err(|_| parse_err(ln, "bad |A|"))?;
    let (ln, part_line) = lines.next().ok_or_else(|| parse_err(1, "missing P line"))?;
    let part_line = part_line?;
    let mut toks = part_line.split_whitespace();
    if toks.next() != Some("P") {
        return Err(parse_err(ln, "expected `P ...`"));
    }
    let part_a: Vec<u32> = toks
        .map(|t| t.parse().map_err(|_| parse_err(ln, "bad part index")))
        .collect::<Result<_, _>>()?;
    if part_a.len() != a_len {
        return Err(parse_err(ln, "part size mismatch"));
    }
    let mut in_a = vec![false; n as usize];
    for &v in &part_a {
        if v >= n {
            return Err(parse_err(ln, "part index out of range"));
        }
        in_a[v as usize] = true;
    }
    let (mut s, mut t, mut cr) = (Vec::new(), Vec::new(), Vec::new());
    for (ln, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let u: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad edge"))?;
        let v: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad edge"))?;
        if u >= n || v >= n {
            return Err(parse_err(ln, "edge endpoint out of range"));
        }
        match (in_a[u as usize], in_a[v as usize]) {
            (true, true) => s.push((u, v)),
            (false, false) => t.push((u, v)),
            _ => cr.push((u, v)),
        }
    }
    PlantedGraph::new(n, part_a, s, t, cr)
}
