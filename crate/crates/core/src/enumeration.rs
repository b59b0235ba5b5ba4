//! Exact counting: connected spanning subgraphs of `K_{k,l}` by excess,
//! Moon's bipartite forest counts, connectivity probabilities, and the
//! closed-form cluster law for trimmed outgraphs.
//!
//! Counts are exact big integers. Probabilities are evaluated in log space
//! since the binomial exponents overflow doubles multiplicatively.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use num_bigint::BigUint;
use rayon::prelude::*;
use thiserror::Error;

use crate::stats::{ln_binomial, log_sum_exp};

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("k*l = {0} exceeds exhaustive cap {1}")]
    TooLarge(u64, u64),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("cache format error: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Exhaustive-enumeration cap on `k * l` (edge count of `K_{k,l}`).
pub const EXHAUSTIVE_CAP: u64 = 24;

/// Counts of connected spanning subgraphs of `K_{k,l}` by excess `s`
/// (edges = k + l - 1 + s).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipConnTable {
    pub k: u32,
    pub l: u32,
    /// `counts[s] = C(k, l, s)`, s ranging over `0 ..= kl - (k + l - 1)`.
    pub counts: Vec<BigUint>,
}

impl BipConnTable {
    pub fn max_excess(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    /// `C(k, l, 0)` reference value `k^{l-1} l^{k-1}`.
    pub fn tree_count_formula(k: u32, l: u32) -> BigUint {
        BigUint::from(k).pow(l.saturating_sub(1)) * BigUint::from(l).pow(k.saturating_sub(1))
    }
}

#[derive(Clone)]
struct Dsu {
    parent: [u8; 32],
}

impl Dsu {
    fn new(n: usize) -> Self {
        let mut parent = [0u8; 32];
        for (i, p) in parent.iter_mut().enumerate().take(n) {
            *p = i as u8;
        }
        Dsu { parent }
    }
    fn find(&mut self, mut x: u8) -> u8 {
        while self.parent[x as usize] != x {
            self.parent[x as usize] = self.parent[self.parent[x as usize] as usize];
            x = self.parent[x as usize];
        }
        x
    }
    fn union(&mut self, a: u8, b: u8) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra as usize] = rb;
        true
    }
}

/// Exact table of `C(k, l, s)` by exhaustive subset enumeration with a
/// union-find connectivity test; requires `k * l <= 24`.
pub fn count_connected_bipartite(k: u32, l: u32) -> Result<BipConnTable, EnumError> {
    if k == 0 || l == 0 {
        // A single vertex is connected; anything else with an empty side is not.
        let counts = if k + l == 1 {
            vec![BigUint::from(1u32)]
        } else {
            vec![]
        };
        return Ok(BipConnTable { k, l, counts });
    }
    let edges = k as u64 * l as u64;
    if edges > EXHAUSTIVE_CAP {
        return Err(EnumError::TooLarge(edges, EXHAUSTIVE_CAP));
    }
    let nv = (k + l) as usize;
    if k == 1 || l == 1 {
        // Stars: the only connected spanning subgraph keeps every edge.
        let mut counts = vec![BigUint::from(0u32); (edges as usize) - (nv - 1) + 1];
        counts[0] = BigUint::from(1u32);
        return Ok(BipConnTable { k, l, counts });
    }
    let spanning = nv - 1;
    let max_s = edges as usize - spanning;
    // Edge i joins left vertex i / l to right vertex k + i % l.
    let endpoints: Vec<(u8, u8)> = (0..edges as usize)
        .map(|i| ((i / l as usize) as u8, (k as usize + i % l as usize) as u8))
        .collect();
    let total: u64 = 1 << edges;
    let n_blocks = 64u64;
    let block = total.div_ceil(n_blocks);
    let partials: Vec<Vec<u64>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut counts = vec![0u64; max_s + 1];
            let lo = b * block;
            let hi = (lo + block).min(total);
            for mask in lo..hi {
                let e = mask.count_ones() as usize;
                if e < spanning {
                    continue;
                }
                let mut dsu = Dsu::new(nv);
                let mut comps = nv;
                let mut m = mask;
                while m != 0 {
                    let i = m.trailing_zeros() as usize;
                    m &= m - 1;
                    let (a, b) = endpoints[i];
                    if dsu.union(a, b) {
                        comps -= 1;
                    }
                }
                if comps == 1 {
                    counts[e - spanning] += 1;
                }
            }
            counts
        })
        .collect();
    let mut counts = vec![0u64; max_s + 1];
    for p in partials {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    Ok(BipConnTable {
        k,
        l,
        counts: counts.into_iter().map(BigUint::from).collect(),
    })
}

/// Connected counts via the complement recurrence on the component of a
/// distinguished left vertex; independent of the subset enumeration and
/// valid for any `(k, l)`.
///
/// `B(k,l,e) = sum over the component (k',l',e') of vertex 1 of
///  C(k-1,k'-1) C(l,l') Conn(k',l',e') B(k-k',l-l',e-e')`.
pub fn connected_table_recursive(k: u32, l: u32) -> BipConnTable {
    let mut memo: HashMap<(u32, u32), Vec<BigUint>> = HashMap::new();
    let counts_by_edges = conn_by_edges(k, l, &mut memo);
    let spanning = (k + l).saturating_sub(1) as usize;
    let counts = if k == 0 || l == 0 {
        if k + l == 1 {
            vec![BigUint::from(1u32)]
        } else {
            vec![]
        }
    } else {
        counts_by_edges[spanning..].to_vec()
    };
    BipConnTable { k, l, counts }
}

fn binom_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let mut r = BigUint::from(1u32);
    for i in 0..k.min(n - k) {
        r = r * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    r
}

/// `Conn(k, l, e)` for all `e`, memoized.
fn conn_by_edges(k: u32, l: u32, memo: &mut HashMap<(u32, u32), Vec<BigUint>>) -> Vec<BigUint> {
    if let Some(v) = memo.get(&(k, l)) {
        return v.clone();
    }
    let max_e = (k as usize) * (l as usize);
    let mut conn = vec![BigUint::from(0u32); max_e + 1];
    if k == 0 {
        // No left vertex to anchor; nothing is counted here.
    } else if l == 0 {
        if k == 1 {
            conn[0] = BigUint::from(1u32);
        }
    } else {
        for e in 0..=max_e {
            // All graphs with e edges minus those where vertex 1's component
            // is a proper piece.
            let mut total = binom_big((k as u64) * (l as u64), e as u64);
            for kp in 1..=k {
                for lp in 0..=l {
                    if (kp, lp) == (k, l) {
                        continue;
                    }
                    let comp = conn_by_edges(kp, lp, memo);
                    let rest_slots = ((k - kp) as u64) * ((l - lp) as u64);
                    let choose =
                        binom_big((k - 1) as u64, (kp - 1) as u64) * binom_big(l as u64, lp as u64);
                    for (ep, c) in comp.iter().enumerate() {
                        if ep > e || c == &BigUint::from(0u32) {
                            continue;
                        }
                        let rest = binom_big(rest_slots, (e - ep) as u64);
                        let term = &choose * c * rest;
                        if term <= total {
                            total -= term;
                        } else {
                            // Should never happen; guards integer underflow.
                            total = BigUint::from(0u32);
                        }
                    }
                }
            }
            conn[e] = total;
        }
    }
    memo.insert((k, l), conn.clone());
    conn
}

/// Moon's bipartite forest count
/// `F(k,l,a,b) = k^{l-b-1} l^{k-a-1} (a l + b k - a b)`,
/// exact, with the negative-exponent boundary cases resolved by divisibility.
pub fn moon_forest_count(k: u32, l: u32, a: u32, b: u32) -> Result<BigUint, EnumError> {
    if a > k || b > l || k == 0 || l == 0 {
        return Err(EnumError::Invalid(format!(
            "moon domain: need a <= k, b <= l, k,l >= 1; got k={k} l={l} a={a} b={b}"
        )));
    }
    if a == 0 && b == 0 {
        return Err(EnumError::Invalid("a = b = 0 excluded".into()));
    }
    let (k_, l_, a_, b_) = (k as i64, l as i64, a as i64, b as i64);
    let lin = BigUint::from((a_ * l_ + b_ * k_ - a_ * b_) as u64);
    let mut num = lin;
    let mut den = BigUint::from(1u32);
    let mut apply = |base: u32, exp: i64| {
        if exp >= 0 {
            num *= BigUint::from(base).pow(exp as u32);
        } else {
            den *= BigUint::from(base).pow((-exp) as u32);
        }
    };
    apply(k, l_ - b_ - 1);
    apply(l, k_ - a_ - 1);
    let (q, r) = (num.clone() / &den, num % &den);
    if r != BigUint::from(0u32) {
        return Err(EnumError::Invalid("moon formula not integral".into()));
    }
    Ok(q)
}

/// `P[G_{k,l,p} is connected] = sum_s C(k,l,s) p^{k+l-1+s} (1-p)^{kl-(k+l-1+s)}`.
pub fn connectivity_probability(table: &BipConnTable, p: f64) -> f64 {
    let (k, l) = (table.k as f64, table.l as f64);
    let nv = k + l;
    if table.counts.is_empty() {
        return 0.0;
    }
    if nv == 1.0 {
        return 1.0;
    }
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let kl = k * l;
    let spanning = nv - 1.0;
    let terms: Vec<f64> = table
        .counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != BigUint::from(0u32))
        .map(|(s, c)| {
            let e = spanning + s as f64;
            big_ln(c) + e * p.ln() + (kl - e) * (1.0 - p).ln()
        })
        .collect();
    log_sum_exp(&terms).exp()
}

fn big_ln(x: &BigUint) -> f64 {
    // Exact enough for log-space probability work: take the top 64 bits.
    let bits = x.bits();
    if bits <= 64 {
        let v: u64 = x.try_into().ok().map(|v: u64| v).unwrap_or(u64::MAX);
        (v as f64).ln()
    } else {
        let shift = bits - 64;
        let top: BigUint = x >> shift;
        let v: u64 = (&top).try_into().unwrap_or(u64::MAX);
        (v as f64).ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Cache of connectivity tables; exhaustive below the cap, recurrence above,
/// with the two routes cross-checked where they overlap in tests.
#[derive(Debug, Default)]
pub struct ConnTables {
    map: HashMap<(u32, u32), BipConnTable>,
}

impl ConnTables {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, k: u32, l: u32) -> &BipConnTable {
        self.map.entry((k, l)).or_insert_with(|| {
            if k as u64 * l as u64 <= EXHAUSTIVE_CAP {
                count_connected_bipartite(k, l).expect("within cap")
            } else {
                connected_table_recursive(k, l)
            }
        })
    }

    pub fn insert(&mut self, t: BipConnTable) {
        self.map.insert((t.k, t.l), t);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Versioned binary cache: `BCT1`, entry count, then per entry
    /// `(k, l, n_coeffs, [len, bytes-le]...)`, all little-endian u32 lengths.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), EnumError> {
        w.write_all(b"BCT1")?;
        let mut keys: Vec<_> = self.map.keys().copied().collect();
        keys.sort_unstable();
        w.write_all(&(keys.len() as u32).to_le_bytes())?;
        for key in keys {
            let t = &self.map[&key];
            w.write_all(&t.k.to_le_bytes())?;
            w.write_all(&t.l.to_le_bytes())?;
            w.write_all(&(t.counts.len() as u32).to_le_bytes())?;
            for c in &t.counts {
                let bytes = c.to_bytes_le();
                w.write_all(&(bytes.len() as u32).to_le_bytes())?;
                w.write_all(&bytes)?;
            }
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self, EnumError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"BCT1" {
            return Err(EnumError::Cache("bad magic".into()));
        }
        let read_u32 = |r: &mut R| -> Result<u32, EnumError> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let n = read_u32(&mut r)?;
        let mut map = HashMap::new();
        for _ in 0..n {
            let k = read_u32(&mut r)?;
            let l = read_u32(&mut r)?;
            let nc = read_u32(&mut r)?;
            let mut counts = Vec::with_capacity(nc as usize);
            for _ in 0..nc {
                let len = read_u32(&mut r)?;
                let mut bytes = vec![0u8; len as usize];
                r.read_exact(&mut bytes)?;
                counts.push(BigUint::from_bytes_le(&bytes));
            }
            map.insert((k, l), BipConnTable { k, l, counts });
        }
        Ok(ConnTables { map })
    }

    /// CSV export: `k,l,s,count` per line, sorted.
    pub fn export_csv<W: Write>(&self, mut w: W) -> Result<(), EnumError> {
        writeln!(w, "k,l,s,count")?;
        let mut keys: Vec<_> = self.map.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let t = &self.map[&key];
            for (s, c) in t.counts.iter().enumerate() {
                writeln!(w, "{},{},{},{}", t.k, t.l, s, c)?;
            }
        }
        Ok(())
    }
}

/// Exact cluster-law value
/// `P(k,l) = 2^{k+l-1} C(n-1,k-1) C(m,l) (1-p)^{k(2m-l)+l(2n-k)-kl}
///  P[G_{k,l,p} connected]`, evaluated in log space.
pub fn exact_p_formula(
    tables: &mut ConnTables,
    n: u64,
    m: u64,
    p: f64,
    k: u32,
    l: u32,
) -> f64 {
    if k == 0 || k as u64 > n || l as u64 > m {
        return 0.0;
    }
    let conn = connectivity_probability(tables.get(k, l), p);
    if conn == 0.0 && !(k == 1 && l == 0) {
        return 0.0;
    }
    let (kf, lf) = (k as i128, l as i128);
    let expo = kf * (2 * m as i128 - lf) + lf * (2 * n as i128 - kf) - kf * lf;
    let mut ln_p = (k as f64 + l as f64 - 1.0) * std::f64::consts::LN_2
        + ln_binomial(n - 1, k as u64 - 1)
        + ln_binomial(m, l as u64)
        + expo as f64 * (1.0 - p).ln();
    if !(k == 1 && l == 0) {
        ln_p += conn.ln();
    }
    ln_p.exp()
}

/// `S_p(k,l) = sum_s C(k,l,s) / (k^{l-1} l^{k-1}) (p/(1-p))^s`.
pub fn sp_value(table: &BipConnTable, p: f64) -> f64 {
    let norm = big_ln(&BipConnTable::tree_count_formula(table.k, table.l));
    let x = p / (1.0 - p);
    let mut acc = 0.0;
    for (s, c) in table.counts.iter().enumerate() {
        if *c != BigUint::from(0u32) {
            let tilt = if s == 0 { 0.0 } else { s as f64 * x.ln() };
            acc += (big_ln(c) - norm + tilt).exp();
        }
    }
    acc
}

/// Kernel-core style sandwich bound `k^{l-1} l^{k-1} (k+l)^{3s/2} (c/s)^{s/2}`
/// with a caller-supplied constant; natural scale.
pub fn bound_value(k: u32, l: u32, s: u32, c: f64) -> f64 {
    assert!(s >= 1, "bounds defined for s >= 1");
    let norm = big_ln(&BipConnTable::tree_count_formula(k, l));
    (norm
        + 1.5 * s as f64 * ((k + l) as f64).ln()
        + 0.5 * s as f64 * (c / s as f64).ln())
    .exp()
}

/// Lower sandwich bound; valid for `s <= (k+l)/4` and `k/l` in `(1/5, 5)`.
pub fn bound_lower(k: u32, l: u32, s: u32, c1: f64) -> Result<f64, EnumError> {
    if s as f64 > (k + l) as f64 / 4.0 {
        return Err(EnumError::Invalid("s > (k+l)/4".into()));
    }
    check_aspect(k, l)?;
    Ok(bound_value(k, l, s, c1))
}

/// Upper sandwich bound; valid for `k/l` in `(1/5, 5)`.
pub fn bound_upper(k: u32, l: u32, s: u32, c2: f64) -> Result<f64, EnumError> {
    check_aspect(k, l)?;
    Ok(bound_value(k, l, s, c2))
}

fn check_aspect(k: u32, l: u32) -> Result<(), EnumError> {
    let r = k as f64 / l as f64;
    if !(0.2 < r && r < 5.0) {
        return Err(EnumError::Invalid(format!("aspect k/l = {r} outside (1/5, 5)")));
    }
    Ok(())
}
