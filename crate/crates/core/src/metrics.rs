//! Distances between barcodes by optimal partial matching.
//!
//! A bar left unmatched costs its existence `λ = (d - b) / 2`, the distance
//! to the nearest zero-length bar. Matched bars cost `Δ`, the larger of the
//! endpoint gaps.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::persistence::{Bar, Barcode};

/// Endpoint distance `max(|b1 - b2|, |d1 - d2|)`.
pub fn delta(a: &Bar, b: &Bar) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

/// Half-length of a bar.
pub fn existence(bar: &Bar) -> f64 {
    (bar.death - bar.birth) / 2.0
}

/// Order of a Wasserstein distance; `Infinity` is the bottleneck distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PNorm {
    Finite(f64),
    Infinity,
}

impl PNorm {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(PNorm::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(PNorm::Finite(p))
        } else {
            Err(Error::invalid(format!("p must be at least 1, got {p}")))
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PNorm::Finite(p) => write!(f, "{p}"),
            PNorm::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(PNorm::Infinity),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::invalid(format!("cannot parse p = {s:?}")))?;
                PNorm::new(p)
            }
        }
    }
}

/// Bars of `b1` paired with bars of `b2`; the rest are matched to the
/// diagonal.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialMatching {
    pub matched: Vec<(usize, usize)>,
    pub unmatched_left: Vec<usize>,
    pub unmatched_right: Vec<usize>,
}

impl PartialMatching {
    /// Largest single penalty under this matching.
    pub fn bottleneck_cost(&self, b1: &[Bar], b2: &[Bar]) -> f64 {
        let matched = self.matched.iter().map(|&(i, j)| delta(&b1[i], &b2[j]));
        let left = self.unmatched_left.iter().map(|&i| existence(&b1[i]));
        let right = self.unmatched_right.iter().map(|&j| existence(&b2[j]));
        matched.chain(left).chain(right).fold(0.0, f64::max)
    }

    /// Sum of p-th powers of the penalties.
    pub fn power_cost(&self, b1: &[Bar], b2: &[Bar], p: f64) -> f64 {
        let matched: f64 = self.matched.iter().map(|&(i, j)| delta(&b1[i], &b2[j]).powf(p)).fold(0.0, |a, b| a + b);
        let left: f64 = self.unmatched_left.iter().map(|&i| existence(&b1[i]).powf(p)).fold(0.0, |a, b| a + b);
        let right: f64 = self.unmatched_right.iter().map(|&j| existence(&b2[j]).powf(p)).fold(0.0, |a, b| a + b);
        matched + left + right
    }

    fn from_assignment(n1: usize, n2: usize, row_to_col: &[usize]) -> Self {
        let mut m = PartialMatching::default();
        let mut right_used = vec![false; n2];
        for (i, &j) in row_to_col.iter().enumerate().take(n1) {
            if j < n2 {
                m.matched.push((i, j));
                right_used[j] = true;
            } else {
                m.unmatched_left.push(i);
            }
        }
        m.unmatched_right = (0..n2).filter(|&j| !right_used[j]).collect();
        m
    }
}

fn check_finite(bars: &[Bar]) -> Result<()> {
    match bars.iter().find(|b| !(b.birth.is_finite() && b.death.is_finite())) {
        Some(b) => Err(Error::NonFiniteBar {
            birth: b.birth,
            death: b.death,
        }),
        None => Ok(()),
    }
}

/// Minimum-cost perfect assignment on a dense `n x n` row-major cost matrix
/// (Hungarian method with potentials). Returns the column of each row.
fn hungarian(n: usize, cost: &[f64]) -> Vec<usize> {
    const NIL: usize = 0;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // Columns and rows are 1-based below; index 0 is a sentinel.
    let mut row_of = vec![NIL; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut step = f64::INFINITY;
            let mut j1 = 0;
            let row = &cost[(i0 - 1) * n..i0 * n];
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < step {
                    step = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += step;
                    v[j] -= step;
                } else {
                    minv[j] -= step;
                }
            }
            j0 = j1;
            if row_of[j0] == NIL {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

/// Optimal partial matching for the p-Wasserstein cost and the p-th power of
/// its value.
///
/// Each side is padded with one diagonal slot per bar of the other side, so
/// the problem becomes a square assignment of size `n1 + n2`.
pub fn wasserstein_matching(b1: &[Bar], b2: &[Bar], p: f64) -> Result<(f64, PartialMatching)> {
    check_finite(b1)?;
    check_finite(b2)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("p must be finite and at least 1, got {p}")));
    }
    let (n1, n2) = (b1.len(), b2.len());
    let n = n1 + n2;
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = match (i < n1, j < n2) {
                (true, true) => delta(&b1[i], &b2[j]).powf(p),
                (true, false) => existence(&b1[i]).powf(p),
                (false, true) => existence(&b2[j]).powf(p),
                (false, false) => 0.0,
            };
        }
    }
    let assignment = hungarian(n, &cost);
    let matching = PartialMatching::from_assignment(n1, n2, &assignment);
    Ok((matching.power_cost(b1, b2, p), matching))
}

/// p-Wasserstein distance for finite `p >= 1`.
pub fn wasserstein(b1: &[Bar], b2: &[Bar], p: f64) -> Result<f64> {
    let (total, _) = wasserstein_matching(b1, b2, p)?;
    Ok(total.powf(1.0 / p))
}

/// Kuhn's augmenting-path search for a perfect matching.
fn has_perfect_matching(n: usize, adj: &[Vec<usize>]) -> bool {
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [usize]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j] == usize::MAX || augment(owner[j], adj, seen, owner) {
                owner[j] = i;
                return true;
            }
        }
        false
    }
    let mut owner = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    (0..n).all(|i| {
        seen.fill(false);
        augment(i, adj, &mut seen, &mut owner)
    })
}

/// Bottleneck distance with a witnessing matching.
///
/// The optimum is one of the candidate penalties, so it is found exactly by
/// binary search with a perfect-matching feasibility test at each threshold.
pub fn bottleneck_matching(b1: &[Bar], b2: &[Bar]) -> Result<(f64, PartialMatching)> {
    check_finite(b1)?;
    check_finite(b2)?;
    let (n1, n2) = (b1.len(), b2.len());
    let mut candidates: Vec<f64> = vec![0.0];
    candidates.extend(b1.iter().chain(b2).map(existence));
    for a in b1 {
        candidates.extend(b2.iter().map(|b| delta(a, b)));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // Rows: bars of b1, then diagonal slots for b2. Columns: bars of b2,
    // then diagonal slots for b1.
    let graph = |t: f64| -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); n1 + n2];
        for (i, a) in b1.iter().enumerate() {
            adj[i].extend((0..n2).filter(|&j| delta(a, &b2[j]) <= t));
            if existence(a) <= t {
                adj[i].push(n2 + i);
            }
        }
        for (j, b) in b2.iter().enumerate() {
            if existence(b) <= t {
                adj[n1 + j].push(j);
            }
            adj[n1 + j].extend((0..n1).map(|i| n2 + i));
        }
        adj
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(n1 + n2, &graph(candidates[mid])) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let value = candidates[lo];
    let matching = threshold_matching(b1, b2, &graph(value));
    Ok((value, matching))
}

fn threshold_matching(b1: &[Bar], b2: &[Bar], adj: &[Vec<usize>]) -> PartialMatching {
    let (n1, n2) = (b1.len(), b2.len());
    let n = n1 + n2;
    // Zero cost on threshold edges, unit cost elsewhere; a perfect matching
    // exists, so the optimal assignment uses only edges.
    let mut cost = vec![1.0; n * n];
    for (i, row) in adj.iter().enumerate() {
        for &j in row {
            cost[i * n + j] = 0.0;
        }
    }
    let assignment = hungarian(n, &cost);
    PartialMatching::from_assignment(n1, n2, &assignment)
}

/// Bottleneck distance.
pub fn bottleneck(b1: &[Bar], b2: &[Bar]) -> Result<f64> {
    bottleneck_matching(b1, b2).map(|(v, _)| v)
}

/// Wasserstein or bottleneck distance, by `p`.
pub fn distance(b1: &[Bar], b2: &[Bar], p: PNorm) -> Result<f64> {
    match p {
        PNorm::Finite(p) => wasserstein(b1, b2, p),
        PNorm::Infinity => bottleneck(b1, b2),
    }
}

/// Distance to the empty barcode, where every bar goes to the diagonal.
pub fn distance_to_empty(bars: &[Bar], p: PNorm) -> Result<f64> {
    check_finite(bars)?;
    Ok(match p {
        PNorm::Infinity => bars.iter().map(existence).fold(0.0, f64::max),
        PNorm::Finite(p) => bars.iter().map(|b| existence(b).powf(p)).fold(0.0, |a, b| a + b).powf(1.0 / p),
    })
}

/// The nine per-node features: distance to the empty barcode for
/// `p ∈ {∞, 1, 2}` and dimensions 0, 1, 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EhFeatures {
    pub values: [f64; 9],
}

impl EhFeatures {
    pub const ORDERS: [PNorm; 3] = [PNorm::Infinity, PNorm::Finite(1.0), PNorm::Finite(2.0)];
    pub const NAMES: [&'static str; 9] = [
        "EH_inf_0", "EH_inf_1", "EH_inf_2", "EH_1_0", "EH_1_1", "EH_1_2", "EH_2_0", "EH_2_1", "EH_2_2",
    ];
    /// Columns used by the default regression: `∞`, 1 and 2 in dimensions 0 and 1.
    pub const REGRESSION: [usize; 6] = [0, 1, 3, 4, 6, 7];

    pub fn zero() -> Self {
        Self { values: [0.0; 9] }
    }

    /// Features from barcodes indexed by dimension; missing dimensions count
    /// as empty.
    pub fn from_barcodes(barcodes: &[Barcode]) -> Result<Self> {
        let mut values = [0.0; 9];
        for (a, p) in Self::ORDERS.iter().enumerate() {
            for k in 0..3 {
                if let Some(b) = barcodes.iter().find(|b| b.dim == k) {
                    values[3 * a + k] = distance_to_empty(&b.bars, *p)?;
                }
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, p: PNorm, dim: usize) -> Option<f64> {
        let a = Self::ORDERS.iter().position(|q| *q == p)?;
        (dim < 3).then(|| self.values[3 * a + dim])
    }

    pub fn regression_row(&self) -> [f64; 6] {
        Self::REGRESSION.map(|c| self.values[c])
    }
}

impl Serialize for EhFeatures {
    /// A map from feature name to value, in column order.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(9))?;
        for (name, v) in Self::NAMES.iter().zip(self.values) {
            map.serialize_entry(name, &v)?;
        }
        map.end()
    }
}
