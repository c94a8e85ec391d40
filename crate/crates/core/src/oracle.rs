//! Slow reference implementations and random instance generators used to
//! cross-check the optimized code paths.

use rand::Rng;

use crate::dynamics::{DistanceMatrix, ScalarTrajectorySet, TimeGrid};
use crate::filtration::{EhFiltration, WeightedFlagFiltration};
use crate::metrics::{delta, existence, PNorm};
use crate::persistence::{Bar, Barcode};

/// Every clique of the complete graph up to `max_size` vertices, with its
/// flag value.
fn all_simplices(f: &WeightedFlagFiltration, max_size: usize) -> Vec<(f64, Vec<usize>)> {
    let m = f.len();
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << m) {
        let size = mask.count_ones() as usize;
        if size > max_size {
            continue;
        }
        let vertices: Vec<usize> = (0..m).filter(|&v| mask >> v & 1 == 1).collect();
        out.push((f.simplex_value(&vertices), vertices));
    }
    out.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.len().cmp(&b.1.len()))
            .then_with(|| a.1.cmp(&b.1))
    });
    out
}

/// Barcodes in dimensions `0..=max_dim` from a dense Z2 reduction of the
/// whole boundary matrix, without truncation, clearing or union-find.
/// Exponential in the vertex count; intended for at most about ten vertices.
pub fn dense_barcodes(f: &WeightedFlagFiltration, max_dim: usize) -> Vec<Barcode> {
    assert!(f.len() < 16, "dense oracle is for tiny complexes");
    let simplices = all_simplices(f, max_dim + 2);
    let n = simplices.len();
    let position: std::collections::HashMap<&[usize], usize> =
        simplices.iter().enumerate().map(|(i, s)| (s.1.as_slice(), i)).collect();

    let mut columns: Vec<Vec<bool>> = simplices
        .iter()
        .map(|(_, s)| {
            let mut col = vec![false; n];
            if s.len() > 1 {
                for skip in 0..s.len() {
                    let face: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                    col[position[face.as_slice()]] = true;
                }
            }
            col
        })
        .collect();

    let low = |col: &[bool]| col.iter().rposition(|&x| x);
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut paired = vec![false; n];
    let mut out: Vec<Barcode> = (0..=max_dim)
        .map(|k| Barcode {
            dim: k,
            bars: Vec::new(),
            essential_cap: Some(f.cap()),
        })
        .collect();
    for j in 0..n {
        while let Some(l) = low(&columns[j]) {
            match owner[l] {
                Some(o) => {
                    let other = columns[o].clone();
                    for (x, y) in columns[j].iter_mut().zip(other) {
                        *x ^= y;
                    }
                }
                None => break,
            }
        }
        if let Some(l) = low(&columns[j]) {
            owner[l] = Some(j);
            paired[l] = true;
            paired[j] = true;
            let dim = simplices[l].1.len() - 1;
            let (birth, death) = (simplices[l].0, simplices[j].0);
            if dim <= max_dim && death > birth {
                out[dim].bars.push(Bar::new(birth, death));
            }
        }
    }
    for (i, (value, s)) in simplices.iter().enumerate() {
        let dim = s.len() - 1;
        if !paired[i] && dim <= max_dim {
            out[dim].bars.push(Bar::essential(*value, f.cap()));
        }
    }
    for b in &mut out {
        b.sort();
    }
    out
}

/// Optimal cost over every partial bijection, by exhaustive enumeration:
/// the p-th power sum for finite `p`, the largest penalty for `p = ∞`.
pub fn brute_force_cost(b1: &[Bar], b2: &[Bar], p: PNorm) -> f64 {
    fn search(i: usize, b1: &[Bar], b2: &[Bar], used: &mut Vec<bool>, costs: &mut Vec<f64>, best: &mut f64, p: PNorm) {
        if i == b1.len() {
            let mut all = costs.clone();
            all.extend(b2.iter().zip(used.iter()).filter(|(_, &u)| !u).map(|(b, _)| existence(b)));
            let value = match p {
                PNorm::Infinity => all.iter().copied().fold(0.0, f64::max),
                PNorm::Finite(p) => all.iter().map(|c| c.powf(p)).sum(),
            };
            *best = best.min(value);
            return;
        }
        costs.push(existence(&b1[i]));
        search(i + 1, b1, b2, used, costs, best, p);
        costs.pop();
        for j in 0..b2.len() {
            if !used[j] {
                used[j] = true;
                costs.push(delta(&b1[i], &b2[j]));
                search(i + 1, b1, b2, used, costs, best, p);
                costs.pop();
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    search(0, b1, b2, &mut vec![false; b2.len()], &mut Vec::new(), &mut best, p);
    best
}

/// Distance from the exhaustive optimum.
pub fn brute_force_distance(b1: &[Bar], b2: &[Bar], p: PNorm) -> f64 {
    let cost = brute_force_cost(b1, b2, p);
    match p {
        PNorm::Infinity => cost,
        PNorm::Finite(p) => cost.powf(1.0 / p),
    }
}

/// Monotone flag filtration on `m` vertices with values in `[0, 1]` and cap 1.
///
/// Some values are rounded to a coarse grid so that ties occur, and some
/// edges are pushed to the cap so that truncation is exercised.
pub fn random_flag_filtration<R: Rng>(rng: &mut R, m: usize, max_dim: usize) -> WeightedFlagFiltration {
    let coarse = rng.gen_bool(0.3);
    let draw = |rng: &mut R| {
        let x: f64 = rng.gen();
        if coarse {
            (x * 8.0).round() / 8.0
        } else {
            x
        }
    };
    let vertices: Vec<f64> = (0..m).map(|_| draw(rng) * 0.5).collect();
    let mut edges = vec![0.0; m * m];
    for j in 0..m {
        for k in (j + 1)..m {
            let v = if rng.gen_bool(0.15) {
                1.0
            } else {
                draw(rng).max(vertices[j]).max(vertices[k])
            };
            edges[j * m + k] = v;
            edges[k * m + j] = v;
        }
    }
    WeightedFlagFiltration::new(vertices, edges, 1.0, max_dim).expect("generated filtration is monotone")
}

/// Barcode of up to `max_bars` bars with endpoints in `[0, 1]`, zero-length
/// bars included.
pub fn random_bars<R: Rng>(rng: &mut R, max_bars: usize) -> Vec<Bar> {
    let n = rng.gen_range(0..=max_bars);
    (0..n)
        .map(|_| {
            let a: f64 = rng.gen();
            let b: f64 = if rng.gen_bool(0.1) { a } else { rng.gen() };
            Bar::new(a.min(b), a.max(b))
        })
        .collect()
}

/// Decaying synthetic deviation signals for `nodes` nodes on `steps + 1`
/// samples of spacing 0.05, with random positions in a 12 x 12 x 12 box.
///
/// Signal `j` is `a_j exp(-r_j t) |cos(w_j t + phase_j)|`, so every pair
/// eventually agrees and a sync time exists.
pub fn random_trajectory_set<R: Rng>(rng: &mut R, nodes: usize, steps: usize) -> (ScalarTrajectorySet, Vec<[f64; 3]>) {
    let grid = TimeGrid::with_steps(0.0, 0.05, steps);
    let series: Vec<Vec<f64>> = (0..nodes)
        .map(|_| {
            let a = if rng.gen_bool(0.2) { rng.gen_range(0.0..0.02) } else { rng.gen_range(0.0..1.0) };
            let r: f64 = rng.gen_range(0.3..3.0);
            let w: f64 = rng.gen_range(0.0..4.0);
            let phase: f64 = rng.gen_range(0.0..3.0);
            (0..grid.len)
                .map(|m| {
                    let t = grid.time(m);
                    a * (-r * t).exp() * (w * t + phase).cos().abs()
                })
                .collect()
        })
        .collect();
    let points = (0..nodes)
        .map(|_| [rng.gen_range(0.0..12.0), rng.gen_range(0.0..12.0), rng.gen_range(0.0..12.0)])
        .collect();
    let set = ScalarTrajectorySet::from_series(grid, &series).expect("series share the grid");
    (set, points)
}

/// Relabels nodes so that old node `j` becomes `perm[j]`.
pub fn permute_trajectory_set(set: &ScalarTrajectorySet, points: &[[f64; 3]], perm: &[usize]) -> (ScalarTrajectorySet, Vec<[f64; 3]>) {
    let n = set.nodes();
    let mut series = vec![Vec::new(); n];
    let mut moved = vec![[0.0; 3]; n];
    for j in 0..n {
        series[perm[j]] = set.node(j).to_vec();
        moved[perm[j]] = points[j];
    }
    (
        ScalarTrajectorySet::from_series(*set.grid(), &series).expect("series share the grid"),
        moved,
    )
}

/// Distance matrix for [`random_trajectory_set`] positions.
pub fn distances(points: &[[f64; 3]]) -> DistanceMatrix {
    DistanceMatrix::from_points(points).expect("finite points")
}

/// True when `b` is `a` computed on inputs relabeled by `perm`: the affected
/// sets correspond and every vertex and edge value is bit-identical.
pub fn same_up_to_relabeling(a: &EhFiltration, b: &EhFiltration, perm: &[usize]) -> bool {
    let mut mapped: Vec<usize> = a.affected.iter().map(|&j| perm[j]).collect();
    mapped.sort_unstable();
    if mapped != b.affected || a.sync.time.to_bits() != b.sync.time.to_bits() {
        return false;
    }
    let local = |j: usize| b.affected.binary_search(&perm[a.affected[j]]).expect("mapped node is affected");
    let (fa, fb) = (&a.filtration, &b.filtration);
    (0..fa.len()).all(|j| {
        fa.vertex(j).to_bits() == fb.vertex(local(j)).to_bits()
            && (0..fa.len()).all(|k| j == k || fa.edge(j, k).to_bits() == fb.edge(local(j), local(k)).to_bits())
    })
}

/// Sorted `(birth, death)` pairs for multiset comparison.
pub fn multiset(barcode: &Barcode) -> Vec<(f64, f64)> {
    barcode.pairs()
}
