use std::collections::HashMap;

use super::h0::{cycle_edges, sorted_edges};
use super::{Bar, Barcode};
use crate::error::{Error, Result};
use crate::filtration::WeightedFlagFiltration;

/// Highest homology dimension computed by [`persistence_high`].
pub const MAX_SUPPORTED_DIM: usize = 2;

const NONE: u32 = u32::MAX;

/// Calls `visit` for every clique of `size` vertices in the graph given by
/// sorted upper adjacency lists. Vertices arrive in increasing order.
fn for_each_clique(nbrs: &[Vec<u32>], size: usize, mut visit: impl FnMut(&[u32])) {
    fn extend(nbrs: &[Vec<u32>], size: usize, clique: &mut Vec<u32>, cand: &[u32], visit: &mut dyn FnMut(&[u32])) {
        if clique.len() == size {
            visit(clique);
            return;
        }
        for (i, &c) in cand.iter().enumerate() {
            let next = intersect(&cand[i + 1..], &nbrs[c as usize]);
            if clique.len() + 1 + next.len() < size {
                continue;
            }
            clique.push(c);
            extend(nbrs, size, clique, &next, visit);
            clique.pop();
        }
    }
    let mut clique = Vec::with_capacity(size);
    for v in 0..nbrs.len() {
        clique.push(v as u32);
        extend(nbrs, size, &mut clique, &nbrs[v], &mut visit);
        clique.pop();
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
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
    out
}

/// Symmetric difference of two sorted columns, written into `col`.
fn add_column(col: &mut Vec<u32>, other: &[u32], scratch: &mut Vec<u32>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < col.len() && j < other.len() {
        match col[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(col[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&col[i..]);
    scratch.extend_from_slice(&other[j..]);
    std::mem::swap(col, scratch);
}

/// Standard left-to-right Z2 reduction. Returns the pivot row of each
/// reduced column, or `NONE` for zero and skipped columns.
fn reduce(n_rows: usize, n_cols: usize, boundary: impl Fn(usize, &mut Vec<u32>), skip: &[bool]) -> Vec<u32> {
    let mut owner = vec![NONE; n_rows];
    let mut reduced: Vec<Vec<u32>> = vec![Vec::new(); n_cols];
    let mut low = vec![NONE; n_cols];
    let mut col = Vec::new();
    let mut scratch = Vec::new();
    for j in 0..n_cols {
        if skip.get(j).copied().unwrap_or(false) {
            continue;
        }
        col.clear();
        boundary(j, &mut col);
        col.sort_unstable();
        while let Some(&pivot) = col.last() {
            let o = owner[pivot as usize];
            if o == NONE {
                break;
            }
            add_column(&mut col, &reduced[o as usize], &mut scratch);
        }
        if let Some(&pivot) = col.last() {
            owner[pivot as usize] = j as u32;
            low[j] = pivot;
            reduced[j] = std::mem::take(&mut col);
        }
    }
    low
}

struct Simplices<const K: usize> {
    values: Vec<f64>,
    vertices: Vec<[u32; K]>,
}

impl<const K: usize> Simplices<K> {
    fn collect(f: &WeightedFlagFiltration, nbrs: &[Vec<u32>], capacity: usize) -> Self {
        let mut items: Vec<(f64, [u32; K])> = Vec::with_capacity(capacity);
        for_each_clique(nbrs, K, |c| {
            let mut s = [0u32; K];
            s.copy_from_slice(c);
            let mut v = f64::NEG_INFINITY;
            for a in 0..K {
                for b in (a + 1)..K {
                    v = v.max(f.edge(s[a] as usize, s[b] as usize));
                }
            }
            items.push((v, s));
        });
        items.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        Self {
            values: items.iter().map(|x| x.0).collect(),
            vertices: items.into_iter().map(|x| x.1).collect(),
        }
    }

    fn len(&self) -> usize {
        self.values.len()
    }

    fn index(&self) -> HashMap<[u32; K], u32> {
        self.vertices.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect()
    }
}

fn count_cliques(nbrs: &[Vec<u32>], size: usize) -> u64 {
    let mut n = 0u64;
    for_each_clique(nbrs, size, |_| n += 1);
    n
}

/// Barcodes in dimensions `1..=max_dim`.
///
/// Only cliques whose value is strictly below the cap are materialized;
/// classes alive at the cap die there. Fails with `BudgetExceeded` before
/// allocating when the number of such cliques exceeds `budget`.
pub fn persistence_high(f: &WeightedFlagFiltration, max_dim: usize, budget: u64) -> Result<Vec<Barcode>> {
    if max_dim > MAX_SUPPORTED_DIM {
        return Err(Error::invalid(format!(
            "homology above dimension {MAX_SUPPORTED_DIM} is not supported (asked for {max_dim})"
        )));
    }
    if max_dim == 0 {
        return Ok(Vec::new());
    }
    let m = f.len();
    let cap = f.cap();
    let barcode = |dim: usize, bars: Vec<Bar>| {
        let mut b = Barcode {
            dim,
            bars,
            essential_cap: Some(cap),
        };
        b.sort();
        b
    };

    let edges = sorted_edges(f, Some(cap));
    let mut nbrs: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut edge_id = vec![NONE; m * m];
    for (i, &(_, j, k)) in edges.iter().enumerate() {
        nbrs[j as usize].push(k);
        edge_id[j as usize * m + k as usize] = i as u32;
    }
    for list in &mut nbrs {
        list.sort_unstable();
    }

    let n_tri = count_cliques(&nbrs, 3);
    let n_tet = if max_dim >= 2 { count_cliques(&nbrs, 4) } else { 0 };
    let required = m as u64 + edges.len() as u64 + n_tri + n_tet;
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }

    let tris = Simplices::<3>::collect(f, &nbrs, n_tri as usize);
    let mut cleared = vec![false; tris.len()];
    let mut out = Vec::with_capacity(max_dim);

    let mut h2 = Vec::new();
    if max_dim >= 2 {
        let tets = Simplices::<4>::collect(f, &nbrs, n_tet as usize);
        let tri_id = tris.index();
        let low = reduce(
            tris.len(),
            tets.len(),
            |c, col| {
                let [a, b, x, y] = tets.vertices[c];
                for face in [[b, x, y], [a, x, y], [a, b, y], [a, b, x]] {
                    col.push(tri_id[&face]);
                }
            },
            &[],
        );
        for (c, &row) in low.iter().enumerate() {
            if row != NONE {
                cleared[row as usize] = true;
                let (birth, death) = (tris.values[row as usize], tets.values[c]);
                if death > birth {
                    h2.push(Bar::new(birth, death));
                }
            }
        }
    }

    let low = reduce(
        edges.len(),
        tris.len(),
        |c, col| {
            let [a, b, x] = tris.vertices[c].map(|v| v as usize);
            col.extend([edge_id[a * m + b], edge_id[a * m + x], edge_id[b * m + x]]);
        },
        &cleared,
    );
    let mut h1 = Vec::new();
    let mut edge_paired = vec![false; edges.len()];
    for (c, &row) in low.iter().enumerate() {
        if row != NONE {
            edge_paired[row as usize] = true;
            let (birth, death) = (edges[row as usize].0, tris.values[c]);
            if death > birth {
                h1.push(Bar::new(birth, death));
            }
        }
    }
    for (i, cycle) in cycle_edges(m, &edges).into_iter().enumerate() {
        if cycle && !edge_paired[i] {
            h1.push(Bar::new(edges[i].0, cap));
        }
    }
    out.push(barcode(1, h1));

    if max_dim >= 2 {
        for (i, &row) in low.iter().enumerate() {
            if row == NONE && !cleared[i] {
                h2.push(Bar::new(tris.values[i], cap));
            }
        }
        out.push(barcode(2, h2));
    }
    Ok(out)
}
