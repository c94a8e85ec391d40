use super::{Bar, Barcode};
use crate::filtration::WeightedFlagFiltration;

struct Components {
    parent: Vec<usize>,
    /// Oldest vertex of the component rooted here.
    elder: Vec<usize>,
}

impl Components {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            elder: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }
}

/// Edges in filtration order: value, then lexicographic endpoints.
pub(super) fn sorted_edges(f: &WeightedFlagFiltration, below: Option<f64>) -> Vec<(f64, u32, u32)> {
    let m = f.len();
    let mut edges = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for j in 0..m {
        for k in (j + 1)..m {
            let v = f.edge(j, k);
            if below.map_or(true, |cap| v < cap) {
                edges.push((v, j as u32, k as u32));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    edges
}

/// Zero-dimensional barcode by union-find. Each merge kills the younger
/// component (later birth; ties go to the larger vertex id). Components
/// alive at the end get an essential bar ending at the cap. That bar is
/// kept even when it has zero length, since the class exists in the final
/// complex.
pub fn persistence_h0(f: &WeightedFlagFiltration) -> Barcode {
    let m = f.len();
    let mut comps = Components::new(m);
    let older = |a: usize, b: usize| (f.vertex(a), a) < (f.vertex(b), b);
    let mut bars = Vec::new();
    for (value, j, k) in sorted_edges(f, None) {
        let (rj, rk) = (comps.find(j as usize), comps.find(k as usize));
        if rj == rk {
            continue;
        }
        let (ej, ek) = (comps.elder[rj], comps.elder[rk]);
        let (keep, drop, young) = if older(ej, ek) { (rj, rk, ek) } else { (rk, rj, ej) };
        let birth = f.vertex(young);
        if value > birth {
            bars.push(Bar::new(birth, value));
        }
        comps.parent[drop] = keep;
    }
    for v in 0..m {
        if comps.find(v) == v {
            bars.push(Bar::essential(f.vertex(comps.elder[v]), f.cap()));
        }
    }
    let mut barcode = Barcode {
        dim: 0,
        bars,
        essential_cap: Some(f.cap()),
    };
    barcode.sort();
    barcode
}

/// Marks sub-cap edges (in `sorted_edges` order) that do not merge
/// components, i.e. that create a one-dimensional cycle.
pub(super) fn cycle_edges(m: usize, edges: &[(f64, u32, u32)]) -> Vec<bool> {
    let mut comps = Components::new(m);
    edges
        .iter()
        .map(|&(_, j, k)| {
            let (rj, rk) = (comps.find(j as usize), comps.find(k as usize));
            if rj == rk {
                true
            } else {
                comps.parent[rk] = rj;
                false
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filtration(vertices: &[f64], edges: &[(usize, usize, f64)], cap: f64) -> WeightedFlagFiltration {
        let m = vertices.len();
        let mut e = vec![cap; m * m];
        for &(j, k, v) in edges {
            e[j * m + k] = v;
            e[k * m + j] = v;
        }
        WeightedFlagFiltration::new(vertices.to_vec(), e, cap, 0).unwrap()
    }

    #[test]
    fn one_vertex() {
        let b = persistence_h0(&filtration(&[0.3], &[], 1.0));
        assert_eq!(b.pairs(), vec![(0.3, 1.0)]);
    }

    #[test]
    fn vertex_at_cap_keeps_its_essential_bar() {
        let b = persistence_h0(&filtration(&[1.0], &[], 1.0));
        assert_eq!(b.pairs(), vec![(1.0, 1.0)]);
        assert!(b.bars[0].essential);
    }

    #[test]
    fn one_merge() {
        let b = persistence_h0(&filtration(&[0.0, 0.0], &[(0, 1, 1.0)], 2.0));
        assert_eq!(b.pairs(), vec![(0.0, 1.0), (0.0, 2.0)]);
        assert_eq!(b.bars.iter().filter(|x| x.essential).count(), 1);
    }

    #[test]
    fn elder_rule_on_a_path() {
        let f = filtration(&[0.0, 0.2, 0.4], &[(0, 1, 0.5), (1, 2, 0.7)], 1.0);
        let b = persistence_h0(&f);
        assert_eq!(b.pairs(), vec![(0.0, 1.0), (0.2, 0.5), (0.4, 0.7)]);
    }

    #[test]
    fn zero_length_merges_are_dropped() {
        let f = filtration(&[0.0, 0.5], &[(0, 1, 0.5)], 1.0);
        assert_eq!(persistence_h0(&f).pairs(), vec![(0.0, 1.0)]);
    }
}
