//! Trajectory-driven weighted flag filtrations.
//!
//! After one node of a synchronized network is perturbed, each node's scalar
//! deviation signal determines when it enters the filtration, and each pair
//! enters once the area between their signals over the remaining horizon is
//! small. Higher simplices take the maximum value over their faces.

use serde::{Deserialize, Serialize};

use crate::dynamics::{DistanceMatrix, ScalarTrajectorySet, TimeGrid};
use crate::error::{Error, Result};

/// Thresholds controlling the filtration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiltrationParams {
    /// Deviation from the reference orbit that counts as "affected".
    pub eps_p: f64,
    /// Pairwise tail-integral threshold for two signals to be in sync.
    pub eps_sync: f64,
    /// Embedding-space cutoff for early edges.
    pub eps_d: f64,
}

impl Default for FiltrationParams {
    fn default() -> Self {
        Self {
            eps_p: 0.01,
            eps_sync: 0.1,
            eps_d: 8.0,
        }
    }
}

impl FiltrationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps_p", self.eps_p), ("eps_sync", self.eps_sync), ("eps_d", self.eps_d)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Suffix integrals `∫_{t_m}^{T_end} |a(t) - b(t)| dt` by the trapezoid rule.
#[derive(Clone, Debug, PartialEq)]
pub struct TailIntegral {
    grid: TimeGrid,
    suffix: Vec<f64>,
}

impl TailIntegral {
    pub fn new(a: &[f64], b: &[f64], grid: &TimeGrid) -> Result<Self> {
        if a.len() != grid.len || b.len() != grid.len {
            return Err(Error::DimensionMismatch {
                expected: grid.len,
                found: if a.len() != grid.len { a.len() } else { b.len() },
            });
        }
        let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
        Self::from_differences(&diffs, grid)
    }

    pub fn from_differences(diffs: &[f64], grid: &TimeGrid) -> Result<Self> {
        if diffs.len() != grid.len {
            return Err(Error::DimensionMismatch {
                expected: grid.len,
                found: diffs.len(),
            });
        }
        let mut suffix = vec![0.0; grid.len];
        fill_suffix(|m| diffs[m], grid, &mut suffix);
        Ok(Self { grid: *grid, suffix })
    }

    pub fn at(&self, m: usize) -> f64 {
        self.suffix[m]
    }

    pub fn values(&self) -> &[f64] {
        &self.suffix
    }

    /// Smallest sample index whose tail integral is `<= threshold`.
    pub fn first_index_within(&self, threshold: f64) -> usize {
        first_index_within(&self.suffix, threshold)
    }

    pub fn first_time_within(&self, threshold: f64) -> f64 {
        self.grid.time(self.first_index_within(threshold))
    }
}

fn fill_suffix(diff: impl Fn(usize) -> f64, grid: &TimeGrid, out: &mut [f64]) {
    let len = grid.len;
    if len == 0 {
        return;
    }
    out[len - 1] = 0.0;
    let mut next = diff(len - 1);
    for m in (0..len - 1).rev() {
        let here = diff(m);
        out[m] = out[m + 1] + 0.5 * (here + next) * grid.step(m);
        next = here;
    }
}

fn first_index_within(suffix: &[f64], threshold: f64) -> usize {
    debug_assert!(suffix.windows(2).all(|w| w[0] >= w[1]), "tail integrals must be non-increasing");
    suffix.partition_point(|&s| s > threshold)
}

/// Nodes whose deviation reaches `eps_p` at some sample `t > 0`; the
/// `perturbed` node's own `t = 0` sample also counts.
pub fn affected_set(scalars: &ScalarTrajectorySet, eps_p: f64, perturbed: Option<usize>) -> Vec<usize> {
    (0..scalars.nodes())
        .filter(|&j| {
            let start = if Some(j) == perturbed { 0 } else { 1 };
            scalars.node(j)[start.min(scalars.len())..].iter().any(|&v| v >= eps_p)
        })
        .collect()
}

/// Grid position of the global synchronization time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncTime {
    pub index: usize,
    pub time: f64,
}

/// First grid time after which every pairwise tail integral is at most
/// `eps_sync / 2`. Fewer than two nodes synchronize vacuously at `t0`.
pub fn global_sync_time(scalars: &ScalarTrajectorySet, eps_sync: f64) -> Result<SyncTime> {
    let grid = *scalars.grid();
    let mut buf = vec![0.0; grid.len];
    let mut index = 0;
    for j in 0..scalars.nodes() {
        for k in (j + 1)..scalars.nodes() {
            let (a, b) = (scalars.node(j), scalars.node(k));
            fill_suffix(|m| (a[m] - b[m]).abs(), &grid, &mut buf);
            index = index.max(first_index_within(&buf, 0.5 * eps_sync));
        }
    }
    sync_at(&grid, index)
}

fn sync_at(grid: &TimeGrid, index: usize) -> Result<SyncTime> {
    if grid.len > 1 && index + 1 >= grid.len {
        return Err(Error::SimulationTooShort { horizon: grid.t_end });
    }
    Ok(SyncTime {
        index,
        time: grid.time(index),
    })
}

/// `f(n_j)`: first grid time with deviation `>= eps_p`, capped at `t_sync`.
pub fn vertex_values(scalars: &ScalarTrajectorySet, eps_p: f64, t_sync: f64) -> Vec<f64> {
    let grid = scalars.grid();
    (0..scalars.nodes())
        .map(|j| {
            scalars
                .node(j)
                .iter()
                .position(|&v| v >= eps_p)
                .map_or(t_sync, |m| grid.time(m).min(t_sync))
        })
        .collect()
}

/// `f(e_jk)` for all pairs, as a dense symmetric matrix whose diagonal holds
/// the vertex values. Pairs farther apart than `eps_d` enter at `t_sync`;
/// closer pairs enter once their tail integral drops to `eps_sync`, but never
/// before either endpoint.
pub fn edge_values(
    scalars: &ScalarTrajectorySet,
    distance: impl Fn(usize, usize) -> f64,
    params: &FiltrationParams,
    vertex_values: &[f64],
    t_sync: f64,
) -> Vec<f64> {
    let grid = *scalars.grid();
    let m_count = scalars.nodes();
    let mut buf = vec![0.0; grid.len];
    let mut edges = vec![0.0; m_count * m_count];
    for j in 0..m_count {
        edges[j * m_count + j] = vertex_values[j];
        for k in (j + 1)..m_count {
            let value = if distance(j, k) <= params.eps_d {
                let (a, b) = (scalars.node(j), scalars.node(k));
                fill_suffix(|m| (a[m] - b[m]).abs(), &grid, &mut buf);
                let synced = grid.time(first_index_within(&buf, params.eps_sync));
                synced.max(vertex_values[j]).max(vertex_values[k])
            } else {
                t_sync
            };
            edges[j * m_count + k] = value;
            edges[k * m_count + j] = value;
        }
    }
    edges
}

/// Vertex and edge values on a complete graph. Higher simplices are valued
/// by the maximum over their edges and are enumerated on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedFlagFiltration {
    vertices: Vec<f64>,
    edges: Vec<f64>,
    t_sync: f64,
    max_dim: usize,
}

impl WeightedFlagFiltration {
    /// `edges` is a dense symmetric `M x M` matrix; its diagonal is ignored.
    pub fn new(vertices: Vec<f64>, mut edges: Vec<f64>, t_sync: f64, max_dim: usize) -> Result<Self> {
        let m = vertices.len();
        if edges.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                found: edges.len(),
            });
        }
        if !t_sync.is_finite() {
            return Err(Error::InconsistentFiltration("cap value must be finite".into()));
        }
        for j in 0..m {
            edges[j * m + j] = vertices[j];
            let v = vertices[j];
            if !(v.is_finite() && v <= t_sync) {
                return Err(Error::InconsistentFiltration(format!(
                    "vertex {j} value {v} not in range (cap {t_sync})"
                )));
            }
        }
        for j in 0..m {
            for k in (j + 1)..m {
                let e = edges[j * m + k];
                if e != edges[k * m + j] {
                    return Err(Error::InconsistentFiltration(format!("edge ({j}, {k}) is asymmetric")));
                }
                if !(e.is_finite() && e <= t_sync) {
                    return Err(Error::InconsistentFiltration(format!(
                        "edge ({j}, {k}) value {e} exceeds cap {t_sync}"
                    )));
                }
                if e < vertices[j] || e < vertices[k] {
                    return Err(Error::InconsistentFiltration(format!(
                        "edge ({j}, {k}) value {e} precedes an endpoint ({}, {})",
                        vertices[j], vertices[k]
                    )));
                }
            }
        }
        Ok(Self {
            vertices,
            edges,
            t_sync,
            max_dim,
        })
    }

    pub fn empty(t_sync: f64, max_dim: usize) -> Self {
        Self {
            vertices: Vec::new(),
            edges: Vec::new(),
            t_sync,
            max_dim,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, j: usize) -> f64 {
        self.vertices[j]
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    #[inline]
    pub fn edge(&self, j: usize, k: usize) -> f64 {
        self.edges[j * self.vertices.len() + k]
    }

    /// Value at which every simplex is present.
    pub fn cap(&self) -> f64 {
        self.t_sync
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    /// Flag value of a simplex given by its vertex list.
    pub fn simplex_value(&self, simplex: &[usize]) -> f64 {
        let mut v = f64::NEG_INFINITY;
        for (a, &j) in simplex.iter().enumerate() {
            v = v.max(self.vertices[j]);
            for &k in &simplex[a + 1..] {
                v = v.max(self.edge(j, k));
            }
        }
        v
    }

    /// Adds `c` to every value, including the cap.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + c).collect(),
            edges: self.edges.iter().map(|v| v + c).collect(),
            t_sync: self.t_sync + c,
            max_dim: self.max_dim,
        }
    }

    /// Relabels vertex `j` as `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let m = self.len();
        let mut vertices = vec![0.0; m];
        let mut edges = vec![0.0; m * m];
        for j in 0..m {
            vertices[perm[j]] = self.vertices[j];
            for k in 0..m {
                edges[perm[j] * m + perm[k]] = self.edge(j, k);
            }
        }
        Self {
            vertices,
            edges,
            t_sync: self.t_sync,
            max_dim: self.max_dim,
        }
    }
}

pub fn build_flag_filtration(
    vertex_values: Vec<f64>,
    edge_values: Vec<f64>,
    t_sync: f64,
    max_dim: usize,
) -> Result<WeightedFlagFiltration> {
    WeightedFlagFiltration::new(vertex_values, edge_values, t_sync, max_dim)
}

/// Filtration of one perturbation experiment plus the bookkeeping needed to
/// interpret it.
#[derive(Clone, Debug, PartialEq)]
pub struct EhFiltration {
    pub filtration: WeightedFlagFiltration,
    /// Original node ids of the filtration's vertices, ascending.
    pub affected: Vec<usize>,
    pub sync: SyncTime,
    /// The perturbed node was added although its deviation stayed below `eps_p`.
    pub perturbed_forced: bool,
}

/// Builds the filtration for the experiment that perturbed `perturbed`.
///
/// The perturbed node always belongs to the affected set unless
/// `perturbation_noop` is set, in which case the set is empty.
pub fn eh_filtration(
    scalars: &ScalarTrajectorySet,
    distances: &DistanceMatrix,
    params: &FiltrationParams,
    perturbed: usize,
    perturbation_noop: bool,
    max_dim: usize,
) -> Result<EhFiltration> {
    params.validate()?;
    if distances.size() != scalars.nodes() {
        return Err(Error::DimensionMismatch {
            expected: scalars.nodes(),
            found: distances.size(),
        });
    }
    if perturbation_noop {
        return Ok(EhFiltration {
            filtration: WeightedFlagFiltration::empty(0.0, max_dim),
            affected: Vec::new(),
            sync: SyncTime {
                index: 0,
                time: scalars.grid().t0,
            },
            perturbed_forced: false,
        });
    }
    let mut affected = affected_set(scalars, params.eps_p, Some(perturbed));
    let perturbed_forced = affected.binary_search(&perturbed).is_err();
    if perturbed_forced {
        let at = affected.partition_point(|&j| j < perturbed);
        affected.insert(at, perturbed);
    }

    let sub = scalars.select(&affected);
    let grid = *sub.grid();
    let m_count = sub.nodes();

    // One suffix pass per pair yields both the edge entry time and the pair's
    // contribution to the global sync index.
    let mut buf = vec![0.0; grid.len];
    let mut pair_sync = vec![0usize; m_count * m_count];
    let mut sync_index = 0;
    for j in 0..m_count {
        for k in (j + 1)..m_count {
            let (a, b) = (sub.node(j), sub.node(k));
            fill_suffix(|m| (a[m] - b[m]).abs(), &grid, &mut buf);
            sync_index = sync_index.max(first_index_within(&buf, 0.5 * params.eps_sync));
            pair_sync[j * m_count + k] = first_index_within(&buf, params.eps_sync);
        }
    }
    let sync = sync_at(&grid, sync_index)?;
    let t_sync = sync.time;

    let vertices = vertex_values(&sub, params.eps_p, t_sync);
    let mut edges = vec![0.0; m_count * m_count];
    for j in 0..m_count {
        for k in (j + 1)..m_count {
            let value = if distances.get(affected[j], affected[k]) <= params.eps_d {
                grid.time(pair_sync[j * m_count + k])
                    .max(vertices[j])
                    .max(vertices[k])
            } else {
                t_sync
            };
            edges[j * m_count + k] = value;
            edges[k * m_count + j] = value;
        }
    }
    let filtration = WeightedFlagFiltration::new(vertices, edges, t_sync, max_dim)?;
    Ok(EhFiltration {
        filtration,
        affected,
        sync,
        perturbed_forced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(steps: usize) -> TimeGrid {
        TimeGrid::with_steps(0.0, 0.01, steps)
    }

    #[test]
    fn identical_signals_have_zero_tail() {
        let g = grid(50);
        let a: Vec<f64> = (0..g.len).map(|m| (m as f64 * 0.1).sin().abs()).collect();
        let tail = TailIntegral::new(&a, &a, &g).unwrap();
        assert!(tail.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_difference_is_exact() {
        let g = grid(100);
        let diffs = vec![0.7; g.len];
        let tail = TailIntegral::from_differences(&diffs, &g).unwrap();
        for m in 0..g.len {
            let remaining = g.t_end - g.time(m);
            assert!((tail.at(m) - 0.7 * remaining).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_difference_integral() {
        let g = grid(100);
        let diffs: Vec<f64> = (0..g.len).map(|m| g.time(m)).collect();
        let tail = TailIntegral::from_differences(&diffs, &g).unwrap();
        assert!((tail.at(0) - 0.5).abs() < 1e-4);
    }

    #[test]
    fn mismatched_grids() {
        let g = grid(10);
        assert!(TailIntegral::new(&[0.0; 11], &[0.0; 10], &g).is_err());
    }

    fn ramp_set(maxima: &[f64]) -> ScalarTrajectorySet {
        let g = grid(100);
        let series: Vec<Vec<f64>> = maxima
            .iter()
            .map(|&mx| (0..g.len).map(|m| mx * (1.0 - (g.time(m) - 0.5).abs() * 2.0)).collect())
            .collect();
        ScalarTrajectorySet::from_series(g, &series).unwrap()
    }

    #[test]
    fn affected_set_thresholds() {
        let s = ramp_set(&[0.5, 1.5, 3.0]);
        assert_eq!(affected_set(&s, 0.0, None), vec![0, 1, 2]);
        assert_eq!(affected_set(&s, 10.0, None), Vec::<usize>::new());
        assert_eq!(affected_set(&s, 1.0, None), vec![1, 2]);
    }

    #[test]
    fn perturbed_node_counts_initial_sample() {
        let g = grid(10);
        let mut spike = vec![0.0; g.len];
        spike[0] = 5.0;
        let s = ScalarTrajectorySet::from_series(g, &[spike, vec![0.0; g.len]]).unwrap();
        assert_eq!(affected_set(&s, 1.0, None), Vec::<usize>::new());
        assert_eq!(affected_set(&s, 1.0, Some(0)), vec![0]);
    }

    #[test]
    fn sync_time_cases() {
        let g = grid(200);
        let flat = vec![0.3; g.len];
        let same = ScalarTrajectorySet::from_series(g, &[flat.clone(), flat.clone()]).unwrap();
        assert_eq!(global_sync_time(&same, 0.1).unwrap().time, 0.0);
        let single = ScalarTrajectorySet::from_series(g, std::slice::from_ref(&flat)).unwrap();
        assert_eq!(global_sync_time(&single, 0.0).unwrap().index, 0);

        let step: Vec<f64> = (0..g.len).map(|m| if g.time(m) < 1.0 - 1e-12 { 1.0 } else { 0.0 }).collect();
        let pair = ScalarTrajectorySet::from_series(g, &[step, vec![0.0; g.len]]).unwrap();
        let t = global_sync_time(&pair, 1.0).unwrap().time;
        assert!((t - 0.5).abs() < 1e-12, "{t}");
    }

    #[test]
    fn sync_never_reached_errors() {
        let g = grid(100);
        let pair = ScalarTrajectorySet::from_series(g, &[vec![1.0; g.len], vec![0.0; g.len]]).unwrap();
        assert!(matches!(
            global_sync_time(&pair, 0.0),
            Err(Error::SimulationTooShort { .. })
        ));
    }

    #[test]
    fn vertex_value_cases() {
        let g = grid(100);
        let ramp: Vec<f64> = (0..g.len).map(|m| m as f64 / 37.0).collect();
        let never = vec![0.0; g.len];
        let kicked: Vec<f64> = (0..g.len).map(|m| if m == 0 { 5.0 } else { 0.0 }).collect();
        let s = ScalarTrajectorySet::from_series(g, &[ramp, never, kicked]).unwrap();
        let v = vertex_values(&s, 1.0, 0.9);
        assert!((v[0] - 0.37).abs() < 1e-12);
        assert_eq!(v[1], 0.9);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn edge_value_cases() {
        let g = grid(200);
        // |a - b| = 1 up to t = 0.74; the tail drops to 0.05 at t = 0.70.
        let a: Vec<f64> = (0..g.len).map(|m| if g.time(m) < 0.75 - 1e-12 { 1.0 } else { 0.0 }).collect();
        let b = vec![0.0; g.len];
        let s = ScalarTrajectorySet::from_series(g, &[a, b]).unwrap();
        let params = FiltrationParams {
            eps_p: 0.5,
            eps_sync: 0.05,
            eps_d: 1.0,
        };
        let tail = TailIntegral::new(s.node(0), s.node(1), &g).unwrap();
        let synced = tail.first_time_within(params.eps_sync);
        assert!((synced - 0.70).abs() < 1e-12, "{synced}");

        let near = |_: usize, _: usize| 0.5;
        let far = |_: usize, _: usize| 2.0;
        let e = edge_values(&s, near, &params, &[0.2, 0.5], 1.5);
        assert_eq!(e[1], synced);
        let e = edge_values(&s, near, &params, &[0.9, 0.2], 1.5);
        assert_eq!(e[1], 0.9);
        let e = edge_values(&s, far, &params, &[0.9, 0.2], 1.5);
        assert_eq!(e[1], 1.5);

        let same = ScalarTrajectorySet::from_series(g, &[vec![0.0; g.len], vec![0.0; g.len]]).unwrap();
        let e = edge_values(&same, near, &params, &[0.0, 0.0], 1.5);
        assert_eq!(e[1], 0.0);
    }

    #[test]
    fn flag_values() {
        let f = build_flag_filtration(vec![0.0, 0.0], vec![0.0, 1.0, 1.0, 0.0], 1.0, 1).unwrap();
        assert_eq!(f.edge(0, 1), 1.0);
        let zeros = build_flag_filtration(vec![0.0; 3], vec![0.0; 9], 1.0, 1).unwrap();
        assert_eq!(zeros.simplex_value(&[0, 1, 2]), 0.0);
        let e = vec![0.0, 0.2, 0.5, 0.2, 0.0, 0.9, 0.5, 0.9, 0.0];
        let tri = build_flag_filtration(vec![0.0; 3], e, 1.0, 1).unwrap();
        assert_eq!(tri.simplex_value(&[0, 1, 2]), 0.9);
    }

    #[test]
    fn monotonicity_violation_is_rejected() {
        let err = build_flag_filtration(vec![0.5, 0.0], vec![0.0, 0.3, 0.3, 0.0], 1.0, 1).unwrap_err();
        assert!(matches!(err, Error::InconsistentFiltration(_)));
        assert!(build_flag_filtration(vec![0.0, 0.0], vec![0.0, 2.0, 2.0, 0.0], 1.0, 1).is_err());
    }
}
