use serde::{Deserialize, Serialize};

use super::coupling::{euclidean, CoupledConfig, CoupledSystem, CouplingMatrix};
use super::integrate::{integrate_observed, TimeGrid, Trajectory, DEFAULT_STEP};
use super::lorenz::NodeDynamics;
use crate::error::{Error, Result};

/// Sampled synchronized attractor `s(t)`: a single state for a fixed point,
/// otherwise consecutive samples `h` apart over the observation window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOrbit {
    dim: usize,
    samples: Vec<f64>,
    period_length: f64,
}

impl ReferenceOrbit {
    pub fn fixed_point(state: &[f64]) -> Self {
        Self {
            dim: state.len(),
            samples: state.to_vec(),
            period_length: 0.0,
        }
    }

    pub fn from_samples(dim: usize, samples: Vec<f64>, period_length: f64) -> Result<Self> {
        if dim == 0 || samples.is_empty() || samples.len() % dim != 0 {
            return Err(Error::invalid("orbit samples must be a nonempty multiple of dim"));
        }
        Ok(Self {
            dim,
            samples,
            period_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_fixed_point(&self) -> bool {
        self.period_length == 0.0
    }

    pub fn period_length(&self) -> f64 {
        self.period_length
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.samples[k * self.dim..(k + 1) * self.dim]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.dim)
    }

    /// Minimum Euclidean distance from `u` to the stored samples.
    pub fn distance(&self, u: &[f64]) -> f64 {
        self.samples()
            .map(|s| euclidean(u, s))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Burn-in and detection settings for locating the synchronized orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSearch {
    pub burn_in: f64,
    pub window: f64,
    pub h: f64,
    pub fp_tol: f64,
}

impl Default for OrbitSearch {
    fn default() -> Self {
        Self {
            burn_in: 200.0,
            window: 10.0,
            h: DEFAULT_STEP,
            fp_tol: 1e-6,
        }
    }
}

/// Integrates the coupled system past `burn_in` and samples node 0 over
/// `window`. A per-coordinate spread below `fp_tol` yields a fixed point;
/// otherwise the raw window is returned.
///
/// Without a `seed`, every node starts at the all-ones state. The coupling
/// term vanishes exactly on synchronized states, so a single node is
/// integrated and the result is identical to the full coupled run.
pub fn find_reference_orbit<G: NodeDynamics + ?Sized>(
    node: &G,
    coupling: &CouplingMatrix,
    config: &CoupledConfig,
    search: &OrbitSearch,
    seed: Option<&[f64]>,
) -> Result<ReferenceOrbit> {
    if !(search.burn_in >= 0.0 && search.window > 0.0 && search.fp_tol >= 0.0) {
        return Err(Error::invalid("orbit search needs burn_in >= 0, window > 0, fp_tol >= 0"));
    }
    let system = CoupledSystem::new(node, coupling, config)?;
    let n = system.node_dim();
    let count = system.nodes();

    let after_burn_in = match seed {
        None => burn_in(|_, u, o| node.rhs(u, o), &vec![1.0; n], search)?,
        Some(seed) => {
            if seed.len() != system.state_len() {
                return Err(Error::DimensionMismatch {
                    expected: system.state_len(),
                    found: seed.len(),
                });
            }
            let state = burn_in(|_, u, o| system.rhs(u, o), seed, search)?;
            let reference = &state[..n];
            let deviation = (1..count)
                .map(|j| euclidean(&state[j * n..(j + 1) * n], reference))
                .fold(0.0, f64::max);
            if deviation > search.fp_tol {
                return Err(Error::NotSynchronized { deviation });
            }
            state[..n].to_vec()
        }
    };

    let grid = TimeGrid::covering(0.0, search.window, search.h)?;
    let mut samples = Vec::with_capacity(grid.len * n);
    integrate_observed(|_, u, o| node.rhs(u, o), &after_burn_in, &grid, |_, _, u| {
        samples.extend_from_slice(u)
    })?;
    let window = Trajectory::from_parts(grid, n, samples);

    let spread = (0..n)
        .map(|k| {
            let (lo, hi) = window
                .states()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[k]), hi.max(s[k])));
            hi - lo
        })
        .fold(0.0, f64::max);
    if spread < search.fp_tol {
        return Ok(ReferenceOrbit::fixed_point(window.last_state()));
    }
    let samples: Vec<f64> = window.states().flatten().copied().collect();
    ReferenceOrbit::from_samples(n, samples, search.window)
}

fn burn_in<F>(rhs: F, initial: &[f64], search: &OrbitSearch) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if search.burn_in == 0.0 {
        return Ok(initial.to_vec());
    }
    let grid = TimeGrid::covering(0.0, search.burn_in, search.h)?;
    integrate_observed(rhs, initial, &grid, |_, _, _| {})
}

/// Multiplies one component of one node's state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub component: usize,
    pub multiplier: f64,
}

impl Default for Perturbation {
    /// `u_{i,3} <- 2 s_3`.
    fn default() -> Self {
        Self {
            component: 2,
            multiplier: 2.0,
        }
    }
}

impl Perturbation {
    pub fn apply(&self, sync_state: &[f64], node_dim: usize, node: usize) -> Result<Vec<f64>> {
        if node_dim == 0 || sync_state.len() % node_dim != 0 {
            return Err(Error::invalid("state length is not a multiple of the node dimension"));
        }
        let count = sync_state.len() / node_dim;
        if node >= count {
            return Err(Error::IndexOutOfRange {
                index: node,
                len: count,
            });
        }
        if self.component >= node_dim {
            return Err(Error::invalid(format!(
                "perturbed component {} out of range for node dimension {node_dim}",
                self.component
            )));
        }
        let mut state = sync_state.to_vec();
        state[node * node_dim + self.component] *= self.multiplier;
        Ok(state)
    }

    /// True when applying the perturbation leaves `sync_state` unchanged.
    pub fn is_noop(&self, sync_state: &[f64], node_dim: usize, node: usize) -> bool {
        let v = sync_state[node * node_dim + self.component];
        v * self.multiplier == v
    }
}

/// Doubles the third component of node `i` (zero-based).
pub fn perturb(sync_state: &[f64], node_dim: usize, i: usize) -> Result<Vec<f64>> {
    Perturbation::default().apply(sync_state, node_dim, i)
}

/// Per-node nonnegative scalar signals on a shared time grid, node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarTrajectorySet {
    grid: TimeGrid,
    nodes: usize,
    values: Vec<f64>,
}

impl ScalarTrajectorySet {
    /// `rows[m][j]` is node `j` at sample `m` (time-major input).
    pub fn from_time_major(grid: TimeGrid, nodes: usize, time_major: &[f64]) -> Result<Self> {
        if time_major.len() != grid.len * nodes {
            return Err(Error::DimensionMismatch {
                expected: grid.len * nodes,
                found: time_major.len(),
            });
        }
        let mut values = vec![0.0; time_major.len()];
        for (m, row) in time_major.chunks_exact(nodes.max(1)).enumerate() {
            for (j, &v) in row.iter().enumerate() {
                values[j * grid.len + m] = v;
            }
        }
        Self::from_node_major(grid, nodes, values)
    }

    pub fn from_node_major(grid: TimeGrid, nodes: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len * nodes {
            return Err(Error::DimensionMismatch {
                expected: grid.len * nodes,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("scalar trajectories must be finite and nonnegative"));
        }
        Ok(Self { grid, nodes, values })
    }

    /// Convenience constructor from one sequence per node.
    pub fn from_series(grid: TimeGrid, series: &[Vec<f64>]) -> Result<Self> {
        let values = series.iter().flatten().copied().collect();
        Self::from_node_major(grid, series.len(), values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.grid.len
    }

    pub fn is_empty(&self) -> bool {
        self.grid.len == 0
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.values[j * self.grid.len..(j + 1) * self.grid.len]
    }

    /// Keeps only the listed nodes, in the given order.
    pub fn select(&self, nodes: &[usize]) -> Self {
        let values = nodes.iter().flat_map(|&j| self.node(j).iter().copied()).collect();
        Self {
            grid: self.grid,
            nodes: nodes.len(),
            values,
        }
    }
}

/// `û_j(t) = min_k |u_j(t) - s(t_k)|` over the orbit samples.
pub fn transform_trajectories(
    traj: &Trajectory,
    node_dim: usize,
    orbit: &ReferenceOrbit,
) -> Result<ScalarTrajectorySet> {
    if orbit.is_empty() || orbit.dim() != node_dim || traj.dim() % node_dim != 0 {
        return Err(Error::DimensionMismatch {
            expected: node_dim,
            found: orbit.dim(),
        });
    }
    let nodes = traj.dim() / node_dim;
    let mut values = Vec::with_capacity(traj.len() * nodes);
    for state in traj.states() {
        values.extend(state.chunks_exact(node_dim).map(|u| orbit.distance(u)));
    }
    ScalarTrajectorySet::from_time_major(*traj.grid(), nodes, &values)
}
