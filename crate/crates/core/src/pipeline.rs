//! Perturb one node of a synchronized network, watch it relax, and turn the
//! relaxation into barcodes and features.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    coupling_from_distances, find_reference_orbit, CoupledConfig, CoupledSystem, CouplingMatrix, DistanceMatrix,
    LorenzParams, OrbitSearch, Perturbation, ReferenceOrbit, Rk4, ScalarTrajectorySet, TimeGrid, DEFAULT_STEP,
};
use crate::error::{Error, Result};
use crate::filtration::{eh_filtration, FiltrationParams};
use crate::metrics::EhFeatures;
use crate::persistence::{barcodes, Barcode, DEFAULT_SIMPLEX_BUDGET};

/// Every parameter of one perturbation experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EhConfig {
    pub lorenz: LorenzParams,
    /// Coupling length scale.
    pub mu: f64,
    /// Coupling decay exponent.
    pub kappa: f64,
    /// Coupling strength.
    pub epsilon: f64,
    /// Row-major 3 x 3 linking matrix between node components.
    pub linking: Vec<f64>,
    pub h: f64,
    /// Initial simulation horizon after the perturbation.
    pub horizon: f64,
    /// How many times the horizon may be doubled before giving up.
    pub max_doublings: u32,
    pub orbit: OrbitSearch,
    pub perturbation: Perturbation,
    pub filtration: FiltrationParams,
    pub max_dim: usize,
    pub budget: u64,
}

impl Default for EhConfig {
    fn default() -> Self {
        Self {
            lorenz: LorenzParams::default(),
            mu: 8.0,
            kappa: 2.0,
            epsilon: 0.12,
            linking: CoupledConfig::identity(3, 0.0).linking,
            h: DEFAULT_STEP,
            horizon: 20.0,
            max_doublings: 8,
            orbit: OrbitSearch::default(),
            perturbation: Perturbation::default(),
            filtration: FiltrationParams::default(),
            max_dim: 2,
            budget: DEFAULT_SIMPLEX_BUDGET,
        }
    }
}

impl EhConfig {
    pub fn validate(&self) -> Result<()> {
        self.lorenz.validate()?;
        self.filtration.validate()?;
        self.coupled().validate()?;
        let positive = [("mu", self.mu), ("kappa", self.kappa), ("h", self.h), ("horizon", self.horizon)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive and finite")));
            }
        }
        if self.horizon < self.h {
            return Err(Error::invalid("horizon must be at least one step"));
        }
        if self.max_dim > crate::persistence::MAX_SUPPORTED_DIM {
            return Err(Error::invalid(format!(
                "max_dim must be at most {}",
                crate::persistence::MAX_SUPPORTED_DIM
            )));
        }
        if !self.perturbation.multiplier.is_finite() || self.perturbation.component >= 3 {
            return Err(Error::invalid("perturbation needs a finite multiplier and a component in 0..3"));
        }
        Ok(())
    }

    pub fn coupled(&self) -> CoupledConfig {
        CoupledConfig {
            epsilon: self.epsilon,
            n: 3,
            linking: self.linking.clone(),
        }
    }

    fn horizon_steps(&self) -> usize {
        ((self.horizon / self.h).round() as usize).max(1)
    }
}

/// Outcome of perturbing one node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeEh {
    pub node: usize,
    /// Barcodes for dimensions `0..=max_dim`.
    pub barcodes: Vec<Barcode>,
    pub features: EhFeatures,
    pub t_sync: f64,
    /// Affected node ids, ascending.
    pub affected: Vec<usize>,
    /// Simulated time after the perturbation.
    pub horizon: f64,
    pub perturbed_forced: bool,
    pub noop: bool,
    pub warnings: Vec<String>,
}

/// A network of coupled Lorenz oscillators at embedded positions, with its
/// synchronized reference orbit already located.
#[derive(Clone, Debug)]
pub struct EhSystem {
    config: EhConfig,
    distances: DistanceMatrix,
    coupling: CouplingMatrix,
    orbit: ReferenceOrbit,
    sync_state: Vec<f64>,
}

impl EhSystem {
    pub fn prepare<P: AsRef<[f64]>>(points: &[P], config: EhConfig) -> Result<Self> {
        config.validate()?;
        let distances = DistanceMatrix::from_points(points)?;
        let coupling = coupling_from_distances(&distances, config.mu, config.kappa)?;
        let orbit = find_reference_orbit(&config.lorenz, &coupling, &config.coupled(), &config.orbit, None)?;
        let on_orbit = orbit.sample(orbit.len() - 1).to_vec();
        let sync_state = on_orbit.repeat(distances.size());
        Ok(Self {
            config,
            distances,
            coupling,
            orbit,
            sync_state,
        })
    }

    pub fn config(&self) -> &EhConfig {
        &self.config
    }

    pub fn nodes(&self) -> usize {
        self.distances.size()
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    pub fn orbit(&self) -> &ReferenceOrbit {
        &self.orbit
    }

    /// Synchronized state of the whole network, node-major.
    pub fn sync_state(&self) -> &[f64] {
        &self.sync_state
    }

    /// Integrates `steps` steps after perturbing node `i`, calling
    /// `observe(m, state)` at every sample including the initial one.
    pub fn simulate(&self, i: usize, steps: usize, mut observe: impl FnMut(usize, &[f64])) -> Result<()> {
        let mut run = self.start(i)?;
        observe(0, &run.state);
        run.advance(steps, |m, u| observe(m, u))
    }

    /// Scalar deviation signals over `steps` steps after perturbing node `i`.
    pub fn node_trajectories(&self, i: usize, steps: usize) -> Result<ScalarTrajectorySet> {
        let n = self.nodes();
        let mut values = Vec::with_capacity((steps + 1) * n);
        self.simulate(i, steps, |_, u| values.extend(u.chunks_exact(3).map(|x| self.orbit.distance(x))))?;
        ScalarTrajectorySet::from_time_major(TimeGrid::with_steps(0.0, self.config.h, steps), n, &values)
    }

    fn start(&self, i: usize) -> Result<Run<'_>> {
        let state = self.config.perturbation.apply(&self.sync_state, 3, i)?;
        Ok(Run {
            system: self,
            coupled: self.config.coupled(),
            stepper: Rk4::new(state.len()),
            state,
            steps: 0,
        })
    }

    /// Perturbs node `i` and computes its barcodes and features.
    ///
    /// The horizon is doubled until the global sync time falls strictly
    /// inside the simulated window and every affected node has relaxed to
    /// within `eps_p` of the reference orbit by the end. Extending continues
    /// the same run, so the result equals a single longer simulation.
    pub fn node_eh(&self, i: usize) -> Result<NodeEh> {
        self.node_eh_unlabeled(i).map_err(|e| e.at_residue(format!("node {i}")))
    }

    pub(crate) fn node_eh_unlabeled(&self, i: usize) -> Result<NodeEh> {
        let cfg = &self.config;
        let n = self.nodes();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        if cfg.perturbation.is_noop(&self.sync_state, 3, i) {
            return Ok(NodeEh {
                node: i,
                barcodes: (0..=cfg.max_dim).map(Barcode::empty).collect(),
                features: EhFeatures::zero(),
                t_sync: 0.0,
                affected: Vec::new(),
                horizon: 0.0,
                perturbed_forced: false,
                noop: true,
                warnings: vec![format!(
                    "perturbation leaves node {i} unchanged; affected set is empty and all features are 0"
                )],
            });
        }

        let mut run = self.start(i)?;
        let mut values: Vec<f64> = run.state.chunks_exact(3).map(|u| self.orbit.distance(u)).collect();
        let mut chunk = cfg.horizon_steps();
        let mut doublings = 0;
        loop {
            run.advance(chunk, |_, u| values.extend(u.chunks_exact(3).map(|x| self.orbit.distance(x))))?;
            let grid = TimeGrid::with_steps(0.0, cfg.h, run.steps);
            let scalars = ScalarTrajectorySet::from_time_major(grid, n, &values)?;
            let settled = match eh_filtration(&scalars, &self.distances, &cfg.filtration, i, false, cfg.max_dim) {
                Ok(eh) => {
                    let last = grid.len - 1;
                    let relaxed = eh.affected.iter().all(|&j| scalars.node(j)[last] < cfg.filtration.eps_p);
                    relaxed.then_some(eh)
                }
                Err(Error::SimulationTooShort { .. }) => None,
                Err(e) => return Err(e),
            };
            if let Some(eh) = settled {
                let bars = barcodes(&eh.filtration, cfg.max_dim, cfg.budget)?;
                let features = EhFeatures::from_barcodes(&bars)?;
                let mut warnings = Vec::new();
                if eh.perturbed_forced {
                    warnings.push(format!(
                        "node {i} never deviated by eps_p; included in its own affected set anyway"
                    ));
                }
                return Ok(NodeEh {
                    node: i,
                    barcodes: bars,
                    features,
                    t_sync: eh.sync.time,
                    affected: eh.affected,
                    horizon: grid.t_end,
                    perturbed_forced: eh.perturbed_forced,
                    noop: false,
                    warnings,
                });
            }
            if doublings == cfg.max_doublings {
                return Err(Error::SimulationTooShort { horizon: grid.t_end });
            }
            doublings += 1;
            // Doubling the total horizon means simulating as much again.
            chunk = run.steps;
        }
    }

    /// Runs every node on a pool of `workers` threads. Results come back in
    /// node order whatever the scheduling, and the first failing node (by
    /// index) determines the error.
    pub fn all_nodes(&self, workers: usize) -> Result<Vec<NodeEh>> {
        let nodes: Vec<usize> = (0..self.nodes()).collect();
        self.nodes_eh(&nodes, workers)
    }

    pub fn nodes_eh(&self, nodes: &[usize], workers: usize) -> Result<Vec<NodeEh>> {
        parallel_map(nodes, workers, |&i| self.node_eh(i)).into_iter().collect()
    }
}

/// Order-preserving parallel map on a dedicated pool.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

/// Default worker count: the machine's available parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

struct Run<'a> {
    system: &'a EhSystem,
    coupled: CoupledConfig,
    stepper: Rk4,
    state: Vec<f64>,
    steps: usize,
}

impl Run<'_> {
    fn advance(&mut self, count: usize, mut observe: impl FnMut(usize, &[f64])) -> Result<()> {
        let sys = self.system;
        let coupled = CoupledSystem::new(&sys.config.lorenz, &sys.coupling, &self.coupled)?;
        let mut rhs = |_: f64, u: &[f64], out: &mut [f64]| coupled.rhs(u, out);
        let h = sys.config.h;
        for _ in 0..count {
            let t = self.steps as f64 * h;
            self.stepper.step(&mut rhs, t, &mut self.state, h);
            self.steps += 1;
            if self.state.iter().any(|v| !v.is_finite()) {
                return Err(Error::IntegrationDiverged {
                    time: self.steps as f64 * h,
                });
            }
            observe(self.steps, &self.state);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hexagon(side: f64) -> Vec<[f64; 3]> {
        (0..6)
            .map(|k| {
                let a = k as f64 * std::f64::consts::PI / 3.0;
                [side * a.cos(), side * a.sin(), 0.0]
            })
            .collect()
    }

    #[test]
    fn isolated_pair_affects_only_the_perturbed_node() {
        let pts = [[0.0, 0.0, 0.0], [1000.0, 0.0, 0.0]];
        let mut cfg = EhConfig::default();
        cfg.filtration.eps_d = 1.0;
        let sys = EhSystem::prepare(&pts, cfg).unwrap();
        for i in 0..2 {
            let r = sys.node_eh(i).unwrap();
            assert_eq!(r.affected, vec![i]);
            assert_eq!(r.barcodes[0].len(), 1);
            assert!(r.barcodes[1].is_empty() && r.barcodes[2].is_empty());
        }
    }

    #[test]
    fn unit_multiplier_is_a_noop() {
        let mut cfg = EhConfig::default();
        cfg.perturbation.multiplier = 1.0;
        let sys = EhSystem::prepare(&hexagon(8.0), cfg).unwrap();
        let r = sys.node_eh(0).unwrap();
        assert!(r.noop && r.affected.is_empty());
        assert_eq!(r.features, EhFeatures::zero());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn hexagon_runs_and_is_worker_independent() {
        let sys = EhSystem::prepare(&hexagon(8.0), EhConfig::default()).unwrap();
        let one = sys.all_nodes(1).unwrap();
        let four = sys.all_nodes(4).unwrap();
        assert_eq!(one, four);
        for r in &one {
            assert!(r.t_sync > 0.0 && r.t_sync < r.horizon);
            assert!(r.features.values.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn extension_matches_a_single_long_run() {
        let sys = EhSystem::prepare(&hexagon(8.0), EhConfig::default()).unwrap();
        let long = sys.node_trajectories(2, 400).unwrap();
        let mut short = sys.clone();
        short.config.horizon = 1.0;
        let mut run = short.start(2).unwrap();
        let mut states = Vec::new();
        run.advance(100, |_, u| states.push(u.to_vec())).unwrap();
        run.advance(300, |_, u| states.push(u.to_vec())).unwrap();
        let last = states.last().unwrap();
        let expect: Vec<f64> = last.chunks_exact(3).map(|x| sys.orbit.distance(x)).collect();
        let got: Vec<f64> = (0..6).map(|j| long.node(j)[400]).collect();
        assert_eq!(expect, got);
    }

    #[test]
    fn bad_node_index() {
        let sys = EhSystem::prepare(&hexagon(8.0), EhConfig::default()).unwrap();
        match sys.node_eh(9) {
            Err(e) => assert!(matches!(e.root(), Error::IndexOutOfRange { .. })),
            Ok(_) => panic!("expected an error"),
        }
    }
}
