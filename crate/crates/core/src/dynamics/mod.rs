//! Coupled Lorenz oscillators on a weighted graph Laplacian.

mod coupling;
mod integrate;
mod lorenz;
mod lyapunov;
mod orbit;
mod spectrum;

pub use coupling::{
    build_coupling_matrix, coupled_rhs, coupling_from_distances, CoupledConfig, CoupledSystem,
    CouplingMatrix, DistanceMatrix, ROW_SUM_TOL,
};
pub use integrate::{integrate_observed, integrate_rk4, Rk4, TimeGrid, Trajectory, DEFAULT_STEP};
pub use lorenz::{lorenz_rhs, LorenzParams, NodeDynamics};
pub use lyapunov::estimate_lyapunov;
pub use orbit::{
    find_reference_orbit, perturb, transform_trajectories, OrbitSearch, Perturbation, ReferenceOrbit,
    ScalarTrajectorySet,
};
pub use spectrum::{critical_coupling, critical_coupling_from_spectrum, laplacian_spectrum, symmetric_eigenvalues};
