//! Shared fixtures for the criterion benches.

use kbayes::experiments::{generate_toy, ToyDynamicsConfig, ToyTrajectory};
use kbayes::filtering::KernelFilterModel;
use kbayes::kernels::{median_heuristic, Kernel};

/// A toy training trajectory of `n + 1` steps.
pub fn trajectory(n: usize, seed: u64) -> ToyTrajectory {
    generate_toy(&ToyDynamicsConfig {
        length: n + 1,
        seed,
        ..Default::default()
    })
    .expect("valid toy config")
}

/// Median-heuristic kernels for `(observations, states)`.
pub fn kernels(traj: &ToyTrajectory) -> (Kernel, Kernel) {
    let kx = Kernel::gaussian(median_heuristic(&traj.observations).unwrap()).unwrap();
    let ky = Kernel::gaussian(median_heuristic(&traj.states).unwrap()).unwrap();
    (kx, ky)
}

/// A filter model with the calibrated regularization.
pub fn filter_model(n: usize) -> KernelFilterModel {
    let traj = trajectory(n, 0);
    let (kx, ky) = kernels(&traj);
    KernelFilterModel::fit(traj.states, traj.observations, kx, ky, 1e-7, 5e-6).unwrap()
}
