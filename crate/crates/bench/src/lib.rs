//! Fixtures shared by the benchmarks.

use flatlyap_core::brownian::PathConfig;
use flatlyap_core::lyapunov::EstimatorConfig;

pub fn path_config(seed: u64, horizon: f64) -> PathConfig {
    PathConfig {
        dt: 0.05,
        horizon,
        max_substep_refinements: 40,
        rng_seed: seed,
        cusp_y_cap: 50.0,
    }
}

pub fn estimator(seed: u64, horizon: f64, n_paths: usize) -> EstimatorConfig {
    EstimatorConfig {
        path: path_config(seed, horizon),
        n_paths,
        n_batches: 10,
        burn_in: 0.1,
        renorm_interval: 16,
    }
}
