//! Shared fixtures for the benchmarks.

use pme_core::conditions::{find_blowup_params, find_global_params};
use pme_core::{BarrierParams, DensityModel, ProblemSpec};

/// `m = 2`, `N = 3`, power-tail density with exponent `q`.
pub fn spec(p: f64, q: f64) -> ProblemSpec {
    ProblemSpec::new(2.0, p, 3, DensityModel::power_tail(q).expect("q in range"))
        .expect("valid spec")
}

/// Supersolution parameters for `p = 3`, `q = 0`.
pub fn super_barrier() -> (ProblemSpec, BarrierParams) {
    let s = spec(3.0, 0.0);
    let g = find_global_params(&s, 1.0).expect("feasible");
    (s, g)
}

/// Blow-up subsolution parameters for `p = 3`, `q = 0.5`.
pub fn sub_barrier() -> (ProblemSpec, BarrierParams) {
    let s = spec(3.0, 0.5);
    let b = find_blowup_params(&s).expect("feasible");
    (s, b)
}
