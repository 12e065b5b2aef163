//! Weighted porous medium equation with a power source,
//!
//! ```text
//! rho(x) u_t = Laplace(u^m) + rho(x) u^p,   m > 1, p > 1, N >= 3,
//! ```
//!
//! with a slowly decaying density `k1 |x|^q <= 1/rho <= k2 |x|^q` outside the
//! unit ball. The crate computes the critical exponents that split global
//! existence from blow-up, builds the explicit barrier families together with
//! parameter sets that satisfy their inequality systems, certifies the
//! barriers by exact-derivative residuals, and integrates the radial problem
//! with a finite-volume scheme.

pub mod barriers;
pub mod conditions;
pub mod density;
pub mod error;
pub mod exponents;
pub mod residual;
pub mod solver;

pub use barriers::{BarrierParams, CoefficientSet, Family, Side};
pub use conditions::{ChainParams, ConditionEntry, ConditionReport, SystemKind};
pub use density::{DensityKind, DensityModel};
pub use error::{Error, Result};
pub use exponents::{ProblemSpec, Regime, RegimeClassification};
pub use residual::{Region, ResidualField};
pub use solver::{RadialGrid, RadialSolution, RunStatus};
