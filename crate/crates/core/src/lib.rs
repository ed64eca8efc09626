//! Numerical toolkit for entropy-regularized (exploratory) temperature control.
//!
//! The crate solves the stationary exploratory HJB equation and its classical
//! (bang-bang) limit on truncated grids, extracts the closed-form truncated
//! exponential feedback policy, simulates the optimally controlled diffusions,
//! and runs the convergence-rate and stationary-distribution experiments.
//!
//! Modules follow the pipeline order: [`landscape`] defines objective
//! functions with exact derivatives, [`grid`] provides the finite-difference
//! discretization, [`operators`] the pointwise HJB operators, [`solver`] the
//! damped policy iteration, [`policy`] the feedback objects, [`sde`] the
//! Euler-Maruyama ensembles and stationary diagnostics, and [`analysis`] the
//! orchestrated experiments.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod grid;
pub mod landscape;
pub mod operators;
pub mod policy;
pub mod quad;
pub mod sde;
pub mod solver;

pub use error::Error;
pub use grid::{Grid, ScalarField};
pub use landscape::{AssumptionReport, Landscape};
pub use operators::ProblemSpec;
pub use policy::FeedbackPolicy;
pub use sde::{PathEnsemble, SdeConfig, StationaryEstimate};
pub use solver::{SolveReport, SolverConfig};

/// Maximum spatial dimension supported by grids and simulations.
pub const MAX_DIM: usize = 2;
