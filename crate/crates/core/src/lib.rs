//! Numerical laboratory for the forward-backward Perona-Malik equation
//! `u_t = (φ'(u_x))_x` and its radial and free-boundary reformulations:
//! subcritical-region tracking, comparison barriers and the convexity
//! counterexample in two dimensions.

pub mod barriers;
pub mod counterexample;
pub mod error;
pub mod grid;
pub mod initial;
pub mod nonlinearity;
pub mod output;
pub mod region;
pub mod solvers;

pub use error::{Error, Result};
pub use grid::{Field1D, Grid1D};
pub use nonlinearity::{DerivedConstants, HypothesisReport, NonlinearityProfile, Table, SIGMA_CRITICAL};
pub use solvers::{integrate, Boundary, Model, RunConfig, Trajectory};
pub use barriers::{BarrierFbp1, BarrierFbp2, ComparisonReport, ConeSet};
pub use counterexample::{datum_from_n, find_min_n, TaylorDatum};
pub use initial::Preset;
pub use output::RunSummary;
