//! Flag measures of convex polytopes and the integral-geometric machinery
//! around them: the flag measures τ_j and ψ_j, flag support measures
//! Θ^(k)_m with their area and curvature marginals, Monte Carlo
//! verification of the local Steiner formula, and the paraboloid-lift
//! construction of a flag-continuous valuation without a continuous
//! extension.

pub mod counterexample;
pub mod error;
pub mod estimate;
pub mod euclid;
pub mod flagmeasure;
pub mod parallel;
pub mod polytope;
pub mod report;
pub mod steiner;

pub use error::{Error, Result};
pub use estimate::Estimate;
