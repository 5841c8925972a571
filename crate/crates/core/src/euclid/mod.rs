//! Dimension-generic linear algebra, sphere and Grassmannian sampling, and
//! the subspace determinant.

mod rng;
mod rotation;
mod sampling;
mod subspace;

pub use rng::RngStream;
pub use rotation::{rotation_about_axis, Rotation};
pub use sampling::{
    det_square_moment, det_square_moment_mc, gaussian_vector, haar_grassmann,
    haar_grassmann_containing, haar_grassmann_inside, sphere_sample,
};
pub use subspace::{subspace_det, Subspace};

use crate::error::{domain, Result};
use std::f64::consts::PI;
use std::sync::OnceLock;

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

/// Floating tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Allowed deviation of `BᵀB` from the identity.
    pub orthogonality: f64,
    /// Residual norm below which a vector is treated as dependent.
    pub rank: f64,
    /// Slack for geometric predicates (support, membership).
    pub geometric: f64,
    /// Flats closer than this to a body count as intersecting it.
    pub intersection: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            orthogonality: 1e-12,
            rank: 1e-10,
            geometric: 1e-9,
            intersection: 1e-12,
        }
    }
}

static TOLERANCES: OnceLock<Tolerances> = OnceLock::new();

/// The process-wide tolerances (defaults unless overridden at startup).
pub fn tolerances() -> &'static Tolerances {
    TOLERANCES.get_or_init(Tolerances::default)
}

/// Overrides the tolerances. Only succeeds before the first call to [`tolerances`].
pub fn set_tolerances(t: Tolerances) -> Result<()> {
    TOLERANCES
        .set(t)
        .or_else(|_| domain("tolerances already initialised"))
}

/// Surface area ω_n of the unit sphere S^{n-1} ⊂ R^n.
pub fn sphere_area(n: i64) -> Result<f64> {
    if n < 1 {
        return domain(format!("sphere_area needs n >= 1, got {n}"));
    }
    Ok(sphere_area_unchecked(n as usize))
}

pub(crate) fn sphere_area_unchecked(n: usize) -> f64 {
    // ω_1 = 2, ω_2 = 2π, ω_n = ω_{n-2}·2π/(n-2)
    let mut w = if n % 2 == 1 { 2.0 } else { 2.0 * PI };
    let mut m = if n % 2 == 1 { 1 } else { 2 };
    while m < n {
        w *= 2.0 * PI / m as f64;
        m += 2;
    }
    w
}

/// Volume κ_n of the unit ball in R^n (κ_0 = 1).
pub fn ball_volume(n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        sphere_area_unchecked(n) / n as f64
    }
}

/// Binomial coefficient as a float; zero when `k > n` or `k < 0`.
pub fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    num_integer::binomial(n as u64, k as u64) as f64
}
