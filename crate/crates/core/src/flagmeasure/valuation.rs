use super::{flag_area_measure, psi_integrate, tau, FlagFunction, NestedSampling, Quadrature, TestSet};
use crate::error::{domain, Result};
use crate::estimate::Estimate;
use crate::euclid::{binomial, RngStream};
use crate::polytope::Polytope;

/// How a translation-invariant, j-homogeneous valuation on polytopes is
/// given.
#[derive(Debug, Clone)]
pub enum ValuationMode {
    /// `φ(P) = Σ_F V_j(F) ∫_{n(P,F)} f(u, F^⊥) du`, i.e. `∫ f dτ_j(P,·)`.
    FlagContinuous(FlagFunction),
    /// `φ(P) = ∫ g dψ_j(P,·)`.
    StronglyFlagContinuous(FlagFunction),
    /// `φ(P) = binom(d−1,j) ∫ f(u) dS_j(P,du)`; the flag argument is ignored.
    StronglyContinuous(FlagFunction),
}

#[derive(Debug, Clone)]
pub struct Valuation {
    pub degree: usize,
    pub mode: ValuationMode,
}

/// Evaluate `φ(P)` with an error estimate. `nested` is used by the ψ route
/// only.
pub fn evaluate_valuation(
    p: &Polytope,
    phi: &Valuation,
    q: &Quadrature,
    nested: NestedSampling,
    stream: &RngStream,
) -> Result<Estimate> {
    let d = p.ambient_dim();
    let j = phi.degree;
    if j < 1 || j + 2 > d {
        return domain(format!("valuation degree must lie in 1..=d−2, got {j} with d={d}"));
    }
    match &phi.mode {
        ValuationMode::FlagContinuous(f) => {
            tau(p, j)?.integrate(&TestSet::flag(f.clone()), q, 0, stream)
        }
        ValuationMode::StronglyFlagContinuous(g) => psi_integrate(p, j, g, nested, stream),
        ValuationMode::StronglyContinuous(f) => {
            let s = flag_area_measure(p, 0, j)?.integrate(&TestSet::flag(f.clone()), q, 0, stream)?;
            Ok(s * binomial(d as i64 - 1, j as i64))
        }
    }
}
