//! Flag measures of polytopes as atomic decompositions over faces: τ_j,
//! the flag support measures Θ^(k)_m with their area (S) and curvature (C)
//! marginals, the integral transform T_j, ψ_j = T_j τ_j, and valuations
//! represented through them.

mod function;
mod quadrature;
mod transform;
mod valuation;

#[cfg(test)]
mod tests;

pub use function::{
    rotate_test_set, Ball, FlagFunction, FlagManifold, HalfCylinder, HalfSpace, SpatialSet,
    TestSet,
};
pub use quadrature::{adaptive_gk, integrate_cone, sample_cone, Quadrature};
pub use transform::{
    psi_integrate, theta_alternative, transform_estimate, transform_t,
    NestedSampling,
};
pub use valuation::{evaluate_valuation, Valuation, ValuationMode};

use crate::error::{domain, Result};
use crate::estimate::{Accumulator, Estimate};
use crate::euclid::{binomial, haar_grassmann, subspace_det, RngStream, Subspace, Vector};
use crate::polytope::{FaceId, Polytope, SphericalCone};
use serde::{Deserialize, Serialize};

/// Which measure a [`FlagMeasure`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureKind {
    Tau { j: usize },
    Theta { k: usize, m: usize },
    Area { k: usize, m: usize },
    Curvature { k: usize, m: usize },
}

impl MeasureKind {
    /// Dimension of the faces carrying the atoms.
    pub fn face_dim(&self) -> usize {
        match *self {
            MeasureKind::Tau { j } => j,
            MeasureKind::Theta { m, .. }
            | MeasureKind::Area { m, .. }
            | MeasureKind::Curvature { m, .. } => m,
        }
    }

    fn flag_dim(&self) -> usize {
        match *self {
            MeasureKind::Tau { .. } => 0,
            MeasureKind::Theta { k, .. }
            | MeasureKind::Area { k, .. }
            | MeasureKind::Curvature { k, .. } => k,
        }
    }
}

/// One face's contribution: weight `V_m(F)`, normal cone `n(P,F)`, normal
/// space `F^⊥` and direction space `L(F)`.
#[derive(Debug, Clone)]
pub struct FlagAtom {
    pub face: FaceId,
    pub weight: f64,
    pub cone: SphericalCone,
    pub subspace: Subspace,
    pub direction: Subspace,
}

/// Per-atom export record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub face_dim: usize,
    pub face_index: usize,
    pub weight: f64,
    pub subspace_basis: Vec<Vec<f64>>,
    pub cone_generators: Vec<Vec<f64>>,
}

fn columns(s: &Subspace) -> Vec<Vec<f64>> {
    s.columns().iter().map(|c| c.iter().copied().collect()).collect()
}

/// A flag measure of a polytope, integrated lazily atom by atom.
#[derive(Debug, Clone)]
pub struct FlagMeasure<'a> {
    kind: MeasureKind,
    polytope: &'a Polytope,
    atoms: Vec<FlagAtom>,
}

fn atoms_of(p: &Polytope, m: usize) -> Vec<FlagAtom> {
    p.faces(m)
        .iter()
        .map(|f| FlagAtom {
            face: f.id,
            weight: f.volume,
            cone: f.normal_cone.clone(),
            subspace: f.normal_space.clone(),
            direction: f.direction.clone(),
        })
        .collect()
}

/// τ_j(P, ·): one atom per j-face.
pub fn tau(p: &Polytope, j: usize) -> Result<FlagMeasure<'_>> {
    let d = p.ambient_dim();
    if j >= d {
        return domain(format!("tau needs 0 ≤ j ≤ d−1, got j={j}, d={d}"));
    }
    Ok(FlagMeasure {
        kind: MeasureKind::Tau { j },
        polytope: p,
        atoms: atoms_of(p, j),
    })
}

fn check_km(d: usize, k: usize, m: usize) -> Result<()> {
    if k >= d || m + k + 1 > d {
        return domain(format!("need 0 ≤ k ≤ d−1 and 0 ≤ m ≤ d−k−1, got k={k}, m={m}, d={d}"));
    }
    Ok(())
}

/// Θ^(k)_m(P, ·) on support elements `(p, u, L)`.
pub fn theta_polytope(p: &Polytope, k: usize, m: usize) -> Result<FlagMeasure<'_>> {
    check_km(p.ambient_dim(), k, m)?;
    Ok(FlagMeasure {
        kind: MeasureKind::Theta { k, m },
        polytope: p,
        atoms: atoms_of(p, m),
    })
}

/// S^(k)_m(P, ·): Θ^(k)_m with the body point forgotten.
pub fn flag_area_measure(p: &Polytope, k: usize, m: usize) -> Result<FlagMeasure<'_>> {
    let mut t = theta_polytope(p, k, m)?;
    t.kind = MeasureKind::Area { k, m };
    Ok(t)
}

/// C^(k)_m(P, ·): Θ^(k)_m with the normal and the subspace forgotten.
pub fn flag_curvature_measure(p: &Polytope, k: usize, m: usize) -> Result<FlagMeasure<'_>> {
    let mut t = theta_polytope(p, k, m)?;
    t.kind = MeasureKind::Curvature { k, m };
    Ok(t)
}

impl<'a> FlagMeasure<'a> {
    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.polytope.ambient_dim()
    }

    pub fn polytope(&self) -> &'a Polytope {
        self.polytope
    }

    pub fn atoms(&self) -> &[FlagAtom] {
        &self.atoms
    }

    pub fn atom_records(&self) -> Vec<AtomRecord> {
        self.atoms
            .iter()
            .map(|a| AtomRecord {
                face_dim: a.face.dim,
                face_index: a.face.index,
                weight: a.weight,
                subspace_basis: columns(&a.subspace),
                cone_generators: a
                    .cone
                    .generators()
                    .iter()
                    .map(|g| g.iter().copied().collect())
                    .collect(),
            })
            .collect()
    }

    /// Normalising constant in front of the face sum.
    fn prefactor(&self) -> f64 {
        match self.kind {
            MeasureKind::Tau { .. } => 1.0,
            MeasureKind::Theta { k, m }
            | MeasureKind::Area { k, m }
            | MeasureKind::Curvature { k, m } => {
                let d = self.ambient_dim() as i64;
                1.0 / binomial(d - k as i64 - 1, m as i64)
            }
        }
    }

    fn face_vertices(&self, id: FaceId) -> Vec<Vector> {
        let v = self.polytope.vertices();
        self.polytope.face(id).vertex_ids.iter().map(|&i| v[i].clone()).collect()
    }

    /// Total mass: exact where the cones allow it.
    pub fn total_mass(&self, q: &Quadrature, stream: &RngStream) -> Result<Estimate> {
        self.integrate(&TestSet::everything(), q, 20_000, stream)
    }

    /// `∫ f dμ`. For τ and for k = 0 the cones are integrated directly
    /// (exactly when their apex dimension is at most the quadrature
    /// threshold); otherwise `outer` Haar subspaces `L ∈ G(d,k)` are drawn and
    /// every atom is integrated over `L^⊥ ∩ n(P,F)` with the Jacobian
    /// `|⟨L(F), L^⊥⟩|`.
    pub fn integrate(&self, f: &TestSet, q: &Quadrature, outer: usize, stream: &RngStream) -> Result<Estimate> {
        match self.kind {
            MeasureKind::Tau { .. } | MeasureKind::Area { .. } if f.spatial_part().is_some() => {
                return domain("this measure has no body-point coordinate");
            }
            MeasureKind::Curvature { .. } if f.flag_part().is_some() => {
                return domain("curvature measures only accept spatial test sets");
            }
            _ => {}
        }
        let d = self.ambient_dim();
        let k = self.kind.flag_dim();
        let c = self.prefactor();
        let mut rng = stream.rng();
        // spatial factor: exact face averages where available
        let spatial: Vec<Option<f64>> = match f.spatial_part() {
            None => vec![Some(1.0); self.atoms.len()],
            Some(s) => self
                .atoms
                .iter()
                .map(|a| s.face_average(&self.face_vertices(a.face)))
                .collect(),
        };
        if k == 0 {
            let zero = Subspace::zero(d);
            let mut total = Estimate::ZERO;
            for (a, sp) in self.atoms.iter().zip(&spatial) {
                let avg = match sp {
                    Some(x) => Estimate::exact(*x),
                    None => {
                        let s = f.spatial_part().unwrap();
                        let mut acc = Accumulator::default();
                        for _ in 0..q.cone_samples.max(2) {
                            acc.push(s.weight(&self.polytope.sample_in_face(a.face, &mut rng)));
                        }
                        acc.estimate()
                    }
                };
                if avg.value == 0.0 && avg.std_err == 0.0 {
                    continue;
                }
                let l = match self.kind {
                    MeasureKind::Tau { .. } => &a.subspace,
                    _ => &zero,
                };
                let inner = quadrature::integrate_cone(&a.cone, |u| f.eval_flag(u, l), q, &mut rng)?;
                let value = avg.value * inner.value;
                let var = (avg.value * inner.std_err).powi(2)
                    + (inner.value * avg.std_err).powi(2)
                    + (avg.std_err * inner.std_err).powi(2);
                total = total + Estimate::new(value, var.sqrt()) * (a.weight * c);
            }
            return Ok(total);
        }
        let expected_apex = d - k - self.kind.face_dim();
        let mut acc = Accumulator::default();
        for _ in 0..outer.max(2) {
            let l = haar_grassmann(d, k, &mut rng)?;
            let lp = l.complement();
            let mut total = 0.0;
            for (a, sp) in self.atoms.iter().zip(&spatial) {
                if *sp == Some(0.0) {
                    continue;
                }
                let jac = subspace_det(&a.direction, &lp);
                let cone = a.cone.restrict_orthogonal(&l);
                if cone.apex_dim() != expected_apex || jac <= 0.0 {
                    continue; // L not in general position: ν_k-null
                }
                let s = match sp {
                    Some(x) => *x,
                    None => {
                        let x = self.polytope.sample_in_face(a.face, &mut rng);
                        f.eval_point(&x)
                    }
                };
                if s == 0.0 {
                    continue;
                }
                let inner = if cone.apex_dim() <= q.exact_max_apex {
                    quadrature::integrate_cone(&cone, |u| f.eval_flag(u, &l), q, &mut rng)?.value
                } else {
                    match quadrature::sample_cone(&cone, &mut rng)? {
                        Some((u, w)) if w > 0.0 => w * f.eval_flag(&u, &l),
                        _ => 0.0,
                    }
                };
                total += a.weight * jac * s * inner;
            }
            acc.push(c * total);
        }
        Ok(acc.estimate())
    }
}
