use crate::error::Result;
use crate::estimate::{Accumulator, Estimate};
use crate::euclid::{sphere_area_unchecked, sphere_sample, tolerances, Rotation, Subspace, Vector};
use rand::Rng;
use std::f64::consts::PI;

/// A closed convex cone `{u ∈ span : ⟨w,u⟩ ≥ 0 for all w}` together with its
/// spherical part. For normal cones of polytopes the span is F^⊥.
#[derive(Debug, Clone)]
pub struct SphericalCone {
    span: Subspace,
    inequalities: Vec<Vector>,
    generators: Vec<Vector>,
}

/// Circular arc `θ ↦ cos θ·start + sin θ·perp`, `θ ∈ [0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub start: Vector,
    pub perp: Vector,
    pub length: f64,
}

impl Arc {
    pub fn point(&self, theta: f64) -> Vector {
        let (s, c) = theta.sin_cos();
        &self.start * c + &self.perp * s
    }
}

fn wrap_angle(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI
    } else if y > PI {
        y -= 2.0 * PI
    }
    y
}

impl SphericalCone {
    pub fn new(span: Subspace, inequalities: Vec<Vector>, generators: Vec<Vector>) -> Self {
        SphericalCone {
            span,
            inequalities,
            generators,
        }
    }

    /// The empty cone in R^d (apex dimension 0).
    pub fn empty(d: usize) -> Self {
        SphericalCone::new(Subspace::zero(d), vec![], vec![])
    }

    /// Dimension of the linear hull.
    pub fn apex_dim(&self) -> usize {
        self.span.dim()
    }

    pub fn span(&self) -> &Subspace {
        &self.span
    }

    pub fn inequalities(&self) -> &[Vector] {
        &self.inequalities
    }

    /// Unit generators (facet normals of the polytope, plus a ± basis of the
    /// lineality space for lower-dimensional bodies). Empty after [`Self::restrict_orthogonal`].
    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    /// Membership for a vector already known to lie in the span.
    pub fn contains_in_span(&self, u: &Vector, tol: f64) -> bool {
        self.inequalities.iter().all(|w| w.dot(u) >= -tol)
    }

    pub fn contains(&self, u: &Vector, tol: f64) -> bool {
        self.span.reject(u).norm() <= tol * u.norm().max(1.0) && self.contains_in_span(u, tol)
    }

    /// The sub-cone lying in the orthogonal complement of `l`.
    pub fn restrict_orthogonal(&self, l: &Subspace) -> SphericalCone {
        let span = self.span.complement().sum(l).complement();
        let tiny = tolerances().rank;
        let inequalities = self
            .inequalities
            .iter()
            .filter_map(|w| {
                let p = span.project(w);
                (p.norm() > tiny).then_some(p)
            })
            .collect();
        SphericalCone::new(span, inequalities, vec![])
    }

    pub fn rotated(&self, r: &Rotation) -> SphericalCone {
        SphericalCone {
            span: r.apply_subspace(&self.span),
            inequalities: self.inequalities.iter().map(|w| r.apply(w)).collect(),
            generators: self.generators.iter().map(|g| r.apply(g)).collect(),
        }
    }

    /// For apex dimension 1: the unit vectors of the line inside the cone.
    pub fn point_masses(&self) -> Vec<Vector> {
        if self.apex_dim() != 1 {
            return vec![];
        }
        let b = self.span.column(0);
        let tol = tolerances().geometric;
        [b.clone(), -b]
            .into_iter()
            .filter(|u| self.contains_in_span(u, tol))
            .collect()
    }

    /// For apex dimension 2: the spherical part as an arc (`None` if empty).
    pub fn arc(&self) -> Option<Arc> {
        if self.apex_dim() != 2 {
            return None;
        }
        let e1 = self.span.column(0);
        let e2 = self.span.column(1);
        let mut cur: Option<(f64, f64)> = Some((0.0, 2.0 * PI));
        for w in &self.inequalities {
            let (a, len) = cur?;
            let c = w.dot(&e2).atan2(w.dot(&e1));
            if len > PI {
                cur = Some((c - PI / 2.0, PI));
                continue;
            }
            let delta = wrap_angle(c - a);
            let mut best: Option<(f64, f64)> = None;
            for k in [-1.0, 0.0, 1.0] {
                let centre = delta + 2.0 * PI * k;
                let lo = (centre - PI / 2.0).max(0.0);
                let hi = (centre + PI / 2.0).min(len);
                if hi > lo && best.is_none_or(|(bl, bh)| hi - lo > bh - bl) {
                    best = Some((lo, hi));
                }
            }
            cur = best.and_then(|(lo, hi)| (hi - lo > 1e-15).then_some((a + lo, hi - lo)));
        }
        let (a, len) = cur?;
        let (s, c) = a.sin_cos();
        let start = &e1 * c + &e2 * s;
        let perp = &e2 * c - &e1 * s;
        Some(Arc {
            start,
            perp,
            length: len,
        })
    }

    /// H^{apex−1} of the spherical part when it has a closed form
    /// (apex dimension ≤ 2), otherwise `None`.
    pub fn exact_measure(&self) -> Option<f64> {
        match self.apex_dim() {
            0 => Some(0.0),
            1 => Some(self.point_masses().len() as f64),
            2 => Some(self.arc().map_or(0.0, |a| a.length)),
            _ => None,
        }
    }

    /// Rejection sample of a uniform unit vector in the cone.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, max_tries: usize) -> Option<Vector> {
        for _ in 0..max_tries {
            let u = sphere_sample(&self.span, rng).ok()?;
            if self.contains_in_span(&u, 0.0) {
                return Some(u);
            }
        }
        None
    }
}

/// H^{apex−1}(cone ∩ sphere): exact for apex dimension ≤ 2, otherwise
/// `ω_apex` times the Monte Carlo hit fraction of `n` uniform samples.
pub fn solid_angle<R: Rng + ?Sized>(c: &SphericalCone, n: usize, rng: &mut R) -> Result<Estimate> {
    if let Some(v) = c.exact_measure() {
        return Ok(Estimate::exact(v));
    }
    let k = c.apex_dim();
    let w = sphere_area_unchecked(k);
    let mut acc = Accumulator::default();
    for _ in 0..n {
        let u = sphere_sample(c.span(), rng)?;
        acc.push(if c.contains_in_span(&u, 0.0) { w } else { 0.0 });
    }
    Ok(acc.estimate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn quarter_arc() {
        let c = SphericalCone::new(
            Subspace::coordinate(3, &[1, 2]),
            vec![v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])],
            vec![],
        );
        let a = c.arc().unwrap();
        assert!((a.length - PI / 2.0).abs() < 1e-14);
        let mid = a.point(a.length / 2.0);
        let h = 0.5f64.sqrt();
        assert!((mid - v(&[0.0, h, h])).norm() < 1e-14);
    }

    #[test]
    fn opposite_half_planes_give_empty_or_full() {
        let span = Subspace::coordinate(2, &[0, 1]);
        let c = SphericalCone::new(span.clone(), vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0])], vec![]);
        assert_eq!(c.exact_measure(), Some(0.0));
        let full = SphericalCone::new(span, vec![], vec![]);
        assert!((full.exact_measure().unwrap() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn narrow_wedge() {
        let t: f64 = 0.3;
        // wedge between angle 0 and angle t
        let c = SphericalCone::new(
            Subspace::coordinate(2, &[0, 1]),
            vec![v(&[0.0, 1.0]), v(&[t.sin(), -t.cos()])],
            vec![],
        );
        assert!((c.arc().unwrap().length - t).abs() < 1e-14);
    }
}
