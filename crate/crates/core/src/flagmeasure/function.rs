use crate::error::{domain, Result};
use crate::euclid::{
    haar_grassmann_containing, haar_grassmann_inside, sphere_sample, Rotation, Subspace, Vector,
};
use crate::polytope::min_norm_point;
use rand::Rng;
use std::fmt;
use std::sync::Arc;

type FlagEval = dyn Fn(&Vector, &Subspace) -> f64 + Send + Sync;

/// A real function of flags `(u, L)`. Which flag manifold is meant depends
/// on the measure it is integrated against: `L ∋ u` of dimension `d − j` for
/// τ_j and ψ_j, `L ⊥ u` of dimension `k` for Θ^(k)_m.
#[derive(Clone)]
pub struct FlagFunction {
    name: String,
    eval: Arc<FlagEval>,
    uses_subspace: bool,
}

impl fmt::Debug for FlagFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlagFunction")
            .field("name", &self.name)
            .field("uses_subspace", &self.uses_subspace)
            .finish()
    }
}

impl FlagFunction {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Vector, &Subspace) -> f64 + Send + Sync + 'static,
    {
        FlagFunction {
            name: name.into(),
            eval: Arc::new(f),
            uses_subspace: true,
        }
    }

    /// A function of the normal vector alone.
    pub fn of_normal<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        FlagFunction {
            name: name.into(),
            eval: Arc::new(move |u, _| f(u)),
            uses_subspace: false,
        }
    }

    pub fn constant(c: f64) -> Self {
        FlagFunction::of_normal(format!("constant {c}"), move |_| c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn uses_subspace(&self) -> bool {
        self.uses_subspace
    }

    pub fn eval(&self, u: &Vector, l: &Subspace) -> f64 {
        (self.eval)(u, l)
    }

    /// `(ϑf)(u, L) = f(ϑ⁻¹u, ϑ⁻¹L)`.
    pub fn rotated(&self, r: &Rotation) -> FlagFunction {
        let inv = r.inverse();
        let f = self.eval.clone();
        FlagFunction {
            name: format!("rotated {}", self.name),
            eval: Arc::new(move |u, l| f(&inv.apply(u), &inv.apply_subspace(l))),
            uses_subspace: self.uses_subspace,
        }
    }

    pub fn product(&self, other: &FlagFunction) -> FlagFunction {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        FlagFunction {
            name: format!("{} · {}", self.name, other.name),
            eval: Arc::new(move |u, l| f(u, l) * g(u, l)),
            uses_subspace: self.uses_subspace || other.uses_subspace,
        }
    }

    /// Largest `|f|` over `n` random flags; errors if a value is not finite.
    pub fn probe_bound<R: Rng + ?Sized>(&self, manifold: FlagManifold, n: usize, rng: &mut R) -> Result<f64> {
        let mut m = 0.0f64;
        for _ in 0..n {
            let (u, l) = manifold.sample(rng)?;
            let v = self.eval(&u, &l);
            if !v.is_finite() {
                return domain(format!("{} is not finite at a probed flag", self.name));
            }
            m = m.max(v.abs());
        }
        Ok(m)
    }
}

/// The flag manifolds on which the integrators evaluate flag functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlagManifold {
    /// `F(d, q)`: unit `u` inside a `q`-subspace `L`.
    Containing { d: usize, q: usize },
    /// `F^⊥(d, k)`: unit `u` orthogonal to a `k`-subspace `L`.
    Orthogonal { d: usize, k: usize },
}

impl FlagManifold {
    /// Draw from the rotation-invariant probability on the manifold.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vector, Subspace)> {
        match *self {
            FlagManifold::Containing { d, q } => {
                let u = sphere_sample(&Subspace::full(d), rng)?;
                let l = haar_grassmann_containing(&u, q, rng)?;
                Ok((u, l))
            }
            FlagManifold::Orthogonal { d, k } => {
                let u = sphere_sample(&Subspace::full(d), rng)?;
                let perp = Subspace::span(d, std::slice::from_ref(&u)).complement();
                let l = haar_grassmann_inside(&perp, k, rng)?;
                Ok((u, l))
            }
        }
    }
}

/// A bounded function of body points, used as the spatial factor of a test
/// set. Implementations may supply exact face averages.
pub trait SpatialSet: Send + Sync + fmt::Debug {
    fn weight(&self, x: &Vector) -> f64;

    /// Exact mean of [`Self::weight`] over the convex hull of `vertices`
    /// (a face), when available.
    fn face_average(&self, vertices: &[Vector]) -> Option<f64> {
        match vertices {
            [v] => Some(self.weight(v)),
            _ => None,
        }
    }

    /// Whether the convex hull of `vertices` meets the set, when decidable.
    fn meets(&self, _vertices: &[Vector]) -> Option<bool> {
        None
    }
}

/// `{λ ∈ [0,1] : aλ² + bλ + c ≤ 0}` for `a ≥ 0`, as an interval.
fn quadratic_interval(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let (lo, hi) = if a <= 1e-300 {
        if b.abs() <= 1e-300 {
            if c <= 0.0 {
                (0.0, 1.0)
            } else {
                return None;
            }
        } else if b > 0.0 {
            (f64::NEG_INFINITY, -c / b)
        } else {
            (-c / b, f64::INFINITY)
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // stable roots
        let q = -0.5 * (b + b.signum() * s);
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
        (r1.min(r2), r1.max(r2))
    };
    let (lo, hi) = (lo.max(0.0), hi.min(1.0));
    (hi >= lo).then_some((lo, hi))
}

fn meet(a: Option<(f64, f64)>, b: Option<(f64, f64)>) -> Option<(f64, f64)> {
    let (a, b) = (a?, b?);
    let (lo, hi) = (a.0.max(b.0), a.1.min(b.1));
    (hi >= lo).then_some((lo, hi))
}

fn fraction(i: Option<(f64, f64)>) -> f64 {
    i.map_or(0.0, |(lo, hi)| hi - lo)
}

fn min_norm(pts: &[Vector]) -> f64 {
    let n = pts[0].len();
    let flat: Vec<f64> = pts.iter().flat_map(|p| p.iter().copied()).collect();
    match min_norm_point(&flat, n) {
        Ok((x, _)) => x.iter().map(|t| t * t).sum::<f64>().sqrt(),
        Err(_) => f64::NAN,
    }
}

/// Closed Euclidean ball.
#[derive(Debug, Clone)]
pub struct Ball {
    pub centre: Vector,
    pub radius: f64,
}

impl Ball {
    fn segment(&self, a: &Vector, b: &Vector) -> Option<(f64, f64)> {
        let v = b - a;
        let w = a - &self.centre;
        quadratic_interval(v.dot(&v), 2.0 * v.dot(&w), w.dot(&w) - self.radius * self.radius)
    }

    fn distance_to(&self, vertices: &[Vector]) -> f64 {
        let shifted: Vec<Vector> = vertices.iter().map(|v| v - &self.centre).collect();
        min_norm(&shifted)
    }
}

impl SpatialSet for Ball {
    fn weight(&self, x: &Vector) -> f64 {
        f64::from((x - &self.centre).norm() <= self.radius)
    }

    fn face_average(&self, vertices: &[Vector]) -> Option<f64> {
        match vertices {
            [v] => Some(self.weight(v)),
            [a, b] => Some(fraction(self.segment(a, b))),
            _ if vertices.iter().all(|v| self.weight(v) == 1.0) => Some(1.0),
            _ if self.distance_to(vertices) > self.radius => Some(0.0),
            _ => None,
        }
    }

    fn meets(&self, vertices: &[Vector]) -> Option<bool> {
        let d = self.distance_to(vertices);
        (!d.is_nan()).then_some(d <= self.radius)
    }
}

/// Closed half-space `⟨normal, x⟩ ≤ offset`.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    pub normal: Vector,
    pub offset: f64,
}

impl HalfSpace {
    fn segment(&self, a: &Vector, b: &Vector) -> Option<(f64, f64)> {
        let (fa, fb) = (self.normal.dot(a) - self.offset, self.normal.dot(b) - self.offset);
        quadratic_interval(0.0, fb - fa, fa)
    }
}

impl SpatialSet for HalfSpace {
    fn weight(&self, x: &Vector) -> f64 {
        f64::from(self.normal.dot(x) <= self.offset)
    }

    fn face_average(&self, vertices: &[Vector]) -> Option<f64> {
        match vertices {
            [v] => Some(self.weight(v)),
            [a, b] => Some(fraction(self.segment(a, b))),
            _ if vertices.iter().all(|v| self.weight(v) == 1.0) => Some(1.0),
            _ if vertices.iter().all(|v| self.normal.dot(v) > self.offset) => Some(0.0),
            _ => None,
        }
    }

    fn meets(&self, vertices: &[Vector]) -> Option<bool> {
        Some(vertices.iter().any(|v| self.weight(v) == 1.0))
    }
}

/// `{(x, s) : ‖x‖ ≤ radius, s ≥ 0}` with `s` the last coordinate.
#[derive(Debug, Clone)]
pub struct HalfCylinder {
    pub radius: f64,
}

impl HalfCylinder {
    fn segment(&self, a: &Vector, b: &Vector) -> Option<(f64, f64)> {
        let d = a.len();
        let (sa, sb) = (a[d - 1], b[d - 1]);
        let up = quadratic_interval(0.0, sa - sb, -sa);
        let xa = a.rows(0, d - 1);
        let v = b.rows(0, d - 1) - xa;
        let disc = quadratic_interval(
            v.dot(&v),
            2.0 * v.dot(&xa),
            xa.dot(&xa) - self.radius * self.radius,
        );
        meet(up, disc)
    }

    /// Horizontal parts of the vertices and of all pairwise crossings of the
    /// plane `s = 0`: their hull is the projection of `hull ∩ {s ≥ 0}`.
    fn clipped_projection(vertices: &[Vector]) -> Vec<Vector> {
        let d = vertices[0].len();
        let mut out = vec![];
        for (i, a) in vertices.iter().enumerate() {
            if a[d - 1] >= 0.0 {
                out.push(a.rows(0, d - 1).into_owned());
            }
            for b in &vertices[i + 1..] {
                let (sa, sb) = (a[d - 1], b[d - 1]);
                if (sa > 0.0 && sb < 0.0) || (sa < 0.0 && sb > 0.0) {
                    let l = sa / (sa - sb);
                    let p = a + (b - a) * l;
                    out.push(p.rows(0, d - 1).into_owned());
                }
            }
        }
        out
    }
}

impl SpatialSet for HalfCylinder {
    fn weight(&self, x: &Vector) -> f64 {
        let d = x.len();
        f64::from(x[d - 1] >= 0.0 && x.rows(0, d - 1).norm() <= self.radius)
    }

    fn face_average(&self, vertices: &[Vector]) -> Option<f64> {
        match vertices {
            [v] => Some(self.weight(v)),
            [a, b] => Some(fraction(self.segment(a, b))),
            _ if vertices.iter().all(|v| self.weight(v) == 1.0) => Some(1.0),
            _ if self.meets(vertices) == Some(false) => Some(0.0),
            _ => None,
        }
    }

    fn meets(&self, vertices: &[Vector]) -> Option<bool> {
        let pts = HalfCylinder::clipped_projection(vertices);
        if pts.is_empty() {
            return Some(false);
        }
        let m = min_norm(&pts);
        (!m.is_nan()).then_some(m <= self.radius)
    }
}

/// A test function on support elements `(p, u, L)` of product form
/// `spatial(p) · flag(u, L)`; a missing factor is the constant 1.
#[derive(Debug, Clone)]
pub struct TestSet {
    name: String,
    spatial: Option<Arc<dyn SpatialSet>>,
    flag: Option<FlagFunction>,
}

impl TestSet {
    pub fn everything() -> Self {
        TestSet {
            name: "everything".into(),
            spatial: None,
            flag: None,
        }
    }

    pub fn spatial(set: Arc<dyn SpatialSet>) -> Self {
        TestSet {
            name: format!("{set:?}"),
            spatial: Some(set),
            flag: None,
        }
    }

    pub fn flag(f: FlagFunction) -> Self {
        TestSet {
            name: f.name().to_string(),
            spatial: None,
            flag: Some(f),
        }
    }

    pub fn with_flag(mut self, f: FlagFunction) -> Self {
        self.name = format!("{} × {}", self.name, f.name());
        self.flag = Some(match self.flag {
            Some(g) => g.product(&f),
            None => f,
        });
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spatial_part(&self) -> Option<&Arc<dyn SpatialSet>> {
        self.spatial.as_ref()
    }

    pub fn flag_part(&self) -> Option<&FlagFunction> {
        self.flag.as_ref()
    }

    pub fn eval_flag(&self, u: &Vector, l: &Subspace) -> f64 {
        self.flag.as_ref().map_or(1.0, |f| f.eval(u, l))
    }

    pub fn eval_point(&self, p: &Vector) -> f64 {
        self.spatial.as_ref().map_or(1.0, |s| s.weight(p))
    }

    pub fn eval(&self, p: &Vector, u: &Vector, l: &Subspace) -> f64 {
        let s = self.eval_point(p);
        if s == 0.0 {
            return 0.0;
        }
        s * self.eval_flag(u, l)
    }
}

impl From<FlagFunction> for TestSet {
    fn from(f: FlagFunction) -> Self {
        TestSet::flag(f)
    }
}

/// `ϑ`-image helper used when comparing measures of rotated bodies.
pub fn rotate_test_set(t: &TestSet, r: &Rotation) -> Result<TestSet> {
    if t.spatial.is_some() {
        return domain("spatial test sets cannot be rotated");
    }
    Ok(TestSet {
        name: format!("rotated {}", t.name),
        spatial: None,
        flag: t.flag.as_ref().map(|f| f.rotated(r)),
    })
}
