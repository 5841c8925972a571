//! Paraboloid-lift polytopes `P_t` and the rotation experiment: a
//! flag-continuous valuation whose values along `P_t` and along the rotated
//! copies `ϑP_t` approach different limits, although both sequences
//! converge to the same rotation-invariant body
//! `K = {(x, s) : |s| ≤ 1 − ‖x‖²}`.

use crate::error::{domain, Result};
use crate::estimate::Estimate;
use crate::euclid::{binomial, gaussian_vector, rotation_about_axis, Rotation, RngStream, Subspace, Vector};
use crate::flagmeasure::{
    adaptive_gk, evaluate_valuation, flag_curvature_measure, tau, FlagFunction, HalfCylinder,
    NestedSampling, Quadrature, SpatialSet, TestSet, Valuation, ValuationMode,
};
use crate::polytope::{Polytope, Rational};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::sync::Arc;


/// Radius of the half-cylinder `B₀ = {‖x‖ ≤ 1/4} × [0, ∞)`.
pub const B0_RADIUS: f64 = 0.25;

/// Which paraboloid layers contribute lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layers {
    Both,
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftConfig {
    pub d: usize,
    pub t: Rational,
    pub layers: Layers,
}

impl LiftConfig {
    /// Both layers; `t` must lie in `(0, 1/4]` and `d ≥ 2`.
    pub fn new(d: usize, t: Rational) -> Result<Self> {
        let cfg = LiftConfig {
            d,
            t,
            layers: Layers::Both,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return domain(format!("lift polytopes need d ≥ 2, got {}", self.d));
        }
        if !self.t.is_positive() || self.t > Rational::new(1.into(), 4.into()) {
            return domain(format!("lift step t must lie in (0, 1/4], got {}", self.t));
        }
        Ok(())
    }
}

/// Lattice points `2tz`, `z ∈ Z^{d−1}`, with `4t²‖z‖² ≤ 1`, lifted to
/// `(x, ±(1 − ‖x‖²))`. Points on the rim `‖x‖ = 1` are listed once.
pub fn lift_candidates(cfg: &LiftConfig) -> Result<Vec<Vec<Rational>>> {
    cfg.validate()?;
    let n = cfg.d - 1;
    let (p, q) = (cfg.t.numer().clone(), cfg.t.denom().clone());
    let bound = (&q / (&p * 2u32)).to_i64().unwrap_or(i64::MAX);
    let two_t = &cfg.t * Rational::from_integer(2.into());
    let mut z = vec![-bound; n];
    let mut out = vec![];
    loop {
        let norm2: i64 = z.iter().map(|c| c * c).sum();
        if &p * &p * 4u32 * norm2 <= &q * &q {
            let x: Vec<Rational> = z.iter().map(|&c| &two_t * Rational::from_integer(c.into())).collect();
            let r2: Rational = x.iter().map(|c| c * c).sum();
            let h = Rational::one() - r2;
            let mut push = |s: Rational| {
                let mut v = x.clone();
                v.push(s);
                out.push(v);
            };
            match cfg.layers {
                Layers::Both if h.is_zero() => push(h),
                Layers::Both => {
                    push(h.clone());
                    push(-h);
                }
                Layers::Upper => push(h),
                Layers::Lower => push(-h),
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok(out);
            }
            z[i] += 1;
            if z[i] <= bound {
                break;
            }
            z[i] = -bound;
            i += 1;
        }
    }
}

/// `P_t = conv(L₋(t) ∪ L₊(t))` in exact arithmetic.
pub fn build_lift_polytope(cfg: &LiftConfig) -> Result<Polytope> {
    Polytope::build(&lift_candidates(cfg)?, cfg.d)
}

/// Support function of the limit body `K` (any `d`).
pub fn limit_support(u: &Vector) -> f64 {
    let d = u.len();
    let c = u[d - 1].abs();
    let w = u.rows(0, d - 1).norm();
    let r = if 2.0 * c <= w { 1.0 } else { w / (2.0 * c) };
    r * w + c * (1.0 - r * r)
}

/// Directions for the support-function distance: the coordinate axes in both
/// orientations followed by Gaussian directions from `stream`.
pub fn probe_directions(d: usize, n: usize, stream: &RngStream) -> Vec<Vector> {
    let mut out = vec![];
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = Vector::zeros(d);
            e[i] = s;
            out.push(e);
        }
    }
    let mut rng = stream.rng();
    while out.len() < n.max(2 * d) {
        let g = gaussian_vector(d, &mut rng);
        let norm = g.norm();
        if norm > 0.0 {
            out.push(g / norm);
        }
    }
    out
}

/// `max_u (h_K(u) − h_P(u))` over `directions`. For `P ⊂ K` this is a lower
/// bound for the Hausdorff distance that becomes exact as the directions
/// fill the sphere; a fixed direction set keeps it monotone under inclusion.
pub fn hausdorff_to_limit(p: &Polytope, directions: &[Vector]) -> f64 {
    directions
        .iter()
        .map(|u| {
            let hp = p.vertices().iter().map(|v| v.dot(u)).fold(f64::NEG_INFINITY, f64::max);
            limit_support(u) - hp
        })
        .fold(0.0, f64::max)
}

/// `binom(d−1, j) · C_j(K, B₀)`: the integral of the `(d−1−j)`-th elementary
/// symmetric function of the principal curvatures over the cap of `K` above
/// `‖x‖ ≤ 1/4`.
pub fn limit_curvature_mass(d: usize, j: usize) -> Result<f64> {
    if d < 3 || j == 0 || j + 2 > d {
        return domain(format!("need 1 ≤ j ≤ d−2, got j={j}, d={d}"));
    }
    let n = d - 1;
    let m = (n - j) as i64;
    let rim = (n - 1) as i64;
    let sphere = crate::euclid::sphere_area(n as i64)?;
    let integrand = |r: f64| {
        let g = (1.0 + 4.0 * r * r).sqrt();
        let radial = 2.0 / (g * g * g);
        let around = 2.0 / g;
        let e = binomial(rim, m) * around.powi(m as i32)
            + binomial(rim, m - 1) * around.powi(m as i32 - 1) * radial;
        e * g * r.powi(n as i32 - 1)
    };
    let (v, _) = adaptive_gk(integrand, 0.0, B0_RADIUS, 1e-14, 200);
    Ok(sphere * v)
}

/// The coordinate subspaces of `e_d^⊥` spanned by `j` of `e_1, …, e_{d−1}`:
/// the direction spaces of the `j`-faces of `[−1,1]^{d−1}`.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    pub d: usize,
    pub j: usize,
    pub axes: Vec<Vec<usize>>,
    members: Vec<Subspace>,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out.sort();
    out
}

/// `‖e_d | L‖`, the largest `|⟨e_d, u⟩|` over unit `u ∈ L`.
pub fn vertical_component(l: &Subspace) -> f64 {
    let d = l.ambient();
    let mut e = Vector::zeros(d);
    e[d - 1] = 1.0;
    l.project(&e).norm()
}

/// `L | e_d^⊥`.
pub fn horizontal_projection(l: &Subspace) -> Subspace {
    let d = l.ambient();
    let cols: Vec<Vector> = l
        .columns()
        .into_iter()
        .map(|mut c| {
            c[d - 1] = 0.0;
            c
        })
        .collect();
    Subspace::span(d, &cols)
}

fn largest_angle(a: &Subspace, b: &Subspace) -> f64 {
    a.principal_cosines(b).into_iter().fold(0.0, |m, c| m.max(c.clamp(-1.0, 1.0).acos()))
}

impl DirectionSet {
    pub fn new(d: usize, j: usize) -> Result<Self> {
        if d < 2 || j == 0 || j >= d {
            return domain(format!("direction set needs 1 ≤ j ≤ d−1, got j={j}, d={d}"));
        }
        let axes = combinations(d - 1, j);
        let members = axes.iter().map(|a| Subspace::coordinate(d, a)).collect();
        Ok(DirectionSet { d, j, axes, members })
    }

    pub fn members(&self) -> &[Subspace] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Smallest largest-principal-angle distance from `L | e_d^⊥` to a member;
    /// `π/2` when the projection loses rank.
    pub fn distance(&self, l: &Subspace) -> f64 {
        let h = horizontal_projection(l);
        if h.dim() < self.j {
            return FRAC_PI_2;
        }
        self.members.iter().map(|m| largest_angle(&h, m)).fold(FRAC_PI_2, f64::min)
    }
}

/// The closed set `A = {L ∈ G(d,j) : ‖e_d|L‖ ≤ 1/√2, L|e_d^⊥ ∈ 𝒟}`, with
/// `tol` as angular slack for the membership and additive slack for the
/// vertical bound.
#[derive(Debug, Clone)]
pub struct TestSetA {
    pub directions: DirectionSet,
    pub tol: f64,
}

impl TestSetA {
    pub fn new(d: usize, j: usize, tol: f64) -> Result<Self> {
        Ok(TestSetA {
            directions: DirectionSet::new(d, j)?,
            tol,
        })
    }

    pub fn contains(&self, l: &Subspace) -> bool {
        l.dim() == self.directions.j
            && vertical_component(l) <= FRAC_1_SQRT_2 + self.tol
            && self.directions.distance(l) <= self.tol
    }

    /// `1{U^⊥ ∈ A}` as a function of flags `(u, U)` with `dim U = d − j`.
    pub fn indicator(&self) -> FlagFunction {
        let a = self.clone();
        FlagFunction::new("indicator of A", move |_, u_space| f64::from(a.contains(&u_space.complement())))
    }

    /// A random member of `A`: a member of 𝒟 tilted towards `e_d`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Subspace {
        let d = self.directions.d;
        loop {
            let axes = &self.directions.axes[rng.random_range(0..self.directions.len())];
            let cols: Vec<Vector> = axes
                .iter()
                .map(|&i| {
                    let mut v = Vector::zeros(d);
                    v[i] = 1.0;
                    v[d - 1] = rng.random_range(-1.0..1.0);
                    v
                })
                .collect();
            let l = Subspace::span(d, &cols);
            if vertical_component(&l) <= FRAC_1_SQRT_2 {
                return l;
            }
        }
    }

    /// Number of `n` random members `L ∈ A` with `ϑL ∈ A`.
    pub fn rotation_overlap<R: Rng + ?Sized>(&self, rot: &Rotation, n: usize, rng: &mut R) -> usize {
        (0..n)
            .filter(|_| {
                let l = self.sample(rng);
                self.contains(&rot.apply_subspace(&l))
            })
            .count()
    }
}

/// The standard mollifier profile `exp(1 − 1/(1 − x²))` on `|x| < 1`, zero
/// outside; equals 1 at 0.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Smooth flag function on `F(d, d−j)` concentrated near `A`: with
/// `L = U^⊥`, `f̃(u, U) = bump(dist(L|e_d^⊥, 𝒟)/δ) · bump((‖e_d|L‖ − 1/√2)₊/δ)`.
pub fn separating_function(d: usize, j: usize, delta: f64) -> Result<FlagFunction> {
    if d < 3 || j == 0 || j + 2 > d {
        return domain(format!("need 1 ≤ j ≤ d−2, got j={j}, d={d}"));
    }
    if delta <= 0.0 {
        return domain("bump width must be positive");
    }
    let dirs = DirectionSet::new(d, j)?;
    Ok(FlagFunction::new("separating bump", move |_, u_space| {
        let l = u_space.complement();
        let a = bump(dirs.distance(&l) / delta);
        if a == 0.0 {
            return 0.0;
        }
        a * bump((vertical_component(&l) - FRAC_1_SQRT_2).max(0.0) / delta)
    }))
}

/// The rotation-invariant control `g(u) = u_d²`.
pub fn invariant_control() -> FlagFunction {
    FlagFunction::of_normal("u_d²", |u| u[u.len() - 1] * u[u.len() - 1])
}

/// `ϑ`: rotation by `angle` about `e_d`.
pub fn vertical_rotation(d: usize, angle: f64) -> Result<Rotation> {
    let mut e = Vector::zeros(d);
    e[d - 1] = 1.0;
    rotation_about_axis(&e, angle)
}

fn faces_meeting_b0(p: &Polytope, j: usize) -> Vec<Subspace> {
    let b0 = HalfCylinder { radius: B0_RADIUS };
    p.faces(j)
        .iter()
        .filter(|f| {
            let v: Vec<Vector> = f.vertex_ids.iter().map(|&i| p.vertices()[i].clone()).collect();
            b0.meets(&v) != Some(false)
        })
        .map(|f| f.direction.clone())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerticalBound {
    pub faces_checked: usize,
    pub max_vertical: f64,
    pub within: bool,
}

/// Largest `‖e_d | L(F)‖` over `j`-faces meeting `B₀`.
pub fn vertical_bound_check(p: &Polytope, j: usize) -> VerticalBound {
    let dirs = faces_meeting_b0(p, j);
    let max_vertical = dirs.iter().map(vertical_component).fold(0.0, f64::max);
    VerticalBound {
        faces_checked: dirs.len(),
        max_vertical,
        within: max_vertical <= FRAC_1_SQRT_2 + 1e-9,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub faces_checked: usize,
    pub members: usize,
    pub fraction: f64,
}

/// Share of `j`-faces meeting `B₀` whose `L(F)|e_d^⊥` lies in 𝒟.
pub fn direction_membership(p: &Polytope, j: usize, tol: f64) -> Result<Membership> {
    let set = DirectionSet::new(p.ambient_dim(), j)?;
    let dirs = faces_meeting_b0(p, j);
    let members = dirs.iter().filter(|l| set.distance(l) <= tol).count();
    Ok(Membership {
        faces_checked: dirs.len(),
        members,
        fraction: if dirs.is_empty() { 0.0 } else { members as f64 / dirs.len() as f64 },
    })
}

/// `binom(d−1, j) · C_j(P, B₀) = Σ_F H^j(F ∩ B₀) H^{d−1−j}(n(P,F))`.
pub fn curvature_lower_bound(p: &Polytope, j: usize, q: &Quadrature, stream: &RngStream) -> Result<Estimate> {
    let b0 = TestSet::spatial(Arc::new(HalfCylinder { radius: B0_RADIUS }));
    let c = flag_curvature_measure(p, 0, j)?.integrate(&b0, q, 0, stream)?;
    Ok(c * binomial(p.ambient_dim() as i64 - 1, j as i64))
}

/// τ_j-mass of the shell `{(u, L^⊥) : L ∈ A}`.
pub fn a_shell_mass(p: &Polytope, a: &TestSetA, q: &Quadrature, stream: &RngStream) -> Result<Estimate> {
    tau(p, a.directions.j)?.integrate(&TestSet::flag(a.indicator()), q, 0, stream)
}

#[derive(Debug, Clone)]
pub struct CounterexampleConfig {
    pub d: usize,
    pub j: usize,
    /// Decreasing lift steps.
    pub t_grid: Vec<Rational>,
    /// Monte Carlo samples per normal cone where no exact rule applies.
    pub samples: usize,
    pub angle: f64,
    pub delta_bump: f64,
    pub delta_a: f64,
    pub hausdorff_directions: usize,
    /// Largest relative change between the last two grid points for a
    /// quantity to count as stabilized.
    pub stabilization: f64,
    /// Use the rotation-invariant control instead of the separating bump.
    pub control: bool,
    pub seed: u64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            d: 3,
            j: 1,
            t_grid: (3..=6).map(|k| Rational::new(1.into(), (1i64 << k).into())).collect(),
            samples: 100_000,
            angle: PI / 4.0,
            delta_bump: PI / 16.0,
            delta_a: 1e-6,
            hausdorff_directions: 20_000,
            stabilization: 0.1,
            control: false,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub t: String,
    pub vertices: usize,
    pub hausdorff_p: f64,
    pub hausdorff_q: f64,
    pub phi_p: Estimate,
    pub phi_q: Estimate,
    pub gap: Estimate,
    pub gap_z: f64,
    /// `C_j(P_t, B₀)`.
    pub curvature: Estimate,
    /// τ_j-mass of the A-shell, to be compared with `binom(d−1,j)·C_j`.
    pub a_shell: Estimate,
    pub vertical_bound: f64,
    pub membership: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Success,
    Inconclusive,
    Failure,
    NullControlPassed,
}

impl Status {
    /// Process exit code: 0 success, 2 inconclusive, 1 failure.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success | Status::NullControlPassed => 0,
            Status::Inconclusive => 2,
            Status::Failure => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub hausdorff_decreasing: bool,
    pub gap_above_5_sigma: bool,
    pub gap_stabilized: bool,
    pub curvature_positive: bool,
    pub curvature_converging: bool,
    /// `C_j(K, B₀)` from the closed form on the limit body.
    pub curvature_limit: f64,
    pub a_shell_dominates: bool,
    pub rotation_overlap: usize,
    pub rotated_membership: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRecord {
    pub d: usize,
    pub j: usize,
    pub function: String,
    pub status: Status,
    pub diagnostics: Diagnostics,
    pub rows: Vec<CounterexampleRow>,
}

fn relative_change(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((a - b) / b).abs()
    }
}

/// Evaluate the valuation along `P_t` and `ϑP_t` for every `t` on the grid.
pub fn run_counterexample(cfg: &CounterexampleConfig) -> Result<CounterexampleRecord> {
    let (d, j) = (cfg.d, cfg.j);
    if !(3..=5).contains(&d) || j == 0 || j + 2 > d {
        return domain(format!("need 3 ≤ d ≤ 5 and 1 ≤ j ≤ d−2, got d={d}, j={j}"));
    }
    if cfg.t_grid.is_empty() || cfg.t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return domain("t grid must be non-empty and strictly decreasing");
    }
    let root = RngStream::new(cfg.seed, 0);
    let rot = vertical_rotation(d, cfg.angle)?;
    let f = if cfg.control {
        invariant_control()
    } else {
        separating_function(d, j, cfg.delta_bump)?
    };
    let phi = Valuation {
        degree: j,
        mode: ValuationMode::FlagContinuous(f.clone()),
    };
    let a = TestSetA::new(d, j, cfg.delta_a)?;
    let q = Quadrature {
        cone_samples: cfg.samples,
        ..Quadrature::default()
    };
    let nested = NestedSampling::from_outer(cfg.samples);
    let directions = probe_directions(d, cfg.hausdorff_directions, &root.named("directions"));
    let scale = binomial(d as i64 - 1, j as i64);

    let mut rows = vec![];
    let mut rotated_membership = 0.0f64;
    for (i, t) in cfg.t_grid.iter().enumerate() {
        let s = root.child(i as u64);
        let p = build_lift_polytope(&LiftConfig::new(d, t.clone())?)?;
        let qt = p.rotated(&rot);
        let phi_p = evaluate_valuation(&p, &phi, &q, nested, &s.named("phi P"))?;
        let phi_q = evaluate_valuation(&qt, &phi, &q, nested, &s.named("phi Q"))?;
        let gap = phi_p.minus(&phi_q);
        let lower = curvature_lower_bound(&p, j, &q, &s.named("curvature"))?;
        let shell = a_shell_mass(&p, &a, &q, &s.named("shell"))?;
        rotated_membership = rotated_membership.max(direction_membership(&qt, j, cfg.delta_a)?.fraction);
        rows.push(CounterexampleRow {
            t: t.to_string(),
            vertices: p.vertices().len(),
            hausdorff_p: hausdorff_to_limit(&p, &directions),
            hausdorff_q: hausdorff_to_limit(&qt, &directions),
            phi_p,
            phi_q,
            gap: Estimate::new(gap.value.abs(), gap.std_err),
            gap_z: Estimate::exact(0.0).z_score(&gap),
            curvature: lower * (1.0 / scale),
            a_shell: shell,
            vertical_bound: vertical_bound_check(&p, j).max_vertical,
            membership: direction_membership(&p, j, cfg.delta_a)?.fraction,
        });
    }

    let limit = limit_curvature_mass(d, j)? / scale;
    let overlap = a.rotation_overlap(&rot, 10_000, &mut root.named("overlap").rng());
    let decreasing = |g: fn(&CounterexampleRow) -> f64| rows.windows(2).all(|w| g(&w[1]) < g(&w[0]));
    let last_two = rows.len() >= 2;
    let n = rows.len();
    let stable = |g: fn(&CounterexampleRow) -> f64| {
        last_two && relative_change(g(&rows[n - 2]), g(&rows[n - 1])) <= cfg.stabilization
    };
    let mut diag = Diagnostics {
        hausdorff_decreasing: last_two && decreasing(|r| r.hausdorff_p) && decreasing(|r| r.hausdorff_q),
        gap_above_5_sigma: rows.iter().all(|r| r.gap_z > 5.0),
        gap_stabilized: stable(|r| r.gap.value),
        curvature_positive: rows.iter().all(|r| r.curvature.value > 3.0 * r.curvature.std_err && r.curvature.value > 0.0),
        curvature_converging: stable(|r| r.curvature.value),
        curvature_limit: limit,
        a_shell_dominates: rows
            .iter()
            .all(|r| r.a_shell.value >= scale * r.curvature.value - 3.0 * r.a_shell.std_err.hypot(scale * r.curvature.std_err)),
        rotation_overlap: overlap,
        rotated_membership,
        notes: vec![],
    };
    if !last_two {
        diag.notes.push("a single grid point shows no trend in t".into());
    }
    diag.notes.push(
        "the limit statement is asymptotic; success means a gap above 5σ that is stable over the last two grid points while both distance proxies decrease".into(),
    );

    let status = if cfg.control {
        if rows.iter().all(|r| r.gap.value <= 3.0 * r.gap.std_err) {
            Status::NullControlPassed
        } else {
            Status::Failure
        }
    } else if !last_two {
        Status::Inconclusive
    } else if !diag.hausdorff_decreasing || !diag.curvature_positive || !diag.a_shell_dominates {
        Status::Failure
    } else if diag.gap_above_5_sigma && diag.gap_stabilized && diag.curvature_converging {
        Status::Success
    } else {
        Status::Inconclusive
    };
    Ok(CounterexampleRecord {
        d,
        j,
        function: f.name().to_string(),
        status,
        diagnostics: diag,
        rows,
    })
}
