//! Monte Carlo integral geometry of affine flats: the measures μ^(k)_ε of
//! flats at distance at most ε from a body, the exact inversion of the local
//! Steiner polynomial, and checks of the Steiner, parallel-body and
//! additivity identities against the polytope evaluator.

mod vandermonde;


pub use crate::flagmeasure::TestSet;
pub use vandermonde::{vandermonde_coefficients, vandermonde_forward};

use crate::error::{domain, Result};
use crate::estimate::{Estimate, VectorAccumulator};
use crate::euclid::{ball_volume, binomial, gaussian_vector, haar_grassmann, RngStream, Subspace, Vector};
use crate::flagmeasure::{theta_polytope, Quadrature};
use crate::parallel::{map_chunks, CHUNK};
use crate::polytope::{intersect, parallel_flat_distance, union_if_convex, FlatProjection, Polytope};
use crate::polytope::rational_to_f64;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Importance sampler for affine k-flats hitting a ball window around the
/// body: `L` Haar on G(d,k), offset uniform in the (d−k)-ball of radius
/// `R = circumradius + ε_max` in `L^⊥` about the centroid.
#[derive(Debug, Clone)]
pub struct FlatSampler<'a> {
    k: usize,
    body: &'a Polytope,
    eps_max: f64,
    radius: f64,
    centre: Vector,
}

impl<'a> FlatSampler<'a> {
    pub fn new(body: &'a Polytope, k: usize, eps_max: f64) -> Result<Self> {
        let d = body.ambient_dim();
        if k >= d {
            return domain(format!("flat dimension must be below {d}, got {k}"));
        }
        if !(eps_max > 0.0) {
            return domain("ε_max must be positive");
        }
        let centre = body.centroid();
        let radius = body.radius_about(&centre) + eps_max;
        Ok(FlatSampler {
            k,
            body,
            eps_max,
            radius,
            centre,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    /// μ_k of the window, i.e. the importance weight of a single draw.
    pub fn window_measure(&self) -> f64 {
        let n = self.body.ambient_dim() - self.k;
        ball_volume(n) * self.radius.powi(n as i32)
    }

    /// A flat `L + x0`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Subspace, Vector)> {
        let d = self.body.ambient_dim();
        let n = d - self.k;
        let l = haar_grassmann(d, self.k, rng)?;
        let perp = l.complement();
        let g = gaussian_vector(n, rng);
        let r = self.radius * rng.random::<f64>().powf(1.0 / n as f64);
        let x = perp.basis() * (g.normalize() * r);
        Ok((l, &self.centre + x))
    }
}

/// Estimate of μ^(k)_ε(K, C) at one ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub eps: f64,
    pub value: f64,
    pub std_err: f64,
}

/// Joint estimates of μ^(k)_ε at several ε from one stream of flats.
#[derive(Debug, Clone)]
pub struct MuGrid {
    pub eps: Vec<f64>,
    pub acc: VectorAccumulator,
    pub samples: usize,
    /// Flats whose metric projection was flagged as non-unique.
    pub discarded: usize,
}

impl MuGrid {
    pub fn estimates(&self) -> Vec<MuEstimate> {
        self.eps
            .iter()
            .enumerate()
            .map(|(i, &eps)| {
                let e = self.acc.component(i);
                MuEstimate {
                    eps,
                    value: e.value,
                    std_err: e.std_err,
                }
            })
            .collect()
    }

    pub fn discard_fraction(&self) -> f64 {
        self.discarded as f64 / self.samples.max(1) as f64
    }
}

/// Sample `n` flats once and test them against every `ε` of the grid
/// (common random numbers). With `shift > 0` the body is `K + shift·B^d`
/// and the test set is evaluated at the pulled-back point `p − shift·u`,
/// i.e. the set is `t_shift(C)`.
pub fn sample_mu_grid(
    body: &Polytope,
    k: usize,
    eps: &[f64],
    shift: f64,
    c: &TestSet,
    n: usize,
    stream: &RngStream,
) -> Result<MuGrid> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        return domain("ε values must be positive");
    }
    if shift < 0.0 {
        return domain("negative parallel distance");
    }
    let eps_max = eps.iter().cloned().fold(0.0, f64::max) + shift;
    let sampler = FlatSampler::new(body, k, eps_max)?;
    let w = sampler.window_measure();
    let parts = map_chunks(n, CHUNK, |chunk, len| {
        let mut rng = stream.child(chunk as u64).rng();
        let mut acc = VectorAccumulator::new(eps.len());
        let mut discarded = 0usize;
        let mut row = vec![0.0; eps.len()];
        for _ in 0..len {
            let (l, x0) = sampler.sample(&mut rng)?;
            match parallel_flat_distance(body, shift, &l, &x0)? {
                FlatProjection::Intersects => acc.push_zero(),
                FlatProjection::Outside(t) if t.degenerate => {
                    discarded += 1;
                    acc.push_zero();
                }
                FlatProjection::Outside(t) => {
                    let p = &t.p - &t.u * shift;
                    let value = w * c.eval(&p, &t.u, &t.l);
                    for (r, e) in row.iter_mut().zip(eps) {
                        *r = if t.distance <= *e { value } else { 0.0 };
                    }
                    acc.push(&row);
                }
            }
        }
        Ok((acc, discarded))
    })?;
    let mut acc = VectorAccumulator::new(eps.len());
    let mut discarded = 0;
    for (a, dsc) in parts {
        acc.merge(&a);
        discarded += dsc;
    }
    Ok(MuGrid {
        eps: eps.to_vec(),
        acc,
        samples: n,
        discarded,
    })
}

/// Unbiased estimate of μ^(k)_ε(K, C).
pub fn sample_mu_eps(
    body: &Polytope,
    k: usize,
    eps: f64,
    c: &TestSet,
    n: usize,
    stream: &RngStream,
) -> Result<(MuEstimate, MuGrid)> {
    let g = sample_mu_grid(body, k, &[eps], 0.0, c, n, stream)?;
    Ok((g.estimates()[0], g))
}

/// Θ^(k)_m(K, C) as the exact linear combination of μ^(k)_i, i = 1..d−k,
/// estimated from shared flats.
pub fn theta_via_inversion(
    body: &Polytope,
    k: usize,
    m: usize,
    c: &TestSet,
    n: usize,
    stream: &RngStream,
) -> Result<Estimate> {
    theta_via_inversion_shifted(body, k, m, 0.0, c, n, stream)
}

fn theta_via_inversion_shifted(
    body: &Polytope,
    k: usize,
    m: usize,
    shift: f64,
    c: &TestSet,
    n: usize,
    stream: &RngStream,
) -> Result<Estimate> {
    let d = body.ambient_dim();
    if k >= d || m + k + 1 > d {
        return domain(format!("need 0 ≤ k ≤ d−1 and 0 ≤ m ≤ d−k−1, got k={k}, m={m}"));
    }
    let a = vandermonde_coefficients(d, k)?;
    let eps: Vec<f64> = (1..=d - k).map(|i| i as f64).collect();
    let g = sample_mu_grid(body, k, &eps, shift, c, n, stream)?;
    let coeffs: Vec<f64> = a[m].iter().map(rational_to_f64).collect();
    Ok(g.acc.linear(&coeffs))
}

/// Least-squares fit of μ̂ over an ε grid to the local Steiner polynomial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteinerFit {
    pub k: usize,
    pub grid: Vec<f64>,
    pub mu: Vec<MuEstimate>,
    /// Fitted Θ̂^(k)_m(C), m = 0..d−k−1.
    pub coefficients: Vec<Estimate>,
    /// Θ^(k)_m(C) from the polytope evaluator.
    pub reference: Vec<Estimate>,
    /// `(fitted − reference)/combined σ` per coefficient.
    pub z_scores: Vec<f64>,
    pub chi_squared: f64,
    pub degrees_of_freedom: usize,
    pub condition_number: f64,
    pub discard_fraction: f64,
    pub warning: Option<String>,
}

impl SteinerFit {
    /// Every coefficient within `k` combined standard errors of the reference.
    pub fn agrees(&self, k: f64) -> bool {
        self.coefficients
            .iter()
            .zip(&self.reference)
            .all(|(c, r)| (c.value - r.value).abs() <= k * c.minus(r).std_err + 1e-9 * r.value.abs().max(1.0))
    }
}

/// Design matrix `X[i][m] = ε_i^{d−k−m} binom(d−k,m)/(d−k)`.
fn design(d: usize, k: usize, grid: &[f64]) -> DMatrix<f64> {
    let n = d - k;
    DMatrix::from_fn(grid.len(), n, |i, m| {
        grid[i].powi((n - m) as i32) * binomial(n as i64, m as i64) / n as f64
    })
}

/// Fit the local Steiner polynomial to μ̂ on `grid` and compare with the
/// polytope evaluator (`outer` Haar samples for k > 0).
#[allow(clippy::too_many_arguments)]
pub fn verify_local_steiner(
    body: &Polytope,
    k: usize,
    c: &TestSet,
    grid: &[f64],
    n: usize,
    outer: usize,
    q: &Quadrature,
    stream: &RngStream,
) -> Result<SteinerFit> {
    let d = body.ambient_dim();
    if k >= d {
        return domain(format!("flat dimension must be below {d}, got {k}"));
    }
    let p = d - k;
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < p {
        return domain(format!("need at least {p} distinct ε values"));
    }
    let x = design(d, k, grid);
    let svd = x.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = smax / smin;
    let xtx = x.transpose() * &x;
    let pinv = xtx
        .try_inverse()
        .ok_or_else(|| crate::Error::RankDeficient("Steiner design matrix".into()))?
        * x.transpose();
    let g = sample_mu_grid(body, k, grid, 0.0, c, n, &stream.named("flats"))?;
    let coefficients: Vec<Estimate> = (0..p)
        .map(|m| g.acc.linear(&pinv.row(m).iter().copied().collect::<Vec<_>>()))
        .collect();
    // residuals r = (I − X·pinv) μ̂ with covariance (I − H) Σ (I − H)ᵀ of
    // rank dof; χ² = rᵀ Σ_r⁺ r
    let nr = grid.len();
    let resid = DMatrix::identity(nr, nr) - &x * &pinv;
    let cov = DMatrix::from_row_slice(nr, nr, &g.acc.mean_covariance());
    let r = &resid * DVector::from_vec(g.acc.means());
    let sigma_r = &resid * cov * resid.transpose();
    let chi_squared = if nr == p {
        0.0
    } else {
        let eig = sigma_r.symmetric_eigen();
        let top = eig.eigenvalues.amax();
        let mut chi = 0.0;
        // keep the dof largest directions; the rest are rounding noise
        let mut idx: Vec<usize> = (0..nr).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        for &i in idx.iter().take(nr - p) {
            let lambda = eig.eigenvalues[i];
            if lambda > 1e-12 * top {
                chi += eig.eigenvectors.column(i).dot(&r).powi(2) / lambda;
            }
        }
        chi
    };
    let mut reference = Vec::with_capacity(p);
    for m in 0..p {
        let t = theta_polytope(body, k, m)?;
        reference.push(t.integrate(c, q, outer, &stream.named("reference").child(m as u64))?);
    }
    let z_scores = coefficients
        .iter()
        .zip(&reference)
        .map(|(a, b)| a.z_score(b))
        .collect();
    let warning = (condition_number > 1e6)
        .then(|| format!("ill-conditioned ε grid (condition number {condition_number:.3e})"));
    Ok(SteinerFit {
        k,
        grid: grid.to_vec(),
        mu: g.estimates(),
        coefficients,
        reference,
        z_scores,
        chi_squared,
        degrees_of_freedom: grid.len() - p,
        condition_number,
        discard_fraction: g.discard_fraction(),
        warning,
    })
}

/// Two estimates of one quantity by different routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lhs: Estimate,
    pub rhs: Estimate,
}

impl Comparison {
    pub fn z_score(&self) -> f64 {
        self.lhs.z_score(&self.rhs)
    }

    pub fn agrees(&self, k: f64) -> bool {
        (self.lhs.value - self.rhs.value).abs()
            <= k * self.lhs.minus(&self.rhs).std_err + 1e-9 * self.rhs.value.abs().max(1.0)
    }
}

/// `Θ^(k)_m(K + εB, t_ε C)` by inversion on the parallel body versus
/// `Σ_j ε^j binom(m,j) Θ^(k)_{m−j}(K, C)` from the polytope evaluator.
#[allow(clippy::too_many_arguments)]
pub fn verify_parallel_expansion(
    body: &Polytope,
    k: usize,
    m: usize,
    eps: f64,
    c: &TestSet,
    n: usize,
    outer: usize,
    q: &Quadrature,
    stream: &RngStream,
) -> Result<Comparison> {
    if eps < 0.0 {
        return domain("negative parallel distance");
    }
    let lhs = theta_via_inversion_shifted(body, k, m, eps, c, n, &stream.named("parallel"))?;
    let mut rhs = Estimate::ZERO;
    for j in 0..=m {
        let t = theta_polytope(body, k, m - j)?;
        let e = t.integrate(c, q, outer, &stream.named("expansion").child(j as u64))?;
        rhs = rhs + e * (eps.powi(j as i32) * binomial(m as i64, j as i64));
    }
    Ok(Comparison { lhs, rhs })
}

/// How Θ is evaluated in [`additivity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaRoute {
    Polytope,
    Inversion,
}

/// `Θ(K∪M) + Θ(K∩M)` versus `Θ(K) + Θ(M)` for bodies with convex union.
#[allow(clippy::too_many_arguments)]
pub fn additivity_check(
    a: &Polytope,
    b: &Polytope,
    k: usize,
    m: usize,
    c: &TestSet,
    route: ThetaRoute,
    n: usize,
    q: &Quadrature,
    stream: &RngStream,
) -> Result<Comparison> {
    let union = union_if_convex(a, b)?;
    let inter = intersect(a, b)?;
    let theta = |p: &Polytope, label: &str| -> Result<Estimate> {
        let s = stream.named(label);
        match route {
            ThetaRoute::Polytope => theta_polytope(p, k, m)?.integrate(c, q, n, &s),
            ThetaRoute::Inversion => theta_via_inversion(p, k, m, c, n, &s),
        }
    };
    let mut lhs = theta(&union, "union")?;
    if let Some(i) = &inter {
        lhs = lhs + theta(i, "intersection")?;
    }
    let rhs = theta(a, "first")? + theta(b, "second")?;
    Ok(Comparison { lhs, rhs })
}
