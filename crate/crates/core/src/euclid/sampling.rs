use super::{binomial, subspace_det, RngStream, Subspace, Vector};
use crate::estimate::{Accumulator, Estimate};
use crate::parallel::{map_chunks, CHUNK};
use crate::error::{domain, Result};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed k-subspace of the subspace `u` (Gaussian vectors in `u`,
/// orthonormalised in sampling order).
pub fn haar_grassmann_inside<R: Rng + ?Sized>(
    u: &Subspace,
    k: usize,
    rng: &mut R,
) -> Result<Subspace> {
    let n = u.dim();
    if k > n {
        return domain(format!("cannot sample a {k}-subspace inside a {n}-subspace"));
    }
    let d = u.ambient();
    if k == n {
        return Ok(u.clone());
    }
    if k == 0 {
        return Ok(Subspace::zero(d));
    }
    loop {
        let cols: Vec<Vector> = (0..k)
            .map(|_| u.basis() * gaussian_vector(n, rng))
            .collect();
        if let Ok(s) = Subspace::from_basis(d, &cols) {
            return Ok(s);
        }
    }
}

/// Haar-distributed element of G(d,k).
pub fn haar_grassmann<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<Subspace> {
    if k > d {
        return domain(format!("no {k}-subspaces in R^{d}"));
    }
    haar_grassmann_inside(&Subspace::full(d), k, rng)
}

/// Sample from the SO(u)-invariant probability on k-subspaces containing `u`:
/// ⟨u⟩ ⊕ (Haar (k−1)-subspace of u^⊥). The first basis column is `u`.
pub fn haar_grassmann_containing<R: Rng + ?Sized>(
    u: &Vector,
    k: usize,
    rng: &mut R,
) -> Result<Subspace> {
    let d = u.len();
    if k == 0 || k > d {
        return domain(format!("k must lie in 1..={d}, got {k}"));
    }
    let n = u.norm();
    if n == 0.0 {
        return domain("zero vector");
    }
    let u = u / n;
    let line = Subspace::from_columns(d, std::slice::from_ref(&u));
    let rest = haar_grassmann_inside(&line.complement(), k - 1, rng)?;
    let mut cols = vec![u];
    cols.extend(rest.columns());
    Ok(Subspace::from_columns(d, &cols))
}

/// Uniform unit vector on the unit sphere of `s`.
pub fn sphere_sample<R: Rng + ?Sized>(s: &Subspace, rng: &mut R) -> Result<Vector> {
    let n = s.dim();
    if n == 0 {
        return domain("cannot sample the sphere of the zero subspace");
    }
    loop {
        let z = gaussian_vector(n, rng);
        let r = z.norm();
        if r > 1e-300 {
            return Ok(s.basis() * (z / r));
        }
    }
}

/// `binom(d−1−k, m) / binom(d−1, m)`: the mean of `|⟨W, L⟩|²` for a fixed
/// `(d−1−m)`-subspace `W` of `u^⊥` and a Haar `k`-subspace `L` of `u^⊥`.
pub fn det_square_moment(d: usize, k: usize, m: usize) -> Result<f64> {
    check_moment(d, k, m)?;
    let (d, k, m) = (d as i64, k as i64, m as i64);
    Ok(binomial(d - 1 - k, m) / binomial(d - 1, m))
}

fn check_moment(d: usize, k: usize, m: usize) -> Result<()> {
    if d == 0 || k + 1 > d || m + k + 1 > d {
        return domain(format!("need 0 ≤ k ≤ d−1 and 0 ≤ m ≤ d−1−k, got d={d}, k={k}, m={m}"));
    }
    Ok(())
}

/// Monte Carlo estimate of [`det_square_moment`] with `n` samples. Each
/// chunk draws its own unit `u` and subspace `W`, which exercises the
/// independence of the moment from both.
pub fn det_square_moment_mc(d: usize, k: usize, m: usize, n: usize, stream: &RngStream) -> Result<Estimate> {
    check_moment(d, k, m)?;
    let parts = map_chunks(n, CHUNK, |c, len| {
        let mut rng = stream.child(c as u64).rng();
        let u = sphere_sample(&Subspace::full(d), &mut rng)?;
        let perp = Subspace::span(d, std::slice::from_ref(&u)).complement();
        let w = haar_grassmann_inside(&perp, d - 1 - m, &mut rng)?;
        let mut acc = Accumulator::default();
        for _ in 0..len {
            let l = haar_grassmann_inside(&perp, k, &mut rng)?;
            acc.push(subspace_det(&w, &l).powi(2));
        }
        Ok(acc)
    })?;
    let mut acc = Accumulator::default();
    for p in &parts {
        acc.merge(p);
    }
    Ok(acc.estimate())
}
