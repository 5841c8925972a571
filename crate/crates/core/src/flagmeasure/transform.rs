use super::{quadrature::sample_cone, tau, theta_polytope, FlagAtom, FlagFunction};
use crate::error::{domain, Result};
use crate::estimate::{Accumulator, Estimate};
use crate::euclid::{
    haar_grassmann_containing, haar_grassmann_inside, sphere_area_unchecked, subspace_det,
    RngStream, Subspace, Vector,
};
use crate::polytope::Polytope;
use rand::Rng;
use std::collections::HashMap;
use std::sync::Mutex;

/// Sample counts for nested Monte Carlo: `outer` normal directions per atom,
/// `inner` Grassmannian draws per direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NestedSampling {
    pub outer: usize,
    pub inner: usize,
}

impl NestedSampling {
    /// `inner = ⌈√outer⌉`.
    pub fn from_outer(outer: usize) -> Self {
        NestedSampling {
            outer,
            inner: (outer as f64).sqrt().ceil() as usize,
        }
    }
}

/// Monte Carlo value of `(T_j h)(u, L) = ∫_{G(⟨u⟩,d−j)} |⟨L,M⟩|² h(u,M) dν(M)`.
pub fn transform_estimate<R: Rng + ?Sized>(
    j: usize,
    h: &FlagFunction,
    u: &Vector,
    l: &Subspace,
    n: usize,
    rng: &mut R,
) -> Result<Estimate> {
    let d = u.len();
    if j + 1 > d {
        return domain(format!("T_j needs j ≤ d−1, got j={j}, d={d}"));
    }
    let mut acc = Accumulator::default();
    for _ in 0..n.max(2) {
        let m = haar_grassmann_containing(u, d - j, rng)?;
        let c = subspace_det(l, &m);
        acc.push(c * c * h.eval(u, &m));
    }
    Ok(acc.estimate())
}

fn quantised_key(u: &Vector, l: &Subspace) -> Vec<i64> {
    let q = |x: f64| (x * 1e12).round() as i64;
    let mut key: Vec<i64> = u.iter().map(|&x| q(x)).collect();
    key.extend(l.projector().iter().map(|&x| q(x)));
    key
}

fn key_hash(key: &[i64]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &k in key {
        for b in k.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01B3);
        }
    }
    h
}

/// `T_j h` as a flag function. Each value is an `n`-sample Monte Carlo
/// average drawn from a stream derived from the (quantised) flag, and is
/// memoised, so repeated or reordered evaluations agree exactly.
pub fn transform_t(j: usize, h: FlagFunction, n: usize, stream: RngStream) -> FlagFunction {
    let cache: Mutex<HashMap<Vec<i64>, f64>> = Mutex::new(HashMap::new());
    let name = format!("T_{j} {}", h.name());
    FlagFunction::new(name, move |u, l| {
        let key = quantised_key(u, l);
        if let Some(v) = cache.lock().unwrap().get(&key) {
            return *v;
        }
        let mut rng = stream.child(key_hash(&key)).rng();
        let v = transform_estimate(j, &h, u, l, n, &mut rng).map_or(f64::NAN, |e| e.value);
        cache.lock().unwrap().insert(key, v);
        v
    })
}

/// `Σ_atoms weight · ∫_{n(P,F)} inner(atom, u) dH(u)` with `outer` uniform
/// cone samples per atom; `inner` returns an unbiased estimate.
fn nested_sum<R, I>(atoms: &[FlagAtom], outer: usize, rng: &mut R, mut inner: I) -> Result<Estimate>
where
    R: Rng + ?Sized,
    I: FnMut(&FlagAtom, &Vector, &mut R) -> Result<f64>,
{
    let mut total = Estimate::ZERO;
    for a in atoms {
        let mut acc = Accumulator::default();
        for _ in 0..outer.max(2) {
            match sample_cone(&a.cone, rng)? {
                None => break,
                Some((_, w)) if w == 0.0 => acc.push(0.0),
                Some((u, w)) => acc.push(w * inner(a, &u, rng)?),
            }
        }
        if acc.count > 0 {
            total = total + acc.estimate() * a.weight;
        }
    }
    Ok(total)
}

/// `∫ g dψ_j(P,·)` by the adjoint route `∫ T_j g dτ_j(P,·)`: normal
/// directions are sampled in each cone, and `T_j g` at `(u, F^⊥)` is
/// estimated with `inner` Grassmannian draws. The standard error is taken
/// from the outer samples, so it includes the inner noise.
pub fn psi_integrate(
    p: &Polytope,
    j: usize,
    g: &FlagFunction,
    s: NestedSampling,
    stream: &RngStream,
) -> Result<Estimate> {
    let t = tau(p, j)?;
    let mut rng = stream.rng();
    nested_sum(t.atoms(), s.outer, &mut rng, |a, u, rng| {
        Ok(transform_estimate(j, g, u, &a.subspace, s.inner, rng)?.value)
    })
}

/// The alternative representation of flag area measures:
/// `(ω_{d−k}/ω_d) Σ_F V_m(F) ∫_{n(P,F)} ∫_{G(u^⊥,k)} |⟨F^⊥,L⟩|² f(u,L) dν(L) dH(u)`,
/// which equals `binom(d−k−1,m) ∫ f dS^(k)_m(P,·)`.
pub fn theta_alternative(
    p: &Polytope,
    k: usize,
    m: usize,
    f: &FlagFunction,
    s: NestedSampling,
    stream: &RngStream,
) -> Result<Estimate> {
    let t = theta_polytope(p, k, m)?;
    let d = p.ambient_dim();
    let mut rng = stream.rng();
    let sum = nested_sum(t.atoms(), s.outer, &mut rng, |a, u, rng| {
        let perp = Subspace::span(d, std::slice::from_ref(u)).complement();
        let mut acc = 0.0;
        for _ in 0..s.inner.max(1) {
            let l = haar_grassmann_inside(&perp, k, rng)?;
            let c = subspace_det(&a.subspace, &l);
            acc += c * c * f.eval(u, &l);
        }
        Ok(acc / s.inner.max(1) as f64)
    })?;
    Ok(sum * (sphere_area_unchecked(d - k) / sphere_area_unchecked(d)))
}
