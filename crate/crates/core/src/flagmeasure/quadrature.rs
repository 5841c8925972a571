use crate::error::Result;
use crate::estimate::{Accumulator, Estimate};
use crate::euclid::{sphere_area_unchecked, sphere_sample, Vector};
use crate::polytope::SphericalCone;
use rand::Rng;
use std::collections::BinaryHeap;

/// How spherical parts of cones are integrated.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Quadrature {
    /// Cones with apex dimension up to this value use point sums or
    /// adaptive Gauss–Kronrod on arcs; larger cones use Monte Carlo.
    pub exact_max_apex: usize,
    /// Monte Carlo samples per cone.
    pub cone_samples: usize,
    /// Absolute error target for arc quadrature.
    pub arc_tolerance: f64,
    pub max_intervals: usize,
    /// Relative floor added to every deterministic result's error so that
    /// floating-point rounding is never reported as zero uncertainty.
    pub rounding_floor: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            exact_max_apex: 2,
            cone_samples: 10_000,
            arc_tolerance: 1e-13,
            max_intervals: 4000,
            rounding_floor: 1e-12,
        }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(PartialEq)]
struct Piece {
    err: f64,
    a: f64,
    b: f64,
    value: f64,
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss–Kronrod 7–15 on `[a, b]`: repeatedly bisects the
/// interval with the largest error estimate. Returns value and error bound.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> (f64, f64) {
    if b <= a {
        return (0.0, 0.0);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { err: e, a, b, value: v });
    let mut err = e;
    while err > tol && heap.len() < max_intervals {
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        err += e1 + e2 - p.err;
        heap.push(Piece { err: e1, a: p.a, b: m, value: v1 });
        heap.push(Piece { err: e2, a: m, b: p.b, value: v2 });
    }
    // re-sum to shed accumulated cancellation error
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.err).sum();
    (value, err)
}

/// `∫_{cone ∩ S} g dH^{apex−1}`: point sums (apex 1), arc quadrature (apex 2)
/// or Monte Carlo with uniform sphere samples (larger cones, or when the
/// exact threshold is lowered).
pub fn integrate_cone<R, G>(
    cone: &SphericalCone,
    mut g: G,
    q: &Quadrature,
    rng: &mut R,
) -> Result<Estimate>
where
    R: Rng + ?Sized,
    G: FnMut(&Vector) -> f64,
{
    let apex = cone.apex_dim();
    if apex == 0 {
        return Ok(Estimate::ZERO);
    }
    if apex <= q.exact_max_apex {
        let (value, err) = match apex {
            1 => (cone.point_masses().iter().map(&mut g).sum(), 0.0),
            _ => match cone.arc() {
                None => (0.0, 0.0),
                Some(arc) => adaptive_gk(
                    |t| g(&arc.point(t)),
                    0.0,
                    arc.length,
                    q.arc_tolerance,
                    q.max_intervals,
                ),
            },
        };
        return Ok(Estimate::new(value, err + q.rounding_floor * value.abs()));
    }
    let w = sphere_area_unchecked(apex);
    let mut acc = Accumulator::default();
    for _ in 0..q.cone_samples.max(2) {
        let u = sphere_sample(cone.span(), rng)?;
        acc.push(if cone.contains_in_span(&u, 0.0) { w * g(&u) } else { 0.0 });
    }
    Ok(acc.estimate())
}

/// One draw of a uniform point of the cone's spherical part, returned with
/// the importance weight that makes `weight·h(u)` unbiased for `∫ h`.
/// Points outside the cone get weight 0. `None` for an empty cone.
pub fn sample_cone<R: Rng + ?Sized>(cone: &SphericalCone, rng: &mut R) -> Result<Option<(Vector, f64)>> {
    match cone.apex_dim() {
        0 => Ok(None),
        1 => {
            let pts = cone.point_masses();
            if pts.is_empty() {
                return Ok(None);
            }
            let i = rng.random_range(0..pts.len());
            Ok(Some((pts[i].clone(), pts.len() as f64)))
        }
        2 => Ok(cone.arc().map(|a| {
            let t = rng.random::<f64>() * a.length;
            (a.point(t), a.length)
        })),
        k => {
            let u = sphere_sample(cone.span(), rng)?;
            let w = if cone.contains_in_span(&u, 0.0) {
                sphere_area_unchecked(k)
            } else {
                0.0
            };
            Ok(Some((u, w)))
        }
    }
}
