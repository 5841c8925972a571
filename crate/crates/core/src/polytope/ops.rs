use super::{exact, FaceId, Polytope, Rational};
use crate::error::{domain, Result};
use num_bigint::BigInt;
use num_traits::Zero;

/// Exact d-volume of a polytope (zero when lower-dimensional).
pub fn exact_volume(p: &Polytope) -> Result<Rational> {
    let e = p.exact_data()?;
    let d = p.ambient_dim();
    if p.dim() < d {
        return Ok(Rational::zero());
    }
    let mut total = BigInt::zero();
    for s in p.face_simplices(FaceId { dim: d, index: 0 }) {
        let v0 = &e.scaled[s[0]];
        let rows: Vec<Vec<BigInt>> = s[1..]
            .iter()
            .map(|&v| exact::diff(&e.scaled[v], v0).unwrap())
            .collect();
        let det = exact::det(rows).unwrap();
        total += if det < BigInt::zero() { -det } else { det };
    }
    let fact: BigInt = (1..=d).map(BigInt::from).product();
    let denom = num_traits::pow(e.scale.clone(), d) * fact;
    Ok(Rational::new(total, denom))
}

/// Solves a square rational system; `None` if singular.
fn solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for c in 0..n {
        let pr = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, pr);
        b.swap(c, pr);
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = &a[r][c] / &a[c][c];
                for k in c..n {
                    let t = &a[c][k] * &f;
                    a[r][k] = &a[r][k] - t;
                }
                let t = &b[c] * &f;
                b[r] = &b[r] - t;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// `P ∩ Q` by exact vertex enumeration over the combined constraint system;
/// `None` when the intersection is empty.
pub fn intersect(p: &Polytope, q: &Polytope) -> Result<Option<Polytope>> {
    let d = p.ambient_dim();
    if q.ambient_dim() != d {
        return domain("polytopes in different dimensions");
    }
    // Every constraint as (a, b, is_equation) with ⟨a,x⟩ ≤ b or = b.
    let mut cons: Vec<(Vec<Rational>, Rational, bool)> = Vec::new();
    for poly in [p, q] {
        for ineq in poly.facet_inequalities()? {
            cons.push((ineq.normal.iter().map(|x| Rational::from_integer(x.clone())).collect(), ineq.offset.clone(), false));
        }
        for eq in poly.affine_equations()? {
            cons.push((eq.normal.iter().map(|x| Rational::from_integer(x.clone())).collect(), eq.offset.clone(), true));
        }
    }
    let feasible = |x: &[Rational]| {
        cons.iter().all(|(a, b, eq)| {
            let v = a.iter().zip(x).fold(Rational::zero(), |s, (ai, xi)| s + ai * xi);
            if *eq {
                v == *b
            } else {
                v <= *b
            }
        })
    };
    let m = cons.len();
    let mut verts: Vec<Vec<Rational>> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    if m >= d {
        loop {
            let a: Vec<Vec<Rational>> = idx.iter().map(|&i| cons[i].0.clone()).collect();
            let b: Vec<Rational> = idx.iter().map(|&i| cons[i].1.clone()).collect();
            if let Some(x) = solve(a, b) {
                if feasible(&x) {
                    verts.push(x);
                }
            }
            let mut i = d;
            let mut done = true;
            while i > 0 {
                i -= 1;
                if idx[i] < m - d + i {
                    idx[i] += 1;
                    for k in i + 1..d {
                        idx[k] = idx[k - 1] + 1;
                    }
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
    }
    if verts.is_empty() {
        return Ok(None);
    }
    Ok(Some(Polytope::build(&verts, d)?))
}

/// The union `P ∪ Q` as a polytope, if it is convex. Convexity is decided
/// exactly: the hull of both vertex sets must have volume
/// `vol P + vol Q − vol(P ∩ Q)`. Requires full-dimensional inputs.
pub fn union_if_convex(p: &Polytope, q: &Polytope) -> Result<Polytope> {
    let d = p.ambient_dim();
    if p.dim() < d || q.dim() < d {
        return domain("convexity test needs full-dimensional bodies");
    }
    let mut pts = p.exact_vertices()?.to_vec();
    pts.extend(q.exact_vertices()?.iter().cloned());
    let hull = Polytope::build(&pts, d)?;
    let inter = match intersect(p, q)? {
        Some(i) => exact_volume(&i)?,
        None => Rational::zero(),
    };
    let lhs = exact_volume(&hull)?;
    let rhs = exact_volume(p)? + exact_volume(q)? - inter;
    if lhs != rhs {
        return domain("union of the two bodies is not convex");
    }
    Ok(hull)
}
