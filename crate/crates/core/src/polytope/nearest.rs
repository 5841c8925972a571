use super::Polytope;
use crate::error::{domain, Error, Result};
use crate::euclid::{tolerances, Matrix, Subspace, Vector};

/// Metric projection data π(E) = (p, u, L) of a flat E disjoint from the body.
#[derive(Debug, Clone)]
pub struct ProjectionTriple {
    /// Nearest body point.
    pub p: Vector,
    /// Unit vector from the body towards the flat, orthogonal to `l`.
    pub u: Vector,
    /// Direction space of the flat.
    pub l: Subspace,
    pub distance: f64,
    /// The fibre of body points projecting to the nearest point is not a
    /// single point (a measure-zero event for random flats).
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub enum FlatProjection {
    /// The flat meets (or touches) the body.
    Intersects,
    Outside(ProjectionTriple),
}

impl FlatProjection {
    pub fn triple(&self) -> Option<&ProjectionTriple> {
        match self {
            FlatProjection::Outside(t) => Some(t),
            FlatProjection::Intersects => None,
        }
    }

    pub fn distance(&self) -> f64 {
        self.triple().map_or(0.0, |t| t.distance)
    }
}

/// Solves the small dense system `a·x = b` (row-major, `n×n`) by Gaussian
/// elimination with partial pivoting; `None` when numerically singular.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    for c in 0..n {
        let (pr, pv) = (c..n)
            .map(|r| (r, a[r * n + c].abs()))
            .fold((c, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if pv <= 1e-13 * scale {
            return None;
        }
        if pr != c {
            for k in 0..n {
                a.swap(c * n + k, pr * n + k);
            }
            b.swap(c, pr);
        }
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            if f != 0.0 {
                for k in c..n {
                    a[r * n + k] -= f * a[c * n + k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    for c in (0..n).rev() {
        let mut s = b[c];
        for k in c + 1..n {
            s -= a[c * n + k] * b[k];
        }
        b[c] = s / a[c * n + c];
    }
    Some(())
}

/// Barycentric coordinates of the point of least norm on the affine hull
/// of the given points.
fn affine_minimizer(pts: &[f64], n: usize, set: &[usize]) -> Vec<f64> {
    let s = set.len();
    if s == 1 {
        return vec![1.0];
    }
    let p0 = &pts[set[0] * n..set[0] * n + n];
    let m = s - 1;
    let diffs: Vec<f64> = (1..s)
        .flat_map(|i| {
            let pi = &pts[set[i] * n..set[i] * n + n];
            (0..n).map(move |c| pi[c] - p0[c])
        })
        .collect();
    let mut g = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let di = &diffs[i * n..i * n + n];
        for j in 0..=i {
            let dj = &diffs[j * n..j * n + n];
            let v: f64 = di.iter().zip(dj).map(|(a, b)| a * b).sum();
            g[i * m + j] = v;
            g[j * m + i] = v;
        }
        rhs[i] = -di.iter().zip(p0).map(|(a, b)| a * b).sum::<f64>();
    }
    let beta = {
        let mut a = g.clone();
        let mut b = rhs.clone();
        match solve_dense(&mut a, &mut b, m) {
            Some(()) => b,
            None => {
                let gm = Matrix::from_row_slice(m, m, &g);
                let svd = gm.svd(true, true);
                svd.solve(&Vector::from_column_slice(&rhs), 1e-13)
                    .map(|v| v.iter().copied().collect())
                    .unwrap_or_else(|_| vec![0.0; m])
            }
        }
    };
    let mut alpha = Vec::with_capacity(s);
    alpha.push(1.0 - beta.iter().sum::<f64>());
    alpha.extend(beta);
    alpha
}

/// Wolfe's minimum-norm-point algorithm on `m` points of R^n stored row-wise
/// in `pts`. Returns the point and its barycentric representation.
pub fn min_norm_point(pts: &[f64], n: usize) -> Result<(Vec<f64>, Vec<(usize, f64)>)> {
    let m = pts.len() / n.max(1);
    if m == 0 {
        return domain("min_norm_point needs at least one point");
    }
    if n == 0 {
        return Ok((vec![], vec![(0, 1.0)]));
    }
    let row = |i: usize| &pts[i * n..i * n + n];
    let dotp = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let norms: Vec<f64> = (0..m).map(|i| dotp(row(i), row(i))).collect();
    let max_n2 = norms.iter().fold(0.0f64, |a, &b| a.max(b)).max(1e-300);
    let eps = 1e-12 * max_n2;
    let j0 = (0..m).fold(0, |b, i| if norms[i] < norms[b] { i } else { b });
    let mut set = vec![j0];
    let mut lam = vec![1.0];
    let mut x = row(j0).to_vec();
    let cap = 10 * m + 100;
    let mut iters = 0;
    let combine = |set: &[usize], lam: &[f64]| {
        let mut x = vec![0.0; n];
        for (&i, &l) in set.iter().zip(lam) {
            for (xc, pc) in x.iter_mut().zip(row(i)) {
                *xc += l * pc;
            }
        }
        x
    };
    loop {
        iters += 1;
        if iters > cap {
            return Err(Error::NoConvergence {
                algorithm: "min-norm point",
                iterations: iters,
            });
        }
        let xx = dotp(&x, &x);
        if xx <= 1e-30 * max_n2 {
            break;
        }
        let (j, val) = (0..m)
            .map(|i| (i, dotp(&x, row(i))))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        if xx - val <= eps || set.contains(&j) {
            break;
        }
        set.push(j);
        lam.push(0.0);
        loop {
            iters += 1;
            if iters > cap {
                return Err(Error::NoConvergence {
                    algorithm: "min-norm point",
                    iterations: iters,
                });
            }
            let alpha = affine_minimizer(pts, n, &set);
            if alpha.iter().all(|&a| a > 1e-14) {
                lam = alpha;
                x = combine(&set, &lam);
                break;
            }
            let mut theta = f64::INFINITY;
            let mut drop = 0;
            for (i, (&a, &l)) in alpha.iter().zip(&lam).enumerate() {
                if a <= 1e-14 {
                    let t = if l - a > 0.0 { l / (l - a) } else { 0.0 };
                    if t < theta {
                        theta = t;
                        drop = i;
                    }
                }
            }
            let theta = theta.min(1.0);
            for (l, a) in lam.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            lam[drop] = 0.0;
            let mut k = 0;
            while k < set.len() {
                if lam[k] <= 1e-15 {
                    set.remove(k);
                    lam.remove(k);
                } else {
                    k += 1;
                }
            }
            let sum: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= sum);
            x = combine(&set, &lam);
            if set.len() == 1 {
                break;
            }
        }
    }
    Ok((x, set.into_iter().zip(lam).collect()))
}

/// Distance from a flat `E = L + x0` to the body, with the metric projection.
pub fn flat_distance(p: &Polytope, l: &Subspace, x0: &Vector) -> Result<FlatProjection> {
    if l.ambient() != p.ambient_dim() || x0.len() != p.ambient_dim() {
        return domain("flat and polytope live in different dimensions");
    }
    let perp = l.complement();
    flat_distance_with(p, l, &perp, x0)
}

/// As [`flat_distance`] with the orthogonal complement of `l` supplied.
pub(crate) fn flat_distance_with(
    p: &Polytope,
    l: &Subspace,
    perp: &Subspace,
    x0: &Vector,
) -> Result<FlatProjection> {
    let n = perp.dim();
    let bt = perp.basis().transpose();
    let z0 = &bt * x0;
    let verts = p.vertices();
    let mut pts = Vec::with_capacity(verts.len() * n);
    for v in verts {
        let y = &bt * v;
        pts.extend(y.iter().zip(z0.iter()).map(|(a, b)| a - b));
    }
    let (x, bary) = min_norm_point(&pts, n)?;
    let dist = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    if dist <= tolerances().intersection {
        return Ok(FlatProjection::Intersects);
    }
    let u = -(perp.basis() * Vector::from_column_slice(&x)) / dist;
    let mut point = bary
        .iter()
        .fold(Vector::zeros(p.ambient_dim()), |acc, &(i, w)| acc + &verts[i] * w);

    // Face of the body in direction u and uniqueness of the fibre.
    let heights: Vec<f64> = verts.iter().map(|v| v.dot(&u)).collect();
    let hmax = heights.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let scale = p.radius_about(&p.centroid()).max(1.0);
    let tight: Vec<usize> = (0..verts.len())
        .filter(|&i| hmax - heights[i] <= 1e-9 * scale)
        .collect();
    let mut degenerate = false;
    if tight.len() >= 2 && l.dim() > 0 {
        let diffs: Vec<Vector> = tight[1..].iter().map(|&i| &verts[i] - &verts[tight[0]]).collect();
        let r_full = rank(&diffs, 1e-9 * scale);
        let proj: Vec<Vector> = diffs.iter().map(|v| &bt * v).collect();
        let r_proj = rank(&proj, 1e-9 * scale);
        if r_full > r_proj {
            degenerate = true;
            let q = Vector::from_column_slice(&x) + &z0;
            if let Some(lex) = lex_min_fibre(verts, &tight, &bt, &q, r_proj) {
                point = lex;
            }
        }
    }
    Ok(FlatProjection::Outside(ProjectionTriple {
        p: point,
        u,
        l: l.clone(),
        distance: dist,
        degenerate,
    }))
}

fn rank(vs: &[Vector], tol: f64) -> usize {
    if vs.is_empty() {
        return 0;
    }
    let n = vs[0].len();
    let mut m = Matrix::zeros(n, vs.len());
    for (i, v) in vs.iter().enumerate() {
        m.set_column(i, v);
    }
    m.singular_values().iter().filter(|&&s| s > tol).count()
}

/// Lexicographically smallest point of `{x ∈ conv(tight) : Bᵀx = q}`, found
/// among the basic solutions with `r + 1` supporting vertices.
fn lex_min_fibre(verts: &[Vector], tight: &[usize], bt: &Matrix, q: &Vector, r: usize) -> Option<Vector> {
    const MAX_TIGHT: usize = 12;
    if tight.len() > MAX_TIGHT {
        return None;
    }
    let size = r + 1;
    let n = q.len();
    let mut best: Option<Vector> = None;
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        let sub: Vec<usize> = idx.iter().map(|&i| tight[i]).collect();
        // [Bᵀv_i; 1] μ = [q; 1] in the least-squares sense
        let mut a = Matrix::zeros(n + 1, size);
        for (c, &vi) in sub.iter().enumerate() {
            let y = bt * &verts[vi];
            for rr in 0..n {
                a[(rr, c)] = y[rr];
            }
            a[(n, c)] = 1.0;
        }
        let mut rhs = Vector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(q);
        rhs[n] = 1.0;
        if let Ok(mu) = a.clone().svd(true, true).solve(&rhs, 1e-12) {
            let res = (&a * &mu - &rhs).norm();
            if res < 1e-9 && mu.iter().all(|&m| m >= -1e-12) {
                let x = sub
                    .iter()
                    .zip(mu.iter())
                    .fold(Vector::zeros(verts[0].len()), |acc, (&vi, &m)| acc + &verts[vi] * m.max(0.0));
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let mut ord = std::cmp::Ordering::Equal;
                        for (xi, bi) in x.iter().zip(b.iter()) {
                            if (xi - bi).abs() > 1e-12 {
                                ord = xi.partial_cmp(bi).unwrap();
                                break;
                            }
                        }
                        ord == std::cmp::Ordering::Less
                    }
                };
                if better {
                    best = Some(x);
                }
            }
        }
        // next combination
        let mut i = size;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < tight.len() - size + i {
                idx[i] += 1;
                for k in i + 1..size {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Metric projection onto the parallel body `P + εB^d`: distance reduced by
/// ε and the body point pushed out along `u`.
pub fn parallel_flat_distance(p: &Polytope, eps: f64, l: &Subspace, x0: &Vector) -> Result<FlatProjection> {
    if eps < 0.0 {
        return domain("negative parallel distance");
    }
    Ok(match flat_distance(p, l, x0)? {
        FlatProjection::Outside(t) if t.distance - eps > tolerances().intersection => {
            FlatProjection::Outside(ProjectionTriple {
                p: &t.p + &t.u * eps,
                distance: t.distance - eps,
                ..t
            })
        }
        _ => FlatProjection::Intersects,
    })
}

/// Euclidean distance from a point to the body.
pub fn point_distance(p: &Polytope, x: &Vector) -> Result<f64> {
    let l = Subspace::zero(p.ambient_dim());
    let perp = Subspace::full(p.ambient_dim());
    Ok(flat_distance_with(p, &l, &perp, x)?.distance())
}

/// Hausdorff distance between two polytopes (maximum vertex-to-body distance
/// in both directions; exact up to the min-norm tolerance).
pub fn hausdorff_distance(a: &Polytope, b: &Polytope) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() {
        return domain("polytopes in different dimensions");
    }
    let mut h = 0.0f64;
    for v in a.vertices() {
        h = h.max(point_distance(b, v)?);
    }
    for v in b.vertices() {
        h = h.max(point_distance(a, v)?);
    }
    Ok(h)
}
