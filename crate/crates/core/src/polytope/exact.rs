//! Exact integer kernels for the convex hull: fraction-free elimination,
//! cofactor normals and gift wrapping over a face lattice.
//!
//! Everything is generic over [`Int`] so the hull runs on checked `i128`
//! first and falls back to `BigInt` when an intermediate overflows.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Debug;

pub(crate) trait Int: Clone + Eq + Ord + Debug + Send + Sync {
    fn zero() -> Self;
    fn from_i64(v: i64) -> Self;
    fn add(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    /// Division known to be exact.
    fn div_exact(&self, o: &Self) -> Self;
    fn gcd(&self, o: &Self) -> Self;
    fn sign(&self) -> i32;
    fn neg(&self) -> Self;
}

impl Int for i128 {
    fn zero() -> Self {
        0
    }
    fn from_i64(v: i64) -> Self {
        v as i128
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn div_exact(&self, o: &Self) -> Self {
        self / o
    }
    fn gcd(&self, o: &Self) -> Self {
        Integer::gcd(self, o)
    }
    fn sign(&self) -> i32 {
        self.signum() as i32
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Int for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn div_exact(&self, o: &Self) -> Self {
        self / o
    }
    fn gcd(&self, o: &Self) -> Self {
        Integer::gcd(self, o)
    }
    fn sign(&self) -> i32 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }
    fn neg(&self) -> Self {
        -self
    }
}

pub(crate) fn dot<T: Int>(a: &[T], b: &[T]) -> Option<T> {
    let mut s = T::zero();
    for (x, y) in a.iter().zip(b) {
        s = s.add(&x.mul(y)?)?;
    }
    Some(s)
}

pub(crate) fn diff<T: Int>(a: &[T], b: &[T]) -> Option<Vec<T>> {
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

/// Divides by the gcd of the entries (sign kept).
pub(crate) fn primitive<T: Int>(v: &mut [T]) {
    let mut g = T::zero();
    for x in v.iter() {
        g = g.gcd(x);
    }
    if g.sign() > 0 && g != T::from_i64(1) {
        for x in v.iter_mut() {
            *x = x.div_exact(&g);
        }
    }
}

/// Bareiss determinant.
pub(crate) fn det<T: Int>(mut m: Vec<Vec<T>>) -> Option<T> {
    let n = m.len();
    if n == 0 {
        return Some(T::from_i64(1));
    }
    let mut sign = 1;
    let mut prev = T::from_i64(1);
    for k in 0..n {
        if m[k][k].sign() == 0 {
            let Some(r) = (k + 1..n).find(|&r| m[r][k].sign() != 0) else {
                return Some(T::zero());
            };
            m.swap(k, r);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let a = m[i][j].mul(&m[k][k])?;
                let b = m[i][k].mul(&m[k][j])?;
                m[i][j] = a.sub(&b)?.div_exact(&prev);
            }
        }
        prev = m[k][k].clone();
    }
    let d = m[n - 1][n - 1].clone();
    Some(if sign < 0 { d.neg() } else { d })
}

/// Vector `n` with `⟨n,x⟩ = det[rows; x]` for `p−1` rows of length `p`.
pub(crate) fn cofactor_normal<T: Int>(rows: &[Vec<T>]) -> Option<Vec<T>> {
    let p = rows.len() + 1;
    let mut n = Vec::with_capacity(p);
    for i in 0..p {
        let minor: Vec<Vec<T>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != i)
                    .map(|(_, x)| x.clone())
                    .collect()
            })
            .collect();
        let m = det(minor)?;
        // expansion along the last row: sign (−1)^{(p−1)+i}
        n.push(if (p - 1 + i) % 2 == 1 { m.neg() } else { m });
    }
    Some(n)
}

/// Incremental fraction-free row echelon form.
#[derive(Clone, Debug)]
pub(crate) struct Echelon<T> {
    rows: Vec<(usize, Vec<T>)>,
}

impl<T: Int> Echelon<T> {
    pub fn new() -> Self {
        Echelon { rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.rows.iter().map(|(c, _)| *c).collect()
    }

    fn reduce(&self, v: &[T]) -> Option<Vec<T>> {
        let mut v = v.to_vec();
        for (c, row) in &self.rows {
            if v[*c].sign() == 0 {
                continue;
            }
            let a = row[*c].clone();
            let b = v[*c].clone();
            for j in 0..v.len() {
                v[j] = v[j].mul(&a)?.sub(&row[j].mul(&b)?)?;
            }
            primitive(&mut v);
        }
        Some(v)
    }

    /// Adds `v`; returns whether it was independent of the rows so far.
    pub fn insert(&mut self, v: &[T]) -> Option<bool> {
        let r = self.reduce(v)?;
        match r.iter().position(|x| x.sign() != 0) {
            Some(c) => {
                self.rows.push((c, r));
                Some(true)
            }
            None => Some(false),
        }
    }
}

/// Affinely independent subset (indices into `idx`) spanning the affine hull
/// of the selected points, together with pivot coordinates on which the
/// coordinate projection of the hull is injective.
pub(crate) fn affine_basis<T: Int>(
    pts: &[Vec<T>],
    idx: &[usize],
) -> Option<(Vec<usize>, Vec<usize>)> {
    let Some(&first) = idx.first() else {
        return Some((vec![], vec![]));
    };
    let mut ech = Echelon::new();
    let mut chosen = vec![first];
    let dim = pts[first].len();
    for &i in &idx[1..] {
        if ech.rank() == dim {
            break;
        }
        if ech.insert(&diff(&pts[i], &pts[first])?)? {
            chosen.push(i);
        }
    }
    Some((chosen, ech.pivot_columns()))
}

/// A face recorded by its dimension and the sorted indices of all input
/// points lying on it.
pub(crate) type PointFace = (usize, Vec<usize>);

struct Facet<T> {
    normal: Vec<T>,
    tight: Vec<usize>,
}

/// Hyperplane through the flat `r0 + span(dirs)` and the point `q`, with the
/// side test `⟨n, x − r0⟩`.
fn pivot_normal<T: Int>(r0: &[T], dirs: &[Vec<T>], q: &[T]) -> Option<Vec<T>> {
    let mut rows = dirs.to_vec();
    rows.push(diff(q, r0)?);
    let mut n = cofactor_normal(&rows)?;
    primitive(&mut n);
    Some(n)
}

/// Rotates a supporting hyperplane about the flat `r0 + span(dirs)` away
/// from the reference point `f` (which lies on the current hyperplane, off
/// the flat) until it meets the point set again. `start` is any point off the
/// current hyperplane. Returns the outward normal and the new tight set.
fn wrap<T: Int>(
    pts: &[Vec<T>],
    r0: &[T],
    dirs: &[Vec<T>],
    f: &[T],
    start: usize,
) -> Option<Facet<T>> {
    let mut n = pivot_normal(r0, dirs, &pts[start])?;
    let mut s = dot(&n, &diff(f, r0)?)?.sign();
    debug_assert!(s != 0);
    for x in pts {
        let v = dot(&n, &diff(x, r0)?)?.sign();
        if v == -s {
            n = pivot_normal(r0, dirs, x)?;
            s = dot(&n, &diff(f, r0)?)?.sign();
        }
    }
    let mut tight = Vec::new();
    for (i, x) in pts.iter().enumerate() {
        let v = dot(&n, &diff(x, r0)?)?.sign();
        debug_assert!(v != -s);
        if v == 0 {
            tight.push(i);
        }
    }
    let normal = if s > 0 {
        n.iter().map(|x| x.neg()).collect()
    } else {
        n
    };
    Some(Facet { normal, tight })
}

fn initial_facet<T: Int>(pts: &[Vec<T>], p: usize) -> Option<Facet<T>> {
    // Start from the supporting hyperplane with outward normal −e₁.
    let min = pts.iter().map(|x| x[0].clone()).min()?;
    let mut normal: Vec<T> = (0..p)
        .map(|i| if i == 0 { T::from_i64(-1) } else { T::zero() })
        .collect();
    let mut tight: Vec<usize> = (0..pts.len()).filter(|&i| pts[i][0] == min).collect();
    loop {
        let (basis, _) = affine_basis(pts, &tight)?;
        if basis.len() == p {
            return Some(Facet { normal, tight });
        }
        let r0 = pts[basis[0]].clone();
        let mut ech = Echelon::new();
        let mut dirs = Vec::new();
        for &b in &basis[1..] {
            let v = diff(&pts[b], &r0)?;
            ech.insert(&v)?;
            dirs.push(v);
        }
        // Complete inside the hyperplane with projections of unit vectors.
        let nn = dot(&normal, &normal)?;
        let mut w = None;
        for i in 0..p {
            let v: Vec<T> = (0..p)
                .map(|c| {
                    let e = if c == i { nn.clone() } else { T::zero() };
                    e.sub(&normal[i].mul(&normal[c])?)
                })
                .collect::<Option<_>>()?;
            if ech.insert(&v)? {
                if dirs.len() < p - 2 {
                    dirs.push(v);
                } else {
                    w = Some(v);
                    break;
                }
            }
        }
        let w = w?;
        let f: Vec<T> = r0.iter().zip(&w).map(|(a, b)| a.add(b)).collect::<Option<_>>()?;
        let inside: BTreeSet<usize> = tight.iter().copied().collect();
        let start = (0..pts.len()).find(|i| !inside.contains(i))?;
        let next = wrap(pts, &r0, &dirs, &f, start)?;
        normal = next.normal;
        tight = next.tight;
    }
}

/// All faces of the convex hull of `pts`, which must be full-dimensional in
/// Z^p. Faces are reported as tight point sets; `None` signals overflow.
fn hull_full<T: Int>(pts: &[Vec<T>], p: usize) -> Option<Vec<PointFace>> {
    let all: Vec<usize> = (0..pts.len()).collect();
    match p {
        0 => return Some(vec![(0, all)]),
        1 => {
            let lo = (0..pts.len()).min_by(|&a, &b| pts[a][0].cmp(&pts[b][0]))?;
            let hi = (0..pts.len()).max_by(|&a, &b| pts[a][0].cmp(&pts[b][0]))?;
            return Some(vec![(0, vec![lo]), (0, vec![hi]), (1, all)]);
        }
        _ => {}
    }
    let mut faces: BTreeSet<PointFace> = BTreeSet::new();
    faces.insert((p, all));
    let mut known: HashMap<Vec<usize>, ()> = HashMap::new();
    let mut ridge_seen: HashMap<Vec<usize>, u8> = HashMap::new();
    let mut queue = VecDeque::new();
    let first = initial_facet(pts, p)?;
    known.insert(first.tight.clone(), ());
    queue.push_back(first);
    while let Some(facet) = queue.pop_front() {
        let sub_faces = sub_hull(pts, &facet.tight, p - 1)?;
        let in_facet: BTreeSet<usize> = facet.tight.iter().copied().collect();
        for (dim, ids) in sub_faces {
            if dim + 2 == p {
                let seen = ridge_seen.entry(ids.clone()).or_insert(0);
                *seen += 1;
                if *seen == 1 {
                    let (basis, _) = affine_basis(pts, &ids)?;
                    let r0 = pts[basis[0]].clone();
                    let dirs: Vec<Vec<T>> = basis[1..]
                        .iter()
                        .map(|&b| diff(&pts[b], &r0))
                        .collect::<Option<_>>()?;
                    let ridge: BTreeSet<usize> = ids.iter().copied().collect();
                    let f = *facet.tight.iter().find(|i| !ridge.contains(i))?;
                    let start = (0..pts.len()).find(|i| !in_facet.contains(i))?;
                    let next = wrap(pts, &r0, &dirs, &pts[f], start)?;
                    if !known.contains_key(&next.tight) {
                        known.insert(next.tight.clone(), ());
                        queue.push_back(next);
                    }
                }
            }
            faces.insert((dim, ids));
        }
        let _ = facet.normal;
    }
    Some(faces.into_iter().collect())
}

/// Faces of the hull of the sub-collection `idx`, whose affine hull has
/// dimension `q`; indices in the result refer to `pts`.
fn sub_hull<T: Int>(pts: &[Vec<T>], idx: &[usize], q: usize) -> Option<Vec<PointFace>> {
    let (_, cols) = affine_basis(pts, idx)?;
    debug_assert_eq!(cols.len(), q);
    let local: Vec<Vec<T>> = idx
        .iter()
        .map(|&i| cols.iter().map(|&c| pts[i][c].clone()).collect())
        .collect();
    let faces = hull_full(&local, q)?;
    Some(
        faces
            .into_iter()
            .map(|(dim, ids)| {
                let mut g: Vec<usize> = ids.into_iter().map(|i| idx[i]).collect();
                g.sort_unstable();
                (dim, g)
            })
            .collect(),
    )
}

fn faces_generic<T: Int>(pts: &[Vec<T>]) -> Option<(usize, Vec<PointFace>)> {
    let idx: Vec<usize> = (0..pts.len()).collect();
    let (basis, _) = affine_basis(pts, &idx)?;
    let p = basis.len() - 1;
    Some((p, sub_hull(pts, &idx, p)?))
}

/// Face lattice of the convex hull of distinct integer points: returns the
/// affine dimension and every face as `(dim, sorted point indices on it)`.
pub(crate) fn hull_faces(points: &[Vec<BigInt>]) -> (usize, Vec<PointFace>) {
    let small: Option<Vec<Vec<i128>>> = points
        .iter()
        .map(|p| p.iter().map(|x| x.to_i128()).collect())
        .collect();
    if let Some(small) = small {
        if let Some(r) = faces_generic(&small) {
            return r;
        }
    }
    faces_generic(points).expect("big integer arithmetic cannot overflow")
}

/// Outward facet normal in the original coordinates: lies in the direction
/// space spanned by `dirs_all` (basis of the affine hull of the body),
/// is orthogonal to the facet directions, and points away from `inner`.
pub(crate) fn facet_normal(
    dirs_all: &[Vec<BigInt>],
    facet_dirs: &[Vec<BigInt>],
    facet_point: &[BigInt],
    inner: &[BigInt],
) -> Vec<BigInt> {
    let m: Vec<Vec<BigInt>> = facet_dirs
        .iter()
        .map(|e| dirs_all.iter().map(|dv| dot(e, dv).unwrap()).collect())
        .collect();
    let c = cofactor_normal(&m).unwrap();
    let d = facet_point.len();
    let mut a: Vec<BigInt> = (0..d)
        .map(|i| {
            dirs_all
                .iter()
                .zip(&c)
                .fold(<BigInt as Zero>::zero(), |s, (dv, ci)| s + &dv[i] * ci)
        })
        .collect();
    primitive(&mut a);
    let side = dot(&a, &diff(inner, facet_point).unwrap()).unwrap();
    if side.is_positive() {
        a.iter_mut().for_each(|x| *x = -x.clone());
    }
    debug_assert!(!a.iter().all(|x| x.is_zero()));
    a
}
