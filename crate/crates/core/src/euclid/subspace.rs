use super::{tolerances, Matrix, Vector};
use crate::error::{Error, Result};

/// A linear subspace of R^d stored as a d×k matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

/// Modified Gram–Schmidt with one re-orthogonalisation pass. Columns whose
/// residual falls below `rank_tol` are dropped.
fn orthonormalize(cols: &[Vector], d: usize, rank_tol: f64) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(cols.len().min(d));
    for c in cols {
        let scale = c.norm();
        if scale == 0.0 {
            continue;
        }
        let mut v = c / scale;
        for _ in 0..2 {
            for q in &out {
                let p = q.dot(&v);
                v.axpy(-p, q, 1.0);
            }
        }
        let n = v.norm();
        if n > rank_tol {
            out.push(v / n);
        }
        if out.len() == d {
            break;
        }
    }
    out
}

impl Subspace {
    /// The zero subspace of R^d.
    pub fn zero(d: usize) -> Self {
        Subspace {
            basis: Matrix::zeros(d, 0),
        }
    }

    /// All of R^d with the standard basis.
    pub fn full(d: usize) -> Self {
        Subspace {
            basis: Matrix::identity(d, d),
        }
    }

    /// Span of the given standard basis vectors.
    pub fn coordinate(d: usize, axes: &[usize]) -> Self {
        let mut b = Matrix::zeros(d, axes.len());
        for (c, &i) in axes.iter().enumerate() {
            b[(i, c)] = 1.0;
        }
        Subspace { basis: b }
    }

    /// Span of arbitrary vectors; dependent vectors are discarded.
    pub fn span(d: usize, vectors: &[Vector]) -> Self {
        let cols = orthonormalize(vectors, d, tolerances().rank);
        Self::from_columns(d, &cols)
    }

    /// Subspace with exactly the given vectors as a (not yet orthonormal) basis.
    /// Fails if they are linearly dependent.
    pub fn from_basis(d: usize, vectors: &[Vector]) -> Result<Self> {
        let cols = orthonormalize(vectors, d, tolerances().rank);
        if cols.len() != vectors.len() {
            return Err(Error::RankDeficient(format!(
                "{} vectors span only {} dimensions",
                vectors.len(),
                cols.len()
            )));
        }
        Ok(Self::from_columns(d, &cols))
    }

    /// Wraps a matrix whose columns are already orthonormal; re-orthonormalises
    /// if the check fails and errors when the columns are dependent.
    pub fn from_matrix(basis: Matrix) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.transpose() * &basis;
        let dev = (gram - Matrix::identity(k, k)).abs().max();
        if k == 0 || dev <= tolerances().orthogonality {
            return Ok(Subspace { basis });
        }
        let cols: Vec<Vector> = (0..k).map(|i| basis.column(i).into_owned()).collect();
        Self::from_basis(basis.nrows(), &cols)
    }

    pub(crate) fn from_columns(d: usize, cols: &[Vector]) -> Self {
        let mut b = Matrix::zeros(d, cols.len());
        for (i, c) in cols.iter().enumerate() {
            b.set_column(i, c);
        }
        Subspace { basis: b }
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn column(&self, i: usize) -> Vector {
        self.basis.column(i).into_owned()
    }

    pub fn columns(&self) -> Vec<Vector> {
        (0..self.dim()).map(|i| self.column(i)).collect()
    }

    /// Orthogonal projector B·Bᵀ.
    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &Vector) -> Vector {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Coordinates of the projection of `v` in this basis.
    pub fn coords(&self, v: &Vector) -> Vector {
        self.basis.transpose() * v
    }

    /// Component of `v` orthogonal to the subspace.
    pub fn reject(&self, v: &Vector) -> Vector {
        v - self.project(v)
    }

    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        self.reject(v).norm() <= tol * v.norm().max(1.0)
    }

    /// Orthogonal complement, completed greedily from the standard basis
    /// (largest residual first, ties by index) so the result is deterministic.
    pub fn complement(&self) -> Subspace {
        let d = self.ambient();
        let mut cols = self.columns();
        let k0 = cols.len();
        while cols.len() < d {
            let mut best = (0usize, -1.0f64, Vector::zeros(d));
            for i in 0..d {
                let mut e = Vector::zeros(d);
                e[i] = 1.0;
                for _ in 0..2 {
                    for q in &cols {
                        let p = q.dot(&e);
                        e.axpy(-p, q, 1.0);
                    }
                }
                let n = e.norm();
                if n > best.1 + 1e-12 {
                    best = (i, n, e);
                }
            }
            let (_, n, e) = best;
            cols.push(e / n);
        }
        Self::from_columns(d, &cols[k0..])
    }

    /// Sum `self + other`.
    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut v = self.columns();
        v.extend(other.columns());
        Subspace::span(self.ambient(), &v)
    }

    /// Intersection, computed as the complement of the sum of complements.
    pub fn intersection(&self, other: &Subspace) -> Subspace {
        self.complement().sum(&other.complement()).complement()
    }

    /// Image under a linear map (intended for rotations).
    pub fn transform(&self, m: &Matrix) -> Subspace {
        let b = m * &self.basis;
        Subspace::from_matrix(b).expect("image of an orthonormal basis under an orthogonal map")
    }

    /// Whether both describe the same subspace, by comparing projectors.
    pub fn same_as(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim() && (self.projector() - other.projector()).abs().max() <= tol
    }

    /// Cosines of the principal angles, in decreasing order; there are
    /// `min(dim self, dim other)` of them.
    pub fn principal_cosines(&self, other: &Subspace) -> Vec<f64> {
        let k = self.dim().min(other.dim());
        if k == 0 {
            return vec![];
        }
        let m = self.basis.transpose() * &other.basis;
        let mut s: Vec<f64> = m.singular_values().iter().map(|x| x.min(1.0)).collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        s.truncate(k);
        s
    }
}

/// Absolute determinant `|⟨L,M⟩|` of the orthogonal projection between two
/// subspaces. The smaller-dimensional one is projected into the larger; the
/// result is the product of the principal-angle cosines, in `[0,1]`.
pub fn subspace_det(l: &Subspace, m: &Subspace) -> f64 {
    let (l, m) = if l.dim() <= m.dim() { (l, m) } else { (m, l) };
    let k = l.dim();
    if k == 0 {
        return 1.0;
    }
    let a = m.basis().transpose() * l.basis();
    let v = if k == m.dim() {
        a.determinant().abs()
    } else {
        let g = a.transpose() * &a;
        g.determinant().max(0.0).sqrt()
    };
    v.clamp(0.0, 1.0)
}
