use super::{Matrix, Subspace, Vector};
use crate::error::{domain, Result};

/// A proper rotation of R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    matrix: Matrix,
}

impl Rotation {
    pub fn identity(d: usize) -> Self {
        Rotation {
            matrix: Matrix::identity(d, d),
        }
    }

    /// Wraps a matrix after checking orthogonality and determinant +1.
    pub fn from_matrix(m: Matrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return domain("rotation matrix must be square");
        }
        let d = m.nrows();
        let dev = (m.transpose() * &m - Matrix::identity(d, d)).abs().max();
        if dev > tol || (m.determinant() - 1.0).abs() > tol {
            return domain("matrix is not a proper rotation");
        }
        Ok(Rotation { matrix: m })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn inverse(&self) -> Rotation {
        Rotation {
            matrix: self.matrix.transpose(),
        }
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation {
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.matrix * v
    }

    pub fn apply_subspace(&self, s: &Subspace) -> Subspace {
        s.transform(&self.matrix)
    }
}

/// Rotation by `angle` that fixes `u`, acting in the plane of the first two
/// vectors of the deterministic completion of `u` to an orthonormal basis.
///
/// In R² the only such rotation is the identity, so only multiples of 2π are accepted.
pub fn rotation_about_axis(u: &Vector, angle: f64) -> Result<Rotation> {
    let d = u.len();
    let n = u.norm();
    if n == 0.0 {
        return domain("rotation axis is the zero vector");
    }
    if d < 2 {
        return domain("rotations need d >= 2");
    }
    let (s, c) = angle.sin_cos();
    if d == 2 {
        if s.abs() > 1e-15 || c < 0.0 {
            return domain("a rotation of R² fixing a nonzero vector is the identity");
        }
        return Ok(Rotation::identity(2));
    }
    let axis = Subspace::span(d, &[u / n]);
    let comp = axis.complement();
    let v1 = comp.column(0);
    let v2 = comp.column(1);
    let mut m = Matrix::identity(d, d);
    m += (&v1 * v1.transpose() + &v2 * v2.transpose()) * (c - 1.0);
    m += (&v2 * v1.transpose() - &v1 * v2.transpose()) * s;
    Ok(Rotation { matrix: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euclid::{gaussian_vector, RngStream};
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn quarter_turn_about_e3() {
        let e3 = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
        let r = rotation_about_axis(&e3, FRAC_PI_4).unwrap();
        let img = r.apply(&Vector::from_column_slice(&[1.0, 0.0, 0.0]));
        let h = 0.5f64.sqrt();
        assert!((img - Vector::from_column_slice(&[h, h, 0.0])).norm() < 1e-15);
        let id = rotation_about_axis(&e3, 0.0).unwrap();
        assert!((id.matrix() - Matrix::identity(3, 3)).abs().max() < 1e-15);
    }

    #[test]
    fn fixes_axis_and_is_proper() {
        let mut rng = RngStream::new(9, 0).rng();
        for i in 0..100 {
            let d = 3 + i % 3;
            let u = gaussian_vector(d, &mut rng).normalize();
            let ang = (i as f64) * 0.37 - 5.0;
            let r = rotation_about_axis(&u, ang).unwrap();
            assert!((r.apply(&u) - &u).norm() < 1e-12);
            assert!(Rotation::from_matrix(r.matrix().clone(), 1e-12).is_ok());
        }
    }

    #[test]
    fn plane_case_and_errors() {
        let u = Vector::from_column_slice(&[1.0, 0.0]);
        assert!(rotation_about_axis(&u, 2.0 * PI).is_ok());
        assert!(rotation_about_axis(&u, 1.0).is_err());
        assert!(rotation_about_axis(&Vector::zeros(3), 1.0).is_err());
    }
}
