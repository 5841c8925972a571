use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul};

/// A numerical estimate with its (one sigma) standard error.
///
/// Monte Carlo estimates carry the sample standard error; deterministic
/// quadrature carries its error estimate plus a rounding floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: 0.0,
        std_err: 0.0,
    };

    pub fn new(value: f64, std_err: f64) -> Self {
        Estimate { value, std_err }
    }

    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_err: 0.0,
        }
    }

    /// Difference of two independent estimates.
    pub fn minus(&self, other: &Estimate) -> Estimate {
        Estimate {
            value: self.value - other.value,
            std_err: self.std_err.hypot(other.std_err),
        }
    }

    /// Number of combined standard errors separating `self` from `other`.
    /// Returns 0 when both are exact and equal, infinity when exact and unequal.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let diff = (self.value - other.value).abs();
        let sigma = self.std_err.hypot(other.std_err);
        if sigma == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / sigma
        }
    }

    /// `|self - target| <= k * sigma + abs_tol`.
    pub fn agrees_with(&self, target: f64, k: f64, abs_tol: f64) -> bool {
        (self.value - target).abs() <= k * self.std_err + abs_tol
    }
}

impl Add for Estimate {
    type Output = Estimate;
    /// Sum of independent estimates.
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            std_err: self.std_err.hypot(rhs.std_err),
        }
    }
}

impl Mul<f64> for Estimate {
    type Output = Estimate;
    fn mul(self, s: f64) -> Estimate {
        Estimate {
            value: self.value * s,
            std_err: self.std_err * s.abs(),
        }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} ± {:.2e}", self.value, self.std_err)
    }
}

/// Streaming (count, sum, sum of squares) record; associative under `merge`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let m = self.sum / n;
        ((self.sum_sq / n - m * m) * n / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_err(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.mean(), self.std_err())
    }
}

/// Accumulates vector-valued samples so that linear combinations of the
/// components get correct standard errors (covariance is retained).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorAccumulator {
    pub count: u64,
    pub sum: Vec<f64>,
    pub cross: Vec<f64>,
    dim: usize,
}

impl VectorAccumulator {
    pub fn new(dim: usize) -> Self {
        VectorAccumulator {
            count: 0,
            sum: vec![0.0; dim],
            cross: vec![0.0; dim * dim],
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.count += 1;
        for i in 0..self.dim {
            self.sum[i] += x[i];
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                self.cross[i * self.dim + j] += x[i] * x[j];
            }
        }
    }

    /// Counts a sample whose components are all zero.
    pub fn push_zero(&mut self) {
        self.count += 1;
    }

    pub fn merge(&mut self, other: &VectorAccumulator) {
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a += b;
        }
    }

    pub fn means(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Covariance matrix of the sample mean (row-major).
    pub fn mean_covariance(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        if self.count < 2 {
            return out;
        }
        let n = self.count as f64;
        let m = self.means();
        for i in 0..d {
            for j in 0..d {
                let c = (self.cross[i * d + j] / n - m[i] * m[j]) * n / (n - 1.0);
                out[i * d + j] = c / n;
            }
        }
        out
    }

    /// Estimate of `Σ_i c_i · mean_i` with its standard error.
    pub fn linear(&self, coeffs: &[f64]) -> Estimate {
        let d = self.dim;
        let m = self.means();
        let cov = self.mean_covariance();
        let value: f64 = coeffs.iter().zip(&m).map(|(c, x)| c * x).sum();
        let mut var = 0.0;
        for i in 0..d {
            for j in 0..d {
                var += coeffs[i] * coeffs[j] * cov[i * d + j];
            }
        }
        Estimate::new(value, var.max(0.0).sqrt())
    }

    pub fn component(&self, i: usize) -> Estimate {
        let mut c = vec![0.0; self.dim];
        c[i] = 1.0;
        self.linear(&c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_matches_two_pass_statistics() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let mut acc = Accumulator::default();
        xs.iter().for_each(|&x| acc.push(x));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((acc.mean() - mean).abs() < 1e-12);
        assert!((acc.variance() - var).abs() < 1e-9);
    }

    #[test]
    fn merge_is_associative() {
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        let mut all = Accumulator::default();
        for i in 0..10 {
            let x = (i as f64).sin();
            if i % 3 == 0 {
                a.push(x)
            } else {
                b.push(x)
            }
            all.push(x);
        }
        a.merge(&b);
        assert_eq!(a.count, all.count);
        assert!((a.sum - all.sum).abs() < 1e-12);
    }

    #[test]
    fn vector_linear_combination_sees_correlation() {
        let mut acc = VectorAccumulator::new(2);
        for i in 0..100 {
            let x = (i as f64 * 0.37).sin();
            acc.push(&[x, x]);
        }
        // (x - x) has zero variance even though each component is noisy.
        let diff = acc.linear(&[1.0, -1.0]);
        assert!(diff.value.abs() < 1e-12 && diff.std_err < 1e-12);
        assert!(acc.component(0).std_err > 0.01);
    }
}
