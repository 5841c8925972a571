use crate::error::{domain, Error, Result};
use crate::polytope::Rational;
use num_bigint::BigInt;
use num_traits::{One, Zero};

fn binom(n: usize, k: usize) -> BigInt {
    let mut b = BigInt::one();
    for i in 0..k {
        b = b * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    b
}

/// The forward map of the local Steiner polynomial at ε = 1..d−k:
/// `μ_i = Σ_m F[i−1][m] Θ_m` with `F[i−1][m] = i^{d−k−m} binom(d−k,m)/(d−k)`.
pub fn vandermonde_forward(d: usize, k: usize) -> Result<Vec<Vec<Rational>>> {
    if k >= d {
        return domain(format!("need k < d, got k={k}, d={d}"));
    }
    let n = d - k;
    Ok((1..=n)
        .map(|i| {
            (0..n)
                .map(|m| {
                    let num = BigInt::from(i).pow((n - m) as u32) * binom(n, m);
                    Rational::new(num, BigInt::from(n))
                })
                .collect()
        })
        .collect())
}

/// Exact inverse of a square rational matrix by Gauss–Jordan elimination.
pub(crate) fn invert(a: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .ok_or_else(|| Error::RankDeficient("singular rational matrix".into()))?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x = &*x / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..2 * n {
                    let t = &f * &m[col][c];
                    m[r][c] -= t;
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Coefficients `a[m][i−1] = a_i(d,k,m)` with `Θ_m = Σ_i a_i μ_i`, exact.
pub fn vandermonde_coefficients(d: usize, k: usize) -> Result<Vec<Vec<Rational>>> {
    invert(&vandermonde_forward(d, k)?)
}
