//! Small dense helpers on row-major `Vec<f64>` storage.

use crate::error::{Error, Result};

/// In-place lower Cholesky factorization of a symmetric row-major `n x n`
/// matrix. On success the lower triangle holds `L` and the strict upper
/// triangle is zeroed.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::SingularGram { row: j, pivot: d });
        }
        let ljj = d.sqrt();
        a[j * n + j] = ljj;
        for i in (j + 1)..n {
            let (row_i, row_j) = (i * n, j * n);
            let mut s = a[row_i + j];
            for k in 0..j {
                s -= a[row_i + k] * a[row_j + k];
            }
            a[row_i + j] = s / ljj;
        }
        for k in (j + 1)..n {
            a[j * n + k] = 0.0;
        }
    }
    Ok(())
}

/// Solves `L x = b` for row-major lower-triangular `L`.
pub fn forward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let s: f64 = row.iter().zip(&b[..i]).map(|(a, x)| a * x).sum();
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

/// `L z` for row-major lower-triangular `L`.
pub fn lower_mul(l: &[f64], n: usize, z: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| l[i * n..=i * n + i].iter().zip(&z[..=i]).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_and_solve_match_nalgebra() {
        let n = 5;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = 1.0 / (1.0 + (i as f64 - j as f64).abs()) + if i == j { 1.0 } else { 0.0 };
            }
        }
        let oracle = nalgebra::DMatrix::from_row_slice(n, n, &m).cholesky().unwrap().l();
        let mut l = m.clone();
        cholesky_in_place(&mut l, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((l[i * n + j] - oracle[(i, j)]).abs() < 1e-13);
            }
        }
        let mut b = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let orig = b.clone();
        forward_solve(&l, n, &mut b);
        let back = lower_mul(&l, n, &b);
        for (x, y) in back.iter().zip(&orig) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut m = vec![1.0, 2.0, 2.0, 1.0];
        assert!(matches!(cholesky_in_place(&mut m, 2), Err(Error::SingularGram { row: 1, .. })));
    }
}
