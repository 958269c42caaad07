//! Dense LU factorization with partial pivoting for the small matrices that
//! show up here: metric blocks, cubature weight systems, least-squares
//! normal equations.

use crate::error::{Error, Result};

/// LU factorization of a square matrix with partial pivoting.
pub struct Lu {
    lu: Vec<Vec<f64>>,
    piv: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn factor(mut a: Vec<Vec<f64>>) -> Result<Lu> {
        let n = a.len();
        if a.iter().any(|row| row.len() != n) {
            return Err(Error::Domain("LU requires a square matrix".into()));
        }
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (imax, vmax) = (k..n)
                .map(|i| (i, a[i][k].abs()))
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            if vmax == 0.0 {
                return Err(Error::Domain("singular matrix in LU factorization".into()));
            }
            if imax != k {
                a.swap(imax, k);
                piv.swap(imax, k);
                sign = -sign;
            }
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                a[i][k] = m;
                for j in k + 1..n {
                    a[i][j] -= m * a[k][j];
                }
            }
        }
        Ok(Lu { lu: a, piv, sign })
    }

    pub fn dim(&self) -> usize {
        self.lu.len()
    }

    pub fn det(&self) -> f64 {
        self.sign * (0..self.dim()).map(|i| self.lu[i][i]).product::<f64>()
    }

    /// Smallest pivot magnitude, a cheap conditioning probe.
    pub fn min_abs_pivot(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.lu[i][i].abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }

    pub fn inverse(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            cols.push(self.solve(&e));
        }
        // transpose column solutions into rows
        (0..n)
            .map(|i| (0..n).map(|j| cols[j][i]).collect())
            .collect()
    }
}

/// Solve the square system a x = b.
pub fn solve(a: Vec<Vec<f64>>, b: &[f64]) -> Result<Vec<f64>> {
    Ok(Lu::factor(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solve_and_det_3x3() {
        let a = vec![
            vec![2.0, 1.0, -1.0],
            vec![-3.0, -1.0, 2.0],
            vec![-2.0, 1.0, 2.0],
        ];
        let lu = Lu::factor(a).unwrap();
        assert_relative_eq!(lu.det(), -1.0, max_relative = 1e-12);
        let x = lu.solve(&[8.0, -11.0, -3.0]);
        assert_relative_eq!(x[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], 3.0, max_relative = 1e-12);
        assert_relative_eq!(x[2], -1.0, max_relative = 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = vec![
            vec![4.0, 0.5, 0.1],
            vec![0.5, 3.0, -0.2],
            vec![0.1, -0.2, 5.0],
        ];
        let inv = Lu::factor(a.clone()).unwrap().inverse();
        for i in 0..3 {
            for j in 0..3 {
                let prod: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(prod, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn singular_is_an_error() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(Lu::factor(a).is_err());
    }
}
