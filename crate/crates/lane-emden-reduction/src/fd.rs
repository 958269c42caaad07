//! Finite-difference weights on arbitrary nodes (Fornberg's recursion) and
//! helpers for differentiating grid arrays in the log-radius variable.

/// Weights for derivatives of order 0..=m at evaluation point `z` from nodes
/// `x`. Returns `w` with `w[k][j]` the weight of `f(x[j])` in the k-th
/// derivative.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0f64; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    // transpose into w[k][j]
    (0..=m)
        .map(|k| (0..n).map(|j| c[j][k]).collect())
        .collect()
}

/// First and second derivative of a grid array with respect to x = ln r at
/// node `i`, using the centered stencil of `2*half + 1` nodes. The caller
/// guarantees `half <= i` and `i + half < r.len()` and strictly positive radii.
pub fn log_derivs_at(r: &[f64], f: &[f64], i: usize, half: usize) -> (f64, f64) {
    let lo = i - half;
    let hi = i + half;
    let xs: Vec<f64> = r[lo..=hi].iter().map(|v| v.ln()).collect();
    let w = fornberg_weights(r[i].ln(), &xs, 2);
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (j, idx) in (lo..=hi).enumerate() {
        d1 += w[1][j] * f[idx];
        d2 += w[2][j] * f[idx];
    }
    (d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_for_polynomials() {
        // 9 nodes reproduce derivatives of degree-8 polynomials exactly
        let x: Vec<f64> = (0..9).map(|i| 0.3 + 0.1 * i as f64).collect();
        let f: Vec<f64> = x.iter().map(|&v| v.powi(8)).collect();
        let z = x[4];
        let w = fornberg_weights(z, &x, 2);
        let d1: f64 = w[1].iter().zip(&f).map(|(wi, fi)| wi * fi).sum();
        let d2: f64 = w[2].iter().zip(&f).map(|(wi, fi)| wi * fi).sum();
        assert_relative_eq!(d1, 8.0 * z.powi(7), max_relative = 1e-10);
        assert_relative_eq!(d2, 56.0 * z.powi(6), max_relative = 1e-9);
    }

    #[test]
    fn log_grid_exponential() {
        // f(r) = r^{-4} has f_x = -4 f and f_xx = 16 f in x = ln r
        let ratio = 10f64.powf(1.0 / 40.0);
        let r: Vec<f64> = (0..81).map(|i| 1e-1 * ratio.powi(i)).collect();
        let f: Vec<f64> = r.iter().map(|&v| v.powi(-4)).collect();
        let i = 40;
        let (d1, d2) = log_derivs_at(&r, &f, i, 4);
        assert_relative_eq!(d1, -4.0 * f[i], max_relative = 1e-7);
        assert_relative_eq!(d2, 16.0 * f[i], max_relative = 1e-7);
    }

    #[test]
    fn off_center_weights_sum_to_zero() {
        let x = [0.0, 1.0, 2.5, 3.0, 4.2];
        let w = fornberg_weights(1.7, &x, 2);
        assert!(w[1].iter().sum::<f64>().abs() < 1e-12);
        assert!(w[2].iter().sum::<f64>().abs() < 1e-12);
        assert_relative_eq!(w[0].iter().sum::<f64>(), 1.0, max_relative = 1e-12);
    }
}
