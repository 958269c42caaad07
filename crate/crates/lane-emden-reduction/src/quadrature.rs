//! Gauss-Legendre quadrature and fully symmetric cubature on the unit sphere.
//!
//! The sphere rules are built from orbits of simple points under coordinate
//! permutations and sign flips. Because such point sets integrate every
//! monomial with an odd power to zero, and the sphere constraint ties each
//! even pattern to the patterns of the next degree up, it is enough to match
//! the class weights against the top-degree even moments plus the total mass.

use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::sphere_area;

/// Nodes and weights on [-1, 1].
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of the degree-n Legendre polynomial, found by
    /// Newton iteration from the Chebyshev-like initial guess.
    pub fn new(n: usize) -> GaussLegendre {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integral of f over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The i-th node and weight mapped onto [a, b], for integrating several
    /// functions over one panel without repeating the sweep.
    pub fn node(&self, a: f64, b: f64, i: usize) -> (f64, f64) {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        (mid + half * self.nodes[i], half * self.weights[i])
    }
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A cubature rule on the unit sphere in R^n. Weights are normalized to sum
/// to one, so the rule computes spherical averages; multiply by the surface
/// area for integrals against the surface measure.
pub struct SphereRule {
    n: usize,
    pub degree: u32,
    /// Flat point storage, `len = count * n`.
    points: Vec<f64>,
    /// One weight per point.
    weights: Vec<f64>,
}

impl SphereRule {
    /// Build a rule of polynomial degree 7 or 9 on the sphere in R^n, n >= 4.
    pub fn build(n: usize, degree: u32) -> Result<SphereRule> {
        if n < 4 {
            return Err(Error::Domain(format!(
                "sphere cubature needs dimension >= 4, got {n}"
            )));
        }
        let classes: Vec<Vec<Vec<f64>>> = match degree {
            7 => vec![
                orbit_axis(n),
                orbit_pairs(n),
                orbit_diagonal(n),
                orbit_triples(n),
            ],
            9 => vec![
                orbit_axis(n),
                orbit_pairs(n),
                orbit_diagonal(n),
                orbit_triples(n),
                orbit_quadruples(n),
                orbit_skew_pairs(n),
            ],
            other => {
                return Err(Error::Domain(format!(
                    "sphere cubature degree must be 7 or 9, got {other}"
                )))
            }
        };
        // monomial exponent patterns of the top even degree, plus total mass
        let patterns: Vec<Vec<u32>> = match degree {
            7 => vec![vec![], vec![6], vec![4, 2], vec![2, 2, 2]],
            _ => vec![
                vec![],
                vec![8],
                vec![6, 2],
                vec![4, 4],
                vec![4, 2, 2],
                vec![2, 2, 2, 2],
            ],
        };

        let mut a = vec![vec![0.0; classes.len()]; patterns.len()];
        let mut b = vec![0.0; patterns.len()];
        for (row, pat) in patterns.iter().enumerate() {
            b[row] = sphere_moment(n, pat);
            for (col, class) in classes.iter().enumerate() {
                a[row][col] = class.iter().map(|pt| monomial(pt, pat)).sum();
            }
        }
        let class_weights = linalg::solve(a, &b)
            .map_err(|_| Error::Quadrature("degenerate sphere cubature system".into()))?;

        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (class, &w) in classes.iter().zip(&class_weights) {
            for pt in class {
                points.extend_from_slice(pt);
                weights.push(w);
            }
        }
        Ok(SphereRule {
            n,
            degree,
            points,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Average of f over the sphere.
    pub fn average(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.point(i))).sum()
    }

    /// Integral of f against the surface measure.
    pub fn integrate(&self, f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.average(f) * sphere_area(self.n as u32)
    }

    /// The same rule with every point rotated by the orthogonal matrix q
    /// (rows are the new frame). Exactness degree is rotation invariant.
    pub fn rotated(&self, q: &[Vec<f64>]) -> SphereRule {
        let mut points = Vec::with_capacity(self.points.len());
        for i in 0..self.len() {
            let p = self.point(i);
            for row in q {
                points.push(row.iter().zip(p).map(|(a, b)| a * b).sum());
            }
        }
        SphereRule {
            n: self.n,
            degree: self.degree,
            points,
            weights: self.weights.clone(),
        }
    }
}

fn monomial(x: &[f64], pattern: &[u32]) -> f64 {
    pattern
        .iter()
        .enumerate()
        .map(|(i, &e)| x[i].powi(e as i32))
        .product()
}

/// Spherical average of prod_i x_i^{e_i} for even exponents e_i = 2 k_i:
/// prod (2 k_i - 1)!! divided by N (N+2) ... (N + 2K - 2), K = sum k_i.
pub fn sphere_moment(n: usize, even_exponents: &[u32]) -> f64 {
    let mut num = 1.0;
    let mut total_k = 0u32;
    for &e in even_exponents {
        debug_assert!(e % 2 == 0);
        let k = e / 2;
        total_k += k;
        for j in 1..=k {
            num *= (2 * j - 1) as f64;
        }
    }
    let mut den = 1.0;
    for j in 0..total_k {
        den *= (n as u32 + 2 * j) as f64;
    }
    num / den
}

fn orbit_axis(n: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut p = vec![0.0; n];
            p[i] = s;
            pts.push(p);
        }
    }
    pts
}

fn orbit_pairs(n: usize) -> Vec<Vec<f64>> {
    let c = 1.0 / 2f64.sqrt();
    let mut pts = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for si in [1.0, -1.0] {
                for sj in [1.0, -1.0] {
                    let mut p = vec![0.0; n];
                    p[i] = si * c;
                    p[j] = sj * c;
                    pts.push(p);
                }
            }
        }
    }
    pts
}

fn orbit_triples(n: usize) -> Vec<Vec<f64>> {
    let c = 1.0 / 3f64.sqrt();
    let mut pts = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for si in [1.0, -1.0] {
                    for sj in [1.0, -1.0] {
                        for sk in [1.0, -1.0] {
                            let mut p = vec![0.0; n];
                            p[i] = si * c;
                            p[j] = sj * c;
                            p[k] = sk * c;
                            pts.push(p);
                        }
                    }
                }
            }
        }
    }
    pts
}

fn orbit_quadruples(n: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    for mask in 0..16u32 {
                        let mut p = vec![0.0; n];
                        for (slot, &idx) in [i, j, k, l].iter().enumerate() {
                            p[idx] = if mask >> slot & 1 == 0 { 0.5 } else { -0.5 };
                        }
                        pts.push(p);
                    }
                }
            }
        }
    }
    pts
}

/// Points (sqrt(2) e_i +- e_j) / sqrt(3) over ordered pairs i != j.
fn orbit_skew_pairs(n: usize) -> Vec<Vec<f64>> {
    let big = (2f64 / 3.0).sqrt();
    let small = 1.0 / 3f64.sqrt();
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for si in [1.0, -1.0] {
                for sj in [1.0, -1.0] {
                    let mut p = vec![0.0; n];
                    p[i] = si * big;
                    p[j] = sj * small;
                    pts.push(p);
                }
            }
        }
    }
    pts
}

/// Full sign-and-permutation diagonal orbit (+-1, ..., +-1) / sqrt(n).
fn orbit_diagonal(n: usize) -> Vec<Vec<f64>> {
    let c = 1.0 / (n as f64).sqrt();
    let mut pts = Vec::new();
    for mask in 0..(1u64 << n) {
        let p = (0..n)
            .map(|i| if mask >> i & 1 == 0 { c } else { -c })
            .collect();
        pts.push(p);
    }
    pts
}

/// Gregory coefficients for the end corrections of the trapezoid rule, in
/// difference order 1..=7.
const GREGORY: [f64; 7] = [
    1.0 / 12.0,
    1.0 / 24.0,
    19.0 / 720.0,
    3.0 / 160.0,
    863.0 / 60480.0,
    275.0 / 24192.0,
    33953.0 / 3628800.0,
];

/// Integral of uniformly spaced samples by the trapezoid rule with Gregory
/// end corrections through seventh differences. Needs no evaluations beyond
/// the samples themselves, which makes it a route independent of any
/// interpolant. Short inputs fall back to as many corrections as fit.
pub fn gregory(h: f64, f: &[f64]) -> f64 {
    let m = f.len();
    if m < 2 {
        return 0.0;
    }
    let trapezoid = 0.5 * (f[0] + f[m - 1]) + f[1..m - 1].iter().sum::<f64>();
    let depth = GREGORY.len().min(m - 1);
    let mut correction = 0.0;
    for (k, g) in GREGORY.iter().enumerate().take(depth) {
        let order = k + 1;
        // forward difference at the left end, backward at the right
        let mut forward = 0.0;
        let mut backward = 0.0;
        let mut binom = 1.0f64;
        for j in 0..=order {
            let sign = if (order - j) % 2 == 0 { 1.0 } else { -1.0 };
            forward += sign * binom * f[j];
            backward += sign * binom * f[m - 1 - (order - j)];
            binom *= (order - j) as f64 / (j + 1) as f64;
        }
        let fold = if order % 2 == 0 { 1.0 } else { -1.0 };
        correction -= g * (backward + fold * forward);
    }
    h * (trapezoid + correction)
}
