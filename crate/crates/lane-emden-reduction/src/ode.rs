//! Adaptive Dormand-Prince 5(4) integration for small fixed-size systems.
//!
//! The integrator advances from `t0` to `t_end`, adapting the step from the
//! embedded fourth-order error estimate, and reports back through an
//! accepted-step callback so callers can watch for sign changes or record
//! dense output segment by segment.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];

/// Difference between the fifth- and fourth-order solutions.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dense-output weights for the fifth-order continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;
const MAX_STEPS: usize = 20_000_000;

/// Tolerances for the embedded error control. The scale for component i is
/// `abs_tol + rel_tol * max(|y_i| before, |y_i| after)`.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

/// Where an integration ended and with what state.
#[derive(Debug, Clone, Copy)]
pub struct Integration<const D: usize> {
    pub t: f64,
    pub y: [f64; D],
    /// Last accepted step size, a good initial step for a continuation.
    pub h_last: f64,
    /// True when the stop callback halted the run before `t_end`.
    pub stopped: bool,
    pub steps: usize,
}

/// Continuous extension of one accepted step, valid on [t0, t0 + h].
pub struct DenseStep<const D: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; D]; 5],
}

impl<const D: usize> DenseStep<D> {
    pub fn eval(&self, t: f64) -> [f64; D] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let mut y = [0.0; D];
        let [c1, c2, c3, c4, c5] = &self.rcont;
        for i in 0..D {
            y[i] = c1[i] + theta * (c2[i] + theta1 * (c3[i] + theta * (c4[i] + theta1 * c5[i])));
        }
        y
    }
}

impl Dopri5 {
    /// Integrate y' = f(t, y) from (t0, y0) to t_end (t_end > t0). After each
    /// accepted step, `stop(t, &y)` may return true to halt early. `h0` is
    /// the initial step size guess.
    pub fn integrate<const D: usize>(
        &self,
        f: impl Fn(f64, &[f64; D]) -> [f64; D],
        t0: f64,
        y0: [f64; D],
        t_end: f64,
        h0: f64,
        mut stop: impl FnMut(f64, &[f64; D]) -> bool,
    ) -> Result<Integration<D>> {
        self.integrate_observed(f, t0, y0, t_end, h0, |_, t, y| stop(t, y))
    }

    /// As `integrate`, but the callback also receives the continuous
    /// extension of each accepted step, so trajectories can be sampled at
    /// prescribed points without altering the step sequence.
    pub fn integrate_observed<const D: usize>(
        &self,
        f: impl Fn(f64, &[f64; D]) -> [f64; D],
        t0: f64,
        y0: [f64; D],
        t_end: f64,
        h0: f64,
        mut observe: impl FnMut(&DenseStep<D>, f64, &[f64; D]) -> bool,
    ) -> Result<Integration<D>> {
        let span = t_end - t0;
        if span <= 0.0 {
            return Ok(Integration {
                t: t0,
                y: y0,
                h_last: h0,
                stopped: false,
                steps: 0,
            });
        }
        let mut t = t0;
        let mut y = y0;
        let mut h = if h0 > 0.0 { h0.min(span) } else { 0.01 * span };
        let mut k1 = f(t, &y);
        let mut steps = 0usize;
        let mut h_last = h;

        while t < t_end {
            if steps >= MAX_STEPS {
                return Err(Error::Solver(format!(
                    "step budget exhausted at t = {t:.6e}"
                )));
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Solver(format!(
                    "step size underflow at t = {t:.6e} (h = {h:.3e})"
                )));
            }
            let hit_end = t + h >= t_end;
            if hit_end {
                h = t_end - t;
            }

            let stage = |coeffs: &[f64], ks: &[[f64; D]]| -> [f64; D] {
                let mut yy = y;
                for (a, k) in coeffs.iter().zip(ks) {
                    for i in 0..D {
                        yy[i] += h * a * k[i];
                    }
                }
                yy
            };

            let k2 = f(t + C[1] * h, &stage(&A2, &[k1]));
            let k3 = f(t + C[2] * h, &stage(&A3, &[k1, k2]));
            let k4 = f(t + C[3] * h, &stage(&A4, &[k1, k2, k3]));
            let k5 = f(t + C[4] * h, &stage(&A5, &[k1, k2, k3, k4]));
            let k6 = f(t + C[5] * h, &stage(&A6, &[k1, k2, k3, k4, k5]));
            let y1 = stage(&A7, &[k1, k2, k3, k4, k5, k6]);
            let k7 = f(t + h, &y1);

            let ks = [k1, k2, k3, k4, k5, k6, k7];
            let mut err_sq = 0.0;
            for i in 0..D {
                let mut e = 0.0;
                for (c, k) in E.iter().zip(&ks) {
                    e += c * k[i];
                }
                e *= h;
                let sc = self.abs_tol + self.rel_tol * y[i].abs().max(y1[i].abs());
                err_sq += (e / sc) * (e / sc);
            }
            let err = (err_sq / D as f64).sqrt();

            if err <= 1.0 {
                let mut rcont = [[0.0; D]; 5];
                for i in 0..D {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * k7[i] - bspl;
                    rcont[4][i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let dense = DenseStep { t0: t, h, rcont };
                t = if hit_end { t_end } else { t + h };
                y = y1;
                k1 = k7;
                h_last = h;
                steps += 1;
                if observe(&dense, t, &y) {
                    return Ok(Integration {
                        t,
                        y,
                        h_last,
                        stopped: true,
                        steps,
                    });
                }
                let scale = if err == 0.0 {
                    MAX_SCALE
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
                };
                h *= scale;
            } else {
                h *= (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, 1.0);
                steps += 1;
            }
        }

        Ok(Integration {
            t,
            y,
            h_last,
            stopped: false,
            steps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay() {
        let solver = Dopri5 {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        };
        let out = solver
            .integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, 1e-3, |_, _| false)
            .unwrap();
        assert_relative_eq!(out.y[0], (-5.0f64).exp(), max_relative = 1e-9);
        assert!(!out.stopped);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let solver = Dopri5 {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        };
        let out = solver
            .integrate(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [1.0, 0.0],
                20.0 * std::f64::consts::PI,
                1e-2,
                |_, _| false,
            )
            .unwrap();
        assert_relative_eq!(out.y[0], 1.0, epsilon = 1e-7);
        assert!(out.y[1].abs() < 1e-7);
    }

    #[test]
    fn stop_callback_halts() {
        let solver = Dopri5 {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
        };
        let out = solver
            .integrate(
                |_, y: &[f64; 1]| [-y[0]],
                0.0,
                [1.0],
                100.0,
                1e-3,
                |_, y| y[0] < 0.5,
            )
            .unwrap();
        assert!(out.stopped);
        assert!(out.t < 1.0);
        assert!(out.y[0] < 0.5);
    }

    #[test]
    fn tolerance_controls_accuracy() {
        let run = |rt: f64| {
            let solver = Dopri5 {
                rel_tol: rt,
                abs_tol: rt * 1e-2,
            };
            let out = solver
                .integrate(
                    |t: f64, y: &[f64; 1]| [t * y[0]],
                    0.0,
                    [1.0],
                    2.0,
                    1e-3,
                    |_, _| false,
                )
                .unwrap();
            (out.y[0] - (2.0f64).exp()).abs() / (2.0f64).exp()
        };
        assert!(run(1e-10) < 1e-9);
        assert!(run(1e-10) < run(1e-4));
    }

    #[test]
    fn dense_output_tracks_solution_inside_steps() {
        let solver = Dopri5 {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
        };
        let mut worst = 0.0f64;
        let out = solver
            .integrate_observed(
                |t: f64, _: &[f64; 1]| [t.cos()],
                0.0,
                [0.0],
                10.0,
                1e-2,
                |dense, _, _| {
                    for k in 1..8 {
                        let t = dense.t0 + dense.h * k as f64 / 8.0;
                        let y = dense.eval(t);
                        worst = worst.max((y[0] - t.sin()).abs());
                    }
                    false
                },
            )
            .unwrap();
        assert_relative_eq!(out.y[0], 10.0f64.sin(), epsilon = 1e-9);
        // the continuous extension is one order below the step error
        assert!(worst < 5e-8, "dense output error {worst:.3e}");
    }

    #[test]
    fn lands_exactly_on_endpoint() {
        let solver = Dopri5 {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
        };
        let out = solver
            .integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 1.0, 0.3, |_, _| false)
            .unwrap();
        assert_eq!(out.t, 1.0);
        assert_relative_eq!(out.y[0], 1.0f64.exp(), max_relative = 1e-8);
    }
}
