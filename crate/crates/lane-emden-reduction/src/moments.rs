//! Moment constants L1..L7 of the ground state, by weighted radial quadrature
//! with analytic closure of the power-law tails.
//!
//! With the sphere factored out, each constant is omega_{N-1} times a
//! one-dimensional integral over r in [0, infinity):
//!   L1: U'V' r^{N-1}        L2: U'V' r^{N+1}      L3: U V r^{N-1}
//!   L4: V^{p+1} r^{N+1}     L5: U^{q+1} r^{N+1}
//!   L6: V^{p+1} log V r^{N-1}   L7: U^{q+1} log U r^{N-1}

use crate::error::{Error, Result};
use crate::exponents::{CriticalPair, DecayRegime};
use crate::profile::{Normalization, ProfileValues, RadialProfile};
use crate::quadrature::{gregory, GaussLegendre};
use serde::{Deserialize, Serialize};

/// Far-field power of each integrand (ignoring log factors), in L1..L7 order.
fn tail_powers(regime: &DecayRegime, pair: &CriticalPair) -> [f64; 7] {
    let n = pair.dim();
    let u = regime.u_tail_exponent;
    let v = regime.v_tail_exponent;
    let du = regime.u_deriv_exponent();
    let dv = regime.v_deriv_exponent();
    [
        du + dv + n - 1.0,
        du + dv + n + 1.0,
        u + v + n - 1.0,
        (pair.p + 1.0) * v + n + 1.0,
        (pair.q + 1.0) * u + n + 1.0,
        (pair.p + 1.0) * v + n - 1.0,
        (pair.q + 1.0) * u + n - 1.0,
    ]
}

/// Per-constant finiteness flags from tail-exponent arithmetic: the integral
/// converges iff the far-field power is strictly below -1. Log factors (the
/// critical regime, and the log V / log U weights) do not move a strict
/// inequality and leave the boundary case divergent.
pub fn integrability_precheck(regime: &DecayRegime, pair: &CriticalPair) -> [bool; 7] {
    tail_powers(regime, pair).map(|power| power < -1.0)
}

/// Names divergent constants for error messages, e.g. "L2, L3".
pub fn divergent_names(flags: &[bool; 7]) -> String {
    let names: Vec<String> = flags
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| format!("L{}", i + 1))
        .collect();
    names.join(", ")
}

/// Surface area of the unit sphere in R^N: 2 pi^{N/2} / Gamma(N/2).
///
/// N is an integer, so Gamma(N/2) is evaluated exactly: (k-1)! for N = 2k,
/// (2k)! sqrt(pi) / (4^k k!) for N = 2k+1.
pub fn sphere_area(n: u32) -> f64 {
    let half = std::f64::consts::PI.powf(n as f64 / 2.0);
    2.0 * half / gamma_half_integer(n)
}

/// Gamma(N/2) for integer N >= 1.
fn gamma_half_integer(n: u32) -> f64 {
    if n % 2 == 0 {
        let k = n / 2;
        (1..k).map(|i| i as f64).product::<f64>()
    } else {
        let k = (n - 1) / 2;
        let mut acc = std::f64::consts::PI.sqrt();
        for i in 0..k {
            acc *= 0.5 + i as f64;
        }
        acc
    }
}

/// The seven moment constants of a ground-state profile, with enough
/// bookkeeping to judge how trustworthy each value is.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentConstants {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    pub l6: f64,
    pub l7: f64,
    /// omega_{N-1}, already folded into the values above.
    pub sphere_area: f64,
    /// Per-constant fraction contributed by the analytic tail closure.
    pub tail_fractions: [f64; 7],
    /// Per-constant difference between the two quadrature routes.
    pub est_error: [f64; 7],
    /// L3, L6, L7 (and c1 downstream) depend on the representative of the
    /// scaling family, so the profile's normalization travels with them.
    pub normalization: Normalization,
    pub profile_hash: String,
}

impl MomentConstants {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.l1, self.l2, self.l3, self.l4, self.l5, self.l6, self.l7,
        ]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The seven radial integrands at one radius, without the sphere factor.
fn integrands(pair: &CriticalPair, r: f64, vals: &ProfileValues) -> [f64; 7] {
    let w_base = r.powi(pair.n as i32 - 1);
    let w_heavy = w_base * r * r;
    let slopes = vals.du * vals.dv;
    let v_pow = vals.v.max(0.0).powf(pair.p + 1.0);
    let u_pow = vals.u.max(0.0).powf(pair.q + 1.0);
    [
        slopes * w_base,
        slopes * w_heavy,
        vals.u * vals.v * w_base,
        v_pow * w_heavy,
        u_pow * w_heavy,
        x_pow_log(vals.v, pair.p) * w_base,
        x_pow_log(vals.u, pair.q) * w_base,
    ]
}

/// x^{e+1} ln x, with the x -> 0 limit made explicit so underflowing
/// profile values cannot poison the quadrature with 0 * inf.
fn x_pow_log(x: f64, e: f64) -> f64 {
    if x > 1e-300 {
        x.powf(e + 1.0) * x.ln()
    } else {
        0.0
    }
}

/// L1..L7 by quadrature of the profile up to its tail handover radius plus
/// analytic closure of the fitted tail models beyond it.
///
/// The value uses composite Gauss-Legendre panels on the profile
/// interpolant; a second route integrates the raw node values directly
/// (trapezoid with Gregory end corrections on the uniform log grid), and the
/// difference between the two is reported as the error estimate.
pub fn compute_moments(profile: &RadialProfile) -> Result<MomentConstants> {
    let pair = &profile.pair;
    let flags = integrability_precheck(&profile.regime, pair);
    if flags.iter().any(|ok| !ok) {
        return Err(Error::Domain(format!(
            "divergent moment constants {} for N = {} in the {:?} decay regime",
            divergent_names(&flags),
            pair.n,
            profile.regime.tag,
        )));
    }

    let gl = GaussLegendre::new(16);
    let tail_from = profile.tail_start();
    let k_end = profile
        .grid
        .iter()
        .rposition(|&r| r <= tail_from * (1.0 + 1e-12))
        .ok_or_else(|| Error::Quadrature("tail handover radius precedes the grid".into()))?;

    let add_panel = |sums: &mut [f64; 7], a: f64, b: f64| {
        for i in 0..gl.len() {
            let (r, w) = gl.node(a, b, i);
            let f = integrands(pair, r, &profile.eval(r));
            for (sum, fi) in sums.iter_mut().zip(f) {
                *sum += w * fi;
            }
        }
    };
    let mut head = [0.0f64; 7];
    add_panel(&mut head, 0.0, profile.grid[1]);
    let mut main = head;
    for k in 1..k_end {
        add_panel(&mut main, profile.grid[k], profile.grid[k + 1]);
    }

    // second route: the same integral from the stored nodes alone, in
    // x = ln r where the grid is uniform
    let nodes: Vec<[f64; 7]> = (1..=k_end)
        .map(|k| {
            let r = profile.grid[k];
            let vals = ProfileValues {
                u: profile.u[k],
                du: profile.du[k],
                v: profile.v[k],
                dv: profile.dv[k],
            };
            integrands(pair, r, &vals).map(|f| f * r)
        })
        .collect();
    let h = (profile.grid[k_end] / profile.grid[1]).ln() / (k_end - 1) as f64;
    let check = std::array::from_fn::<f64, 7, _>(|i| {
        let samples: Vec<f64> = nodes.iter().map(|f| f[i]).collect();
        head[i] + gregory(h, &samples)
    });

    let tail = integrate_tail(profile, &main)?;
    let area = sphere_area(pair.n);

    let totals = std::array::from_fn::<f64, 7, _>(|i| area * (main[i] + tail[i]));
    for (i, &value) in totals.iter().take(5).enumerate() {
        if value <= 0.0 {
            return Err(Error::Quadrature(format!(
                "L{} came out non-positive ({value:.3e}) for a positive integrand",
                i + 1
            )));
        }
    }
    Ok(MomentConstants {
        l1: totals[0],
        l2: totals[1],
        l3: totals[2],
        l4: totals[3],
        l5: totals[4],
        l6: totals[5],
        l7: totals[6],
        sphere_area: area,
        tail_fractions: std::array::from_fn(|i| tail[i] / (main[i] + tail[i])),
        est_error: std::array::from_fn(|i| area * (main[i] - check[i]).abs()),
        normalization: profile.normalization(),
        profile_hash: profile.input_hash(),
    })
}

/// Integrals of the fitted tail models over [tail_start, infinity).
///
/// The models are analytic but their powers are fractional, so instead of
/// elementary antiderivatives this marches quarter-decade Gauss-Legendre
/// panels outward until every constant has converged relative to its main
/// part. Convergence is guaranteed by the integrability precheck.
fn integrate_tail(profile: &RadialProfile, main: &[f64; 7]) -> Result<[f64; 7]> {
    let pair = &profile.pair;
    let gl = GaussLegendre::new(16);
    let step = 10f64.ln() / 4.0;
    let mut x = profile.tail_start().ln();
    let mut acc = [0.0f64; 7];
    for _ in 0..4000 {
        let mut panel = [0.0f64; 7];
        for i in 0..gl.len() {
            let (xi, w) = gl.node(x, x + step, i);
            let r = xi.exp();
            let f = integrands(pair, r, &profile.eval(r));
            for (p, fi) in panel.iter_mut().zip(f) {
                *p += w * fi * r;
            }
        }
        for (a, p) in acc.iter_mut().zip(panel) {
            *a += p;
        }
        x += step;
        let done = (0..7).all(|i| panel[i].abs() <= 1e-16 * (main[i].abs() + acc[i].abs()));
        if done {
            return Ok(acc);
        }
    }
    Err(Error::Quadrature(
        "tail closure did not converge within 1000 decades".into(),
    ))
}

#[cfg(test)]
mod moment_tests {
    use super::*;
    use crate::exponents::classify_regime;
    use crate::profile::{solve_ground_state, ShootingOptions, TailFit};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    /// One shared solve: N = 6, p = q = 2, whose ground state is exactly
    /// U = V = (1 + r^2/24)^{-2}. On the closed form every constant reduces
    /// to a Beta function via t = r^2/24; the log-weighted pair picks up the
    /// digamma difference psi(6) - psi(3) = 47/60. In units of pi^3
    /// (omega_5 = pi^3):
    ///   L1 = 1152/5, L2 = 110592/5, L3 = 2304, L4 = L5 = 41472/5,
    ///   L6 = L7 = -9024/25.
    fn n6() -> &'static (RadialProfile, MomentConstants) {
        static CELL: OnceLock<(RadialProfile, MomentConstants)> = OnceLock::new();
        CELL.get_or_init(|| {
            let pair = CriticalPair::new(6, 2.0, 2.0, 1.0, 1.0).unwrap();
            let prof = solve_ground_state(&pair, &ShootingOptions::default()).unwrap();
            let m = compute_moments(&prof).unwrap();
            (prof, m)
        })
    }

    #[test]
    fn dump_diagnostics() {
        let (prof, m) = n6();
        let pi3 = PI.powi(3);
        let oracle = [
            1152.0 / 5.0,
            110592.0 / 5.0,
            2304.0,
            41472.0 / 5.0,
            41472.0 / 5.0,
            -9024.0 / 25.0,
            -9024.0 / 25.0,
        ];
        eprintln!("tail_start = {:.4e}", prof.tail_start());
        for (i, (&want, got)) in oracle.iter().zip(m.as_array()).enumerate() {
            eprintln!(
                "L{}: rel dev {:+.3e}, tail frac {:.3e}, est err rel {:.3e}",
                i + 1,
                got / (want * pi3) - 1.0,
                m.tail_fractions[i],
                m.est_error[i] / got.abs(),
            );
        }
        eprintln!("l4/l5 - 1 = {:+.3e}, l6/l7 - 1 = {:+.3e}", m.l4 / m.l5 - 1.0, m.l6 / m.l7 - 1.0);
    }

    #[test]
    fn symmetric_case_matches_beta_function_values() {
        let (_, m) = n6();
        let pi3 = PI.powi(3);
        assert_relative_eq!(m.l1, 1152.0 / 5.0 * pi3, max_relative = 1e-5);
        assert_relative_eq!(m.l2, 110592.0 / 5.0 * pi3, max_relative = 1e-5);
        assert_relative_eq!(m.l3, 2304.0 * pi3, max_relative = 1e-5);
        assert_relative_eq!(m.l4, 41472.0 / 5.0 * pi3, max_relative = 1e-5);
        assert_relative_eq!(m.l5, 41472.0 / 5.0 * pi3, max_relative = 1e-5);
        assert_relative_eq!(m.l6, -9024.0 / 25.0 * pi3, max_relative = 1e-5);
        assert_relative_eq!(m.l7, -9024.0 / 25.0 * pi3, max_relative = 1e-5);
    }

    #[test]
    fn symmetric_case_collapses_duals() {
        let (_, m) = n6();
        assert_relative_eq!(m.l4, m.l5, max_relative = 1e-8);
        assert_relative_eq!(m.l6, m.l7, max_relative = 1e-8);
        assert_relative_eq!(m.l2 / m.l3, 9.6, max_relative = 1e-6);
        assert_relative_eq!(m.l4 / m.l3, 3.6, max_relative = 1e-6);
    }

    #[test]
    fn bookkeeping_is_sane() {
        let (prof, m) = n6();
        for (value, err) in m.as_array().iter().zip(m.est_error) {
            assert!(err <= 1e-5 * value.abs(), "error estimate {err:.3e}");
        }
        for frac in m.tail_fractions {
            assert!((0.0..1.0).contains(&frac), "tail fraction {frac}");
        }
        assert_relative_eq!(m.sphere_area, PI.powi(3), max_relative = 1e-14);
        assert_eq!(m.normalization.u_at_origin, 1.0);
        assert_eq!(m.profile_hash, prof.input_hash());
    }

    #[test]
    fn rescaling_shifts_only_the_covariant_constants() {
        let (prof, m) = n6();
        let lam = 1.8;
        let scaled = compute_moments(&prof.rescaled(lam)).unwrap();
        let lam2 = lam * lam;
        assert_relative_eq!(scaled.l1, m.l1, max_relative = 1e-6);
        assert_relative_eq!(scaled.l2 * lam2, m.l2, max_relative = 1e-6);
        assert_relative_eq!(scaled.l3 * lam2, m.l3, max_relative = 1e-6);
        assert_relative_eq!(scaled.l4 * lam2, m.l4, max_relative = 1e-6);
        assert_relative_eq!(scaled.l5 * lam2, m.l5, max_relative = 1e-6);
        assert_relative_eq!(scaled.l2 / scaled.l3, m.l2 / m.l3, max_relative = 1e-9);
        assert_relative_eq!(scaled.l4 / scaled.l3, m.l4 / m.l3, max_relative = 1e-9);
    }

    #[test]
    fn divergent_regime_is_rejected() {
        // N = 4 on the hyperbola: U, V ~ r^{-2}, so the r^2-weighted
        // constants sit exactly on the divergence boundary. A stub profile
        // suffices: the precheck must fire before any quadrature.
        let pair = CriticalPair::new(4, 3.0, 3.0, 1.0, 1.0).unwrap();
        let regime = classify_regime(&pair);
        let fit = TailFit {
            slope: -2.0,
            log_amplitude: 0.0,
            corr_amp: 0.0,
            corr_exponent: 0.0,
            r_squared: 1.0,
            log_corrected: false,
            window: (1.0, 10.0),
        };
        let profile = RadialProfile {
            pair,
            v0: 1.0,
            grid: vec![0.0, 1.0, 10.0],
            u: vec![1.0, 0.5, 0.01],
            du: vec![0.0, -0.1, -0.001],
            v: vec![1.0, 0.5, 0.01],
            dv: vec![0.0, -0.1, -0.001],
            regime,
            tail_u: fit,
            tail_v: fit,
            tail_du: fit,
            tail_dv: fit,
            r_inner: 1.0,
            nodes_per_decade: 1,
            bisection_iters: 0,
            bracket_width: 0.0,
        };
        let err = compute_moments(&profile).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("L2"), "{message}");
        assert!(message.contains("L3"), "{message}");
        assert!(message.contains("Above"), "{message}");
    }
}

#[cfg(test)]
mod precheck_tests {
    use super::*;
    use crate::exponents::{classify_regime, CriticalPair};
    use approx::assert_relative_eq;

    #[test]
    fn above_regime_n8_all_finite() {
        let pair = CriticalPair::from_p(8, 1.4, 1.0, 1.0).unwrap();
        let flags = integrability_precheck(&classify_regime(&pair), &pair);
        assert_eq!(flags, [true; 7]);
    }

    #[test]
    fn above_regime_n4_flags_divergence() {
        // N = 4, p = q = 3 sits on the hyperbola; U, V ~ r^{-2}
        let pair = CriticalPair::new(4, 3.0, 3.0, 1.0, 1.0).unwrap();
        let flags = integrability_precheck(&classify_regime(&pair), &pair);
        // L2 power: 2(1-N) + 2 + N - 1 = 3 - N = -1, exactly the boundary
        assert!(!flags[1]);
        // L3 shares the same boundary power
        assert!(!flags[2]);
        assert!(flags[0]);
        assert!(flags[3]);
    }

    #[test]
    fn below_regime_n8_all_finite() {
        let pair = CriticalPair::from_p(8, 1.25, 1.0, 1.0).unwrap();
        let regime = classify_regime(&pair);
        assert_relative_eq!(regime.u_tail_exponent, -5.5, max_relative = 1e-14);
        let flags = integrability_precheck(&regime, &pair);
        assert_eq!(flags, [true; 7]);
        // L5 power lands exactly at 2 + u(q+1) + N - 1 = -9
        let powers = super::tail_powers(&regime, &pair);
        assert_relative_eq!(powers[4], -9.0, max_relative = 1e-12);
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        use std::f64::consts::PI;
        // omega_1 = 2 pi, omega_2 = 4 pi, omega_3 = 2 pi^2, omega_5 = pi^3,
        // omega_7 = pi^4 / 3
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(6), PI.powi(3), max_relative = 1e-15);
        assert_relative_eq!(sphere_area(8), PI.powi(4) / 3.0, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(10), PI.powi(5) / 12.0, max_relative = 1e-15);
    }
}
