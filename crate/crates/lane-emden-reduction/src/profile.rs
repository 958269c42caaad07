//! Ground-state profiles of the radial system
//!
//! ```text
//! -U'' - (N-1)/r U' = V^p,   -V'' - (N-1)/r V' = U^q,   U, V > 0,
//! ```
//!
//! normalized by U(0) = 1. The free amplitude V(0) is pinned down by
//! bisection on the shooting map: raising V(0) makes U more concave near the
//! origin, so overshooting amplitudes drive U through zero while
//! undershooting ones let U flatten and V collapse instead. The ground state
//! sits on the boundary between the two behaviors.
//!
//! Profiles are stored on a geometric radial grid with exact first
//! derivatives at the nodes, evaluated off-node by cubic Hermite pieces, and
//! extended past the grid by fitted power-law tails.

use crate::error::{Error, Result};
use crate::exponents::{classify_regime, CriticalPair, DecayRegime};
use crate::fd;
use crate::interp;
use crate::ode::Dopri5;
use serde::{Deserialize, Serialize};

pub const PROFILE_FORMAT_VERSION: u32 = 1;

/// Controls for the shooting solve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// Outer radius the integration aims for.
    pub r_max: f64,
    /// Innermost geometric grid node; the series start hands over here.
    pub r_inner: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_bisection_iters: u32,
    /// Grid values below this fraction of a component's maximum are dropped:
    /// past that point the stored numbers are dominated by the residual
    /// amplitude mismatch left over from bisection, not by the solution.
    pub positivity_floor: f64,
    pub nodes_per_decade: u32,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            r_max: 1e4,
            r_inner: 1e-3,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_bisection_iters: 200,
            positivity_floor: 1e-14,
            nodes_per_decade: 40,
        }
    }
}

/// Least-squares fit of a tail window on log-log axes.
///
/// The asymptotic exponent is approached slowly whenever the driven and
/// homogeneous decay rates are close, so the model optionally carries a
/// finite-radius correction term with the theoretically known gap exponent;
/// the slope itself is always a free parameter.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailFit {
    /// Fitted asymptotic exponent s in f ~ r^s (times log r when
    /// `log_corrected`).
    pub slope: f64,
    /// Intercept of the fit, i.e. ln of the fitted amplitude.
    pub log_amplitude: f64,
    /// Relative size of the finite-radius correction term: the model value
    /// is the power law times `1 + corr_amp * r^{-corr_exponent}`, or times
    /// `ln r + corr_amp` for the borderline regime.
    pub corr_amp: f64,
    /// Gap exponent of the correction term; zero when the model has none.
    pub corr_exponent: f64,
    /// Coefficient of determination of the fit.
    pub r_squared: f64,
    /// True when the model carries the extra log r factor of the borderline
    /// decay regime.
    pub log_corrected: bool,
    /// Radial window the fit used.
    pub window: (f64, f64),
}

impl TailFit {
    /// Model value at radius r. The fit was taken on |f|. The model is
    /// `a r^s (1 + c r^{-gap})` in the power regimes and
    /// `a r^s (ln r + c)` in the borderline regime.
    pub fn value(&self, r: f64) -> f64 {
        let body = (self.log_amplitude + self.slope * r.ln()).exp();
        if self.log_corrected {
            body * (r.ln() + self.corr_amp).max(0.1)
        } else if self.corr_exponent > 0.0 {
            body * (1.0 + self.corr_amp * r.powf(-self.corr_exponent))
        } else {
            body
        }
    }

    /// d(ln f)/dr of the model.
    pub fn log_deriv(&self, r: f64) -> f64 {
        let mut d = self.slope / r;
        if self.log_corrected {
            d += 1.0 / (r * (r.ln() + self.corr_amp).max(0.1));
        } else if self.corr_exponent > 0.0 {
            let g = self.corr_amp * r.powf(-self.corr_exponent);
            d -= self.corr_exponent * g / (r * (1.0 + g));
        }
        d
    }

    /// The same model for f scaled to lam^amp_power * f(lam * r).
    fn rescaled_by(&self, lam: f64, amp_power: f64) -> TailFit {
        let corr_amp = if self.log_corrected {
            self.corr_amp + lam.ln()
        } else {
            self.corr_amp * lam.powf(-self.corr_exponent)
        };
        TailFit {
            log_amplitude: self.log_amplitude + (amp_power + self.slope) * lam.ln(),
            corr_amp,
            window: (self.window.0 / lam, self.window.1 / lam),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum TailModel {
    /// f = a r^s.
    Plain,
    /// f = a r^s (1 + c r^{-gap}); the driven and homogeneous decay rates
    /// differ by `gap`, so the leading exponent emerges only as r^{-gap}
    /// fades, and in reachable windows the correction is order one.
    PowerCorrection(f64),
    /// f = a r^s (ln r + c), for the borderline regime where the tail
    /// carries a logarithm.
    LogCritical,
}

/// Values of the profile pair and their radial derivatives at one radius.
#[derive(Debug, Clone, Copy)]
pub struct ProfileValues {
    pub u: f64,
    pub du: f64,
    pub v: f64,
    pub dv: f64,
}

/// Record of how the scaling family was pinned down. The solver always
/// produces U(0) = 1; profiles rescaled afterwards carry the actual origin
/// value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Normalization {
    pub u_at_origin: f64,
}

/// A solved ground-state pair on its radial grid, with U(0) = 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub pair: CriticalPair,
    /// Central amplitude V(0) found by bisection.
    pub v0: f64,
    /// Radii: 0, then a geometric progression from `r_inner`.
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    pub regime: DecayRegime,
    pub tail_u: TailFit,
    pub tail_v: TailFit,
    pub tail_du: TailFit,
    pub tail_dv: TailFit,
    pub r_inner: f64,
    pub nodes_per_decade: u32,
    pub bisection_iters: u32,
    /// Relative width of the final amplitude bracket.
    pub bracket_width: f64,
}

/// On-disk wrapper with enough metadata to detect stale cache entries.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProfileFile {
    pub format_version: u32,
    pub input_hash: String,
    pub profile: RadialProfile,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Probe {
    /// U reached zero first: the trial amplitude is too large.
    CrossU,
    /// V reached zero first: the trial amplitude is too small.
    CrossV,
    /// Neither component crossed before `r_max`.
    Clear,
}

struct Shooter<'a> {
    n: f64,
    p: f64,
    q: f64,
    opts: &'a ShootingOptions,
    solver: Dopri5,
}

impl Shooter<'_> {
    fn rhs(&self, r: f64, y: &[f64; 4]) -> [f64; 4] {
        let drag = (self.n - 1.0) / r;
        [
            y[1],
            -drag * y[1] - y[2].max(0.0).powf(self.p),
            y[3],
            -drag * y[3] - y[0].max(0.0).powf(self.q),
        ]
    }

    /// Quartic series start: U = 1 + u2 r^2 + u4 r^4, V = b + v2 r^2 + v4 r^4.
    fn series_state(&self, b: f64, r: f64) -> [f64; 4] {
        let (n, p, q) = (self.n, self.p, self.q);
        let u2 = -b.powf(p) / (2.0 * n);
        let v2 = -1.0 / (2.0 * n);
        let u4 = p * b.powf(p - 1.0) / (8.0 * n * (n + 2.0));
        let v4 = q * b.powf(p) / (8.0 * n * (n + 2.0));
        let r2 = r * r;
        [
            1.0 + u2 * r2 + u4 * r2 * r2,
            2.0 * u2 * r + 4.0 * u4 * r2 * r,
            b + v2 * r2 + v4 * r2 * r2,
            2.0 * v2 * r + 4.0 * v4 * r2 * r,
        ]
    }

    /// Start radius small enough that the quartic series is accurate for
    /// this amplitude; large amplitudes shrink the series' radius of
    /// validity like b^{-p/2}.
    fn series_radius(&self, b: f64) -> f64 {
        let u2 = b.powf(self.p) / (2.0 * self.n);
        let v2_rel = 1.0 / (2.0 * self.n * b);
        let cap = 0.01 / u2.max(v2_rel).sqrt();
        self.opts.r_inner.min(cap)
    }

    fn probe(&self, b: f64) -> Result<Probe> {
        let r0 = self.series_radius(b);
        let y0 = self.series_state(b, r0);
        let mut crossed = Probe::Clear;
        self.solver.integrate(
            |r, y| self.rhs(r, y),
            r0,
            y0,
            self.opts.r_max,
            r0 * 0.1,
            |_, y: &[f64; 4]| {
                if y[0] <= 0.0 {
                    crossed = Probe::CrossU;
                    true
                } else if y[2] <= 0.0 {
                    crossed = Probe::CrossV;
                    true
                } else {
                    false
                }
            },
        )?;
        Ok(crossed)
    }

    /// Find amplitudes lo < hi with V collapsing at lo and U collapsing at
    /// hi. Returns equal endpoints when a trial amplitude runs clear.
    fn bracket(&self) -> Result<(f64, f64)> {
        let mut b = 1.0;
        match self.probe(b)? {
            Probe::Clear => Ok((b, b)),
            Probe::CrossV => {
                let mut lo = b;
                loop {
                    b *= 2.0;
                    if b > 1e6 {
                        return Err(Error::Solver(
                            "no upper shooting bracket below amplitude 1e6".into(),
                        ));
                    }
                    match self.probe(b)? {
                        Probe::CrossU => return Ok((lo, b)),
                        Probe::Clear => return Ok((b, b)),
                        Probe::CrossV => lo = b,
                    }
                }
            }
            Probe::CrossU => {
                let mut hi = b;
                loop {
                    b *= 0.5;
                    if b < 1e-6 {
                        return Err(Error::Solver(
                            "no lower shooting bracket above amplitude 1e-6".into(),
                        ));
                    }
                    match self.probe(b)? {
                        Probe::CrossV => return Ok((b, hi)),
                        Probe::Clear => return Ok((b, b)),
                        Probe::CrossU => hi = b,
                    }
                }
            }
        }
    }
}

/// Solve for the ground-state pair of the given critical exponents.
pub fn solve_ground_state(pair: &CriticalPair, opts: &ShootingOptions) -> Result<RadialProfile> {
    if !(opts.r_inner > 0.0 && opts.r_max > 10.0 * opts.r_inner) {
        return Err(Error::Config(
            "shooting radii must satisfy 0 < r_inner and r_max > 10 r_inner".into(),
        ));
    }
    if opts.nodes_per_decade < 8 {
        return Err(Error::Config("need at least 8 grid nodes per decade".into()));
    }
    let shooter = Shooter {
        n: f64::from(pair.n),
        p: pair.p,
        q: pair.q,
        opts,
        solver: Dopri5 {
            rel_tol: opts.rel_tol,
            abs_tol: opts.abs_tol,
        },
    };

    let (mut lo, mut hi) = shooter.bracket()?;
    let mut iters = 0u32;
    while hi - lo > 1e-15 * hi && iters < opts.max_bisection_iters {
        let mid = 0.5 * (lo + hi);
        match shooter.probe(mid)? {
            Probe::CrossV => lo = mid,
            Probe::CrossU => hi = mid,
            Probe::Clear => {
                lo = mid;
                hi = mid;
            }
        }
        iters += 1;
    }
    let b = 0.5 * (lo + hi);
    let bracket_width = if b > 0.0 { (hi - lo) / b } else { 0.0 };

    // Record the grid by rerunning the exact trajectory the bisection
    // certified (same start, same step sequence) and sampling nodes from the
    // integrator's continuous extension. Re-integrating node to node would
    // accumulate different truncation error, for which the selected
    // amplitude is no longer the balance point, and the leftover
    // non-decaying component would pollute the tail.
    let npd = opts.nodes_per_decade;
    let decades = (opts.r_max / opts.r_inner).log10();
    let n_geo = (decades * f64::from(npd)).round() as usize;
    let mut grid = Vec::with_capacity(n_geo + 2);
    grid.push(0.0);
    for i in 0..=n_geo {
        grid.push(opts.r_inner * 10f64.powf(i as f64 / f64::from(npd)));
    }
    *grid.last_mut().unwrap() = opts.r_max;

    let mut u = vec![1.0];
    let mut du = vec![0.0];
    let mut v = vec![b];
    let mut dv = vec![0.0];
    let push_state = |s: &[f64; 4], u: &mut Vec<f64>, du: &mut Vec<f64>, v: &mut Vec<f64>, dv: &mut Vec<f64>| {
        u.push(s[0]);
        du.push(s[1]);
        v.push(s[2]);
        dv.push(s[3]);
    };

    let r_start = shooter.series_radius(b);
    let mut next = 1usize;
    while next < grid.len() && grid[next] <= r_start {
        let s = shooter.series_state(b, grid[next]);
        push_state(&s, &mut u, &mut du, &mut v, &mut dv);
        next += 1;
    }
    let y_start = shooter.series_state(b, r_start);
    shooter.solver.integrate_observed(
        |r, y| shooter.rhs(r, y),
        r_start,
        y_start,
        opts.r_max,
        r_start * 0.1,
        |dense, t_new, y_new| {
            while next < grid.len() && grid[next] <= t_new {
                let s = if grid[next] == t_new {
                    *y_new
                } else {
                    dense.eval(grid[next])
                };
                push_state(&s, &mut u, &mut du, &mut v, &mut dv);
                next += 1;
            }
            false
        },
    )?;
    if next != grid.len() {
        return Err(Error::Solver(format!(
            "profile fill stopped with {} grid nodes unvisited",
            grid.len() - next
        )));
    }
    if !u.iter().chain(&du).chain(&v).chain(&dv).all(|x| x.is_finite()) {
        return Err(Error::Solver("profile fill lost finiteness".into()));
    }

    // drop nodes where the bisection's leftover amplitude error dominates
    let u_floor = opts.positivity_floor;
    let v_floor = opts.positivity_floor * b;
    let mut keep = grid.len();
    for k in 1..grid.len() {
        if u[k] < u_floor || v[k] < v_floor {
            keep = k;
            break;
        }
    }
    grid.truncate(keep);
    u.truncate(keep);
    du.truncate(keep);
    v.truncate(keep);
    dv.truncate(keep);
    if keep < 2 * npd as usize {
        return Err(Error::Solver(format!(
            "profile positive region too short: {keep} nodes survive the floor"
        )));
    }

    let regime = classify_regime(pair);

    // The bisection leftover and the integration error both deposit a
    // residue on the non-decaying homogeneous mode, so far enough out the
    // stored values flatten toward a small constant and stop carrying tail
    // information. Detect the takeover as the first place where the local
    // log-log slope of U or V rises above 0.6 of its far-field rate (the
    // residue is then two thirds of the signal), and end the fit window a
    // factor three below, where the residue is back under a percent.
    let scan_from = (1..grid.len())
        .find(|&k| u[k] <= 1e-3 * u[0] && v[k] <= 1e-3 * v[0])
        .unwrap_or(grid.len());
    let mut r_flat = f64::INFINITY;
    for k in scan_from..grid.len() - 1 {
        let dx = (grid[k + 1] / grid[k]).ln();
        let su = (u[k + 1] / u[k]).ln() / dx;
        let sv = (v[k + 1] / v[k]).ln() / dx;
        if su > 0.6 * regime.u_tail_exponent || sv > 0.6 * regime.v_tail_exponent {
            r_flat = grid[k];
            break;
        }
    }

    // The fit window also stops two orders of magnitude above the retention
    // floor: the last kept nodes are still usable data but carry a visible
    // fraction of the bisection's leftover amplitude error, which would bias
    // a log-log fit.
    let guard_u = 1e2 * u_floor;
    let guard_v = 1e2 * v_floor;
    let fit_last = (1..grid.len())
        .rev()
        .find(|&k| u[k] >= guard_u && v[k] >= guard_v && grid[k] <= r_flat / 3.0)
        .unwrap_or(grid.len() - 1);
    let r_fit = grid[fit_last];
    // The low end stays out of the near field twice over: at least 1.5
    // decades below the end, and past the point where both components have
    // decayed by three orders of magnitude.
    let r_deep = grid.get(scan_from).copied().unwrap_or(grid[1]);
    let w_lo = (r_fit / 10f64.powf(1.5)).max(r_deep).max(grid[1]);
    let mut first = grid.iter().position(|&r| r >= w_lo).unwrap_or(1).max(1);
    if fit_last + 1 - first < 24 {
        first = (fit_last + 1).saturating_sub(60).max(1);
    }
    let window = first..fit_last + 1;
    let rs = &grid[window.clone()];

    // V's corrections are steep in every regime; U's are governed by the
    // gap between the homogeneous and driven decay rates.
    let nf = f64::from(pair.n);
    let u_gap = ((nf - 2.0) * pair.p - nf).abs();
    let u_model = if regime.log_factor {
        TailModel::LogCritical
    } else if u_gap >= 0.15 {
        TailModel::PowerCorrection(u_gap)
    } else {
        TailModel::Plain
    };
    let fit = |vals: &[f64], model: TailModel| -> Result<TailFit> {
        let ys: Vec<f64> = vals[window.clone()].iter().map(|&y| y.abs()).collect();
        fit_tail(rs, &ys, model)
    };
    let tail_u = fit(&u, u_model)?;
    let tail_v = fit(&v, TailModel::Plain)?;
    let tail_du = fit(&du, u_model)?;
    let tail_dv = fit(&dv, TailModel::Plain)?;

    for (name, f, expected) in [
        ("U", &tail_u, regime.u_tail_exponent),
        ("V", &tail_v, regime.v_tail_exponent),
    ] {
        if f.r_squared < 0.999 {
            return Err(Error::Solver(format!(
                "tail of {name} is not a clean power law (r^2 = {:.6})",
                f.r_squared
            )));
        }
        if (f.slope - expected).abs() > 0.02 * expected.abs() {
            return Err(Error::Solver(format!(
                "fitted tail exponent of {name} is {:.4}, expected {expected:.4} from the decay regime",
                f.slope
            )));
        }
    }

    Ok(RadialProfile {
        pair: pair.clone(),
        v0: b,
        grid,
        u,
        du,
        v,
        dv,
        regime,
        tail_u,
        tail_v,
        tail_du,
        tail_dv,
        r_inner: opts.r_inner,
        nodes_per_decade: npd,
        bisection_iters: iters,
        bracket_width,
    })
}

/// Plain log-log regression: ln|f| = A + s ln r.
fn fit_log_linear(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    (intercept, slope)
}

/// Fit the tail window. The power regimes use the two-term structure
/// a r^s + b r^{s-gap} (the correction term is not small anywhere in
/// reachable windows, so it is fit in linear space, not as a logarithmic
/// perturbation); the borderline regime uses a r^s (ln r + c). Both are
/// linear in the amplitudes for fixed s, leaving a one-dimensional search
/// over the exponent.
fn fit_tail(rs: &[f64], vals: &[f64], model: TailModel) -> Result<TailFit> {
    let xs: Vec<f64> = rs.iter().map(|&r| r.ln()).collect();
    let ys: Vec<f64> = vals.iter().map(|&f| f.max(f64::MIN_POSITIVE).ln()).collect();
    let (int0, slope0) = fit_log_linear(&xs, &ys);
    let log_corrected = matches!(model, TailModel::LogCritical);

    // second basis weight relative to r^s
    let w2 = |r: f64| -> f64 {
        match model {
            TailModel::Plain => 0.0,
            TailModel::PowerCorrection(gap) => r.powf(-gap),
            TailModel::LogCritical => 1.0,
        }
    };
    // first basis weight: ln r in the borderline regime, else 1
    let w1 = |r: f64| -> f64 {
        if log_corrected {
            r.ln()
        } else {
            1.0
        }
    };

    let fit_amplitudes = |s: f64| -> Option<(f64, f64, f64)> {
        // relative least squares: minimize sum ((a f1 + b f2)/f - 1)^2
        let mut a11 = 0.0;
        let mut a12 = 0.0;
        let mut a22 = 0.0;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for (&r, &f) in rs.iter().zip(vals) {
            let base = (s * r.ln()).exp() / f.max(f64::MIN_POSITIVE);
            let c1 = base * w1(r);
            let c2 = base * w2(r);
            a11 += c1 * c1;
            a12 += c1 * c2;
            a22 += c2 * c2;
            b1 += c1;
            b2 += c2;
        }
        let (a, b) = if matches!(model, TailModel::Plain) {
            (b1 / a11, 0.0)
        } else {
            let det = a11 * a22 - a12 * a12;
            if det.abs() < 1e-14 * a11 * a22.max(1e-300) {
                (b1 / a11, 0.0)
            } else {
                ((b1 * a22 - b2 * a12) / det, (b2 * a11 - b1 * a12) / det)
            }
        };
        if !(a.is_finite() && b.is_finite()) || a <= 0.0 {
            return None;
        }
        let mut sse = 0.0;
        for (&r, &f) in rs.iter().zip(vals) {
            let m = (s * r.ln()).exp() * (a * w1(r) + b * w2(r));
            let e = m / f.max(f64::MIN_POSITIVE) - 1.0;
            sse += e * e;
        }
        Some((sse, a, b))
    };

    // golden-section search for the exponent around the log-log estimate
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = slope0 - 1.0;
    let mut hi = slope0 + 1.0;
    let sse_at = |s: f64| fit_amplitudes(s).map_or(f64::INFINITY, |t| t.0);
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let mut f1 = sse_at(x1);
    let mut f2 = sse_at(x2);
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = sse_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = sse_at(x2);
        }
    }
    let slope = 0.5 * (lo + hi);
    let (a, b, int_used, slope_used) = match fit_amplitudes(slope) {
        Some((_, a, b)) => (a, b, a.ln(), slope),
        None => (int0.exp(), 0.0, int0, slope0),
    };

    let predict_ln = |r: f64| -> f64 {
        slope_used * r.ln() + (a * w1(r) + b * w2(r)).max(f64::MIN_POSITIVE).ln()
    };
    let m = xs.len() as f64;
    let y_mean = ys.iter().sum::<f64>() / m;
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let ss_res: f64 = rs
        .iter()
        .zip(&ys)
        .map(|(&r, &y)| {
            let e = y - predict_ln(r);
            e * e
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    Ok(TailFit {
        slope: slope_used,
        log_amplitude: int_used,
        corr_amp: b / a,
        corr_exponent: match model {
            TailModel::PowerCorrection(gap) => gap,
            _ => 0.0,
        },
        r_squared,
        log_corrected,
        window: (rs[0], rs[rs.len() - 1]),
    })
}

impl RadialProfile {
    pub fn r_last(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    fn n_f64(&self) -> f64 {
        f64::from(self.pair.n)
    }

    /// U'' at node k from the equation itself.
    fn u_second(&self, k: usize) -> f64 {
        if k == 0 {
            -self.v[0].max(0.0).powf(self.pair.p) / self.n_f64()
        } else {
            -(self.n_f64() - 1.0) / self.grid[k] * self.du[k]
                - self.v[k].max(0.0).powf(self.pair.p)
        }
    }

    fn v_second(&self, k: usize) -> f64 {
        if k == 0 {
            -self.u[0].max(0.0).powf(self.pair.q) / self.n_f64()
        } else {
            -(self.n_f64() - 1.0) / self.grid[k] * self.dv[k]
                - self.u[k].max(0.0).powf(self.pair.q)
        }
    }

    pub fn normalization(&self) -> Normalization {
        Normalization {
            u_at_origin: self.u[0],
        }
    }

    /// The same solution represented at scale `lam`: the system is invariant
    /// under (U, V)(r) -> (lam^{N/(q+1)} U(lam r), lam^{N/(p+1)} V(lam r)),
    /// so this walks along the scaling family without re-solving. Useful for
    /// checking which downstream quantities are scale-invariant.
    pub fn rescaled(&self, lam: f64) -> RadialProfile {
        let n = self.n_f64();
        let a = n / (self.pair.q + 1.0);
        let b = n / (self.pair.p + 1.0);
        let (la, lb) = (lam.powf(a), lam.powf(b));
        RadialProfile {
            pair: self.pair.clone(),
            v0: lb * self.v0,
            grid: self.grid.iter().map(|&r| r / lam).collect(),
            u: self.u.iter().map(|&x| la * x).collect(),
            du: self.du.iter().map(|&x| la * lam * x).collect(),
            v: self.v.iter().map(|&x| lb * x).collect(),
            dv: self.dv.iter().map(|&x| lb * lam * x).collect(),
            regime: self.regime,
            tail_u: self.tail_u.rescaled_by(lam, a),
            tail_v: self.tail_v.rescaled_by(lam, b),
            tail_du: self.tail_du.rescaled_by(lam, a + 1.0),
            tail_dv: self.tail_dv.rescaled_by(lam, b + 1.0),
            r_inner: self.r_inner / lam,
            nodes_per_decade: self.nodes_per_decade,
            bisection_iters: self.bisection_iters,
            bracket_width: self.bracket_width,
        }
    }

    /// Radius where evaluation hands over from grid data to the fitted tail
    /// models: the end of the clean fit window. Grid nodes beyond it are
    /// kept as data but carry a visible fraction of the bisection's
    /// leftover amplitude error.
    pub fn tail_start(&self) -> f64 {
        self.tail_u.window.1
    }

    /// Fitted tail models, with derivatives taken from the value models so
    /// the returned pair stays calculus-consistent.
    fn tail_values(&self, r: f64) -> ProfileValues {
        let u = self.tail_u.value(r);
        let v = self.tail_v.value(r);
        ProfileValues {
            u,
            du: u * self.tail_u.log_deriv(r),
            v,
            dv: v * self.tail_v.log_deriv(r),
        }
    }

    /// Interpolated profile values at any radius >= 0. Inside the clean part
    /// of the grid this is cubic Hermite with the stored derivatives (and
    /// curvatures taken from the equation); from `tail_start` on, the fitted
    /// tail models take over.
    pub fn eval(&self, r: f64) -> ProfileValues {
        if r <= 0.0 {
            return ProfileValues {
                u: self.u[0],
                du: 0.0,
                v: self.v[0],
                dv: 0.0,
            };
        }
        let last = self.grid.len() - 1;
        if r >= self.tail_start().min(self.grid[last]) {
            return self.tail_values(r);
        }
        let mut i = if r < self.grid[1] {
            0
        } else {
            let ratio = 10f64.powf(1.0 / f64::from(self.nodes_per_decade));
            1 + ((r / self.grid[1]).ln() / ratio.ln()).floor() as usize
        };
        i = i.min(last - 1);
        while i > 0 && r < self.grid[i] {
            i -= 1;
        }
        while i + 1 < last && r > self.grid[i + 1] {
            i += 1;
        }
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = |f0: f64, f1: f64, d0: f64, d1: f64| -> f64 {
            interp::hermite_monotone(x0, x1, f0, f1, d0, d1, r)
        };
        ProfileValues {
            u: h(self.u[i], self.u[i + 1], self.du[i], self.du[i + 1]),
            v: h(self.v[i], self.v[i + 1], self.dv[i], self.dv[i + 1]),
            du: interp::hermite(
                x0,
                x1,
                self.du[i],
                self.du[i + 1],
                self.u_second(i),
                self.u_second(i + 1),
                r,
            ),
            dv: interp::hermite(
                x0,
                x1,
                self.dv[i],
                self.dv[i + 1],
                self.v_second(i),
                self.v_second(i + 1),
                r,
            ),
        }
    }

    /// Largest normalized residual of the radial system over the grid,
    /// checked with 9-point finite differences in ln r applied to the
    /// once-divided slopes G = U'/r, for which the equation reads
    /// N G + dG/d(ln r) = -V^p. Residuals are measured against the local
    /// source term, floored at 1e-3 of its global maximum so the far tail
    /// is compared against a meaningful scale.
    pub fn ode_residual_max(&self) -> f64 {
        let half = 4usize;
        let n = self.n_f64();
        let rs = &self.grid[1..];
        let m = rs.len();
        if m < 2 * half + 1 {
            return f64::NAN;
        }
        let gu: Vec<f64> = (0..m).map(|k| self.du[k + 1] / rs[k]).collect();
        let gv: Vec<f64> = (0..m).map(|k| self.dv[k + 1] / rs[k]).collect();
        let src_u: Vec<f64> = (0..m)
            .map(|k| self.v[k + 1].max(0.0).powf(self.pair.p))
            .collect();
        let src_v: Vec<f64> = (0..m)
            .map(|k| self.u[k + 1].max(0.0).powf(self.pair.q))
            .collect();
        let floor_u = 1e-3 * src_u.iter().cloned().fold(0.0, f64::max);
        let floor_v = 1e-3 * src_v.iter().cloned().fold(0.0, f64::max);
        let mut worst = 0.0f64;
        for k in half..m - half {
            let (gu_x, _) = fd::log_derivs_at(rs, &gu, k, half);
            let (gv_x, _) = fd::log_derivs_at(rs, &gv, k, half);
            let res_u = (n * gu[k] + gu_x + src_u[k]).abs() / src_u[k].max(floor_u);
            let res_v = (n * gv[k] + gv_x + src_v[k]).abs() / src_v[k].max(floor_v);
            worst = worst.max(res_u).max(res_v);
        }
        worst
    }

    pub fn input_hash(&self) -> String {
        let pair = &self.pair;
        let key = format!(
            "{} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {} {}",
            pair.n,
            pair.p,
            pair.q,
            pair.alpha,
            pair.beta,
            self.v0,
            self.grid.len(),
            self.nodes_per_decade,
        );
        format!("{:016x}", fnv1a64(key.as_bytes()))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ProfileFile {
            format_version: PROFILE_FORMAT_VERSION,
            input_hash: self.input_hash(),
            profile: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<RadialProfile> {
        let file: ProfileFile = serde_json::from_str(text)?;
        if file.format_version != PROFILE_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "profile format version {} (expected {})",
                file.format_version, PROFILE_FORMAT_VERSION
            )));
        }
        if file.input_hash != file.profile.input_hash() {
            return Err(Error::Config("profile hash mismatch; stale cache".into()));
        }
        Ok(file.profile)
    }
}

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// For N = 6, p = q = 2 the ground state is exactly
    /// U = V = (1 + r^2/24)^{-2}.
    fn exact_u(r: f64) -> f64 {
        (1.0 + r * r / 24.0).powi(-2)
    }

    fn exact_du(r: f64) -> f64 {
        -(r / 6.0) * (1.0 + r * r / 24.0).powi(-3)
    }

    fn n6_profile() -> RadialProfile {
        let pair = CriticalPair::new(6, 2.0, 2.0, 1.0, 1.0).unwrap();
        solve_ground_state(&pair, &ShootingOptions::default()).unwrap()
    }

    #[test]
    fn closed_form_amplitude_recovered() {
        let prof = n6_profile();
        assert_relative_eq!(prof.v0, 1.0, epsilon = 1e-8);
        assert!(prof.bracket_width <= 1e-14);
    }

    #[test]
    fn closed_form_profile_on_nodes() {
        let prof = n6_profile();
        let mut worst = 0.0f64;
        for (k, &r) in prof.grid.iter().enumerate() {
            worst = worst.max((prof.u[k] - exact_u(r)).abs());
            worst = worst.max((prof.v[k] - exact_u(r)).abs());
            worst = worst.max((prof.du[k] - exact_du(r)).abs());
        }
        assert!(worst < 1e-7, "node error {worst:.3e}");
    }

    #[test]
    fn closed_form_profile_between_nodes() {
        let prof = n6_profile();
        let mut worst = 0.0f64;
        for k in 0..4000 {
            let r = 1e-3 * 10f64.powf(7.0 * k as f64 / 4000.0) * 1.013;
            if r >= prof.r_last() {
                break;
            }
            let vals = prof.eval(r);
            worst = worst.max((vals.u - exact_u(r)).abs());
            worst = worst.max((vals.du - exact_du(r)).abs());
        }
        let origin = prof.eval(0.5e-3);
        worst = worst.max((origin.u - exact_u(0.5e-3)).abs());
        assert!(worst < 1e-6, "interpolation error {worst:.3e}");
    }

    #[test]
    fn tail_slopes_symmetric_case() {
        let prof = n6_profile();
        assert_relative_eq!(prof.tail_u.slope, -4.0, epsilon = 0.05);
        assert_relative_eq!(prof.tail_v.slope, -4.0, epsilon = 0.05);
        assert_relative_eq!(prof.tail_du.slope, -5.0, epsilon = 0.05);
        assert_relative_eq!(prof.tail_dv.slope, -5.0, epsilon = 0.05);
        assert!(prof.tail_u.r_squared > 0.999);
    }

    #[test]
    fn tail_slopes_fast_decay_pair() {
        let pair = CriticalPair::from_p(8, 1.4, 1.0, 1.0).unwrap();
        let prof = solve_ground_state(&pair, &ShootingOptions::default()).unwrap();
        assert_relative_eq!(prof.tail_u.slope, -6.0, epsilon = 0.1);
        assert_relative_eq!(prof.tail_v.slope, -6.0, epsilon = 0.1);
        assert_relative_eq!(prof.tail_du.slope, -7.0, epsilon = 0.1);
        assert_relative_eq!(prof.tail_dv.slope, -7.0, epsilon = 0.1);
    }

    #[test]
    fn tail_slopes_slow_decay_pair() {
        let pair = CriticalPair::from_p(8, 1.25, 1.0, 1.0).unwrap();
        let prof = solve_ground_state(&pair, &ShootingOptions::default()).unwrap();
        // U decays like r^{2 - (N-2)p} = r^{-5.5}, V like r^{2-N}
        assert_relative_eq!(prof.tail_u.slope, -5.5, epsilon = 0.1);
        assert_relative_eq!(prof.tail_v.slope, -6.0, epsilon = 0.1);
        assert_relative_eq!(prof.tail_du.slope, -6.5, epsilon = 0.1);
    }

    #[test]
    fn borderline_pair_gets_log_corrected_fit() {
        let pair = CriticalPair::from_p(8, 4.0 / 3.0, 1.0, 1.0).unwrap();
        let prof = solve_ground_state(&pair, &ShootingOptions::default()).unwrap();
        assert!(prof.tail_u.log_corrected);
        assert!(!prof.tail_v.log_corrected);
        assert_relative_eq!(prof.tail_u.slope, -6.0, epsilon = 0.1);
        assert_relative_eq!(prof.tail_v.slope, -6.0, epsilon = 0.1);
    }

    #[test]
    fn equation_residual_is_small() {
        let prof = n6_profile();
        let res = prof.ode_residual_max();
        assert!(res < 1e-6, "residual {res:.3e}");
    }

    #[test]
    fn eval_matches_nodes_and_extends_past_grid() {
        let prof = n6_profile();
        for k in [0usize, 1, 50, 150, 230] {
            assert!(prof.grid[k] < prof.tail_start());
            let vals = prof.eval(prof.grid[k]);
            assert_relative_eq!(vals.u, prof.u[k], max_relative = 1e-12);
            assert_relative_eq!(vals.v, prof.v[k], max_relative = 1e-12);
        }
        let r_out = prof.r_last() * 3.0;
        let vals = prof.eval(r_out);
        assert_relative_eq!(vals.u, exact_u(r_out), max_relative = 0.05);
        assert!(vals.du < 0.0);
    }

    #[test]
    fn rescaling_walks_the_scaling_family() {
        let prof = n6_profile();
        let lam = 1.7;
        let scaled = prof.rescaled(lam);
        // N = 6, p = q = 2: both amplitude powers are N/(p+1) = 2
        let amp = lam * lam;
        for r in [0.0, 0.05, 3.0, 47.0, 2000.0] {
            let base = prof.eval(lam * r);
            let s = scaled.eval(r);
            assert_relative_eq!(s.u, amp * base.u, max_relative = 1e-10);
            assert_relative_eq!(s.v, amp * base.v, max_relative = 1e-10);
            assert_relative_eq!(s.du, amp * lam * base.du, max_relative = 1e-9);
            assert_relative_eq!(s.dv, amp * lam * base.dv, max_relative = 1e-9);
        }
        assert_relative_eq!(scaled.normalization().u_at_origin, amp, max_relative = 1e-12);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let prof = n6_profile();
        let text = prof.to_json().unwrap();
        let back = RadialProfile::from_json(&text).unwrap();
        assert_eq!(prof.grid.len(), back.grid.len());
        for r in [0.0, 0.37, 12.0, 900.0] {
            let a = prof.eval(r);
            let b = back.eval(r);
            assert_eq!(a.u, b.u);
            assert_eq!(a.du, b.du);
            assert_eq!(a.v, b.v);
            assert_eq!(a.dv, b.dv);
        }
    }

    #[test]
    fn version_and_hash_guards_fire() {
        let prof = n6_profile();
        let text = prof.to_json().unwrap();
        let bad_version = text.replacen("\"format_version\": 1", "\"format_version\": 99", 1);
        assert!(RadialProfile::from_json(&bad_version).is_err());
        let bad_hash = text.replacen("\"input_hash\": \"", "\"input_hash\": \"0", 1);
        assert!(RadialProfile::from_json(&bad_hash).is_err());
    }
}
