//! Exponent arithmetic on the critical hyperbola and hypothesis checks.
//!
//! A pair (p, q) is critical for dimension N when 1/(p+1) + 1/(q+1) = (N-2)/N.
//! Everything downstream (decay rates, integrability, energy scalings) is a
//! function of where p sits relative to N/(N-2) and (N+2)/(N-2).

use crate::error::{Error, Result};
use crate::moments;
use serde::{Deserialize, Serialize};

/// Tolerance on the hyperbola residual |1/(p+1) + 1/(q+1) - (N-2)/N|.
pub const HYPERBOLA_TOL: f64 = 1e-12;

/// Problem parameters (N, p, q, alpha, beta) on the critical hyperbola,
/// ordered so that 1 < p <= (N+2)/(N-2) <= q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPair {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Set when the constructor swapped the input (p, q) to restore p <= q.
    #[serde(default)]
    pub reordered: bool,
}

impl CriticalPair {
    pub fn new(n: u32, p: f64, q: f64, alpha: f64, beta: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("dimension N = {n} must be >= 3")));
        }
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::Domain(format!(
                "alpha = {alpha} and beta = {beta} must be positive"
            )));
        }
        let (p, q, reordered) = if p > q { (q, p, true) } else { (p, q, false) };
        let nf = n as f64;
        let residual = (1.0 / (p + 1.0) + 1.0 / (q + 1.0) - (nf - 2.0) / nf).abs();
        if !(residual <= HYPERBOLA_TOL) {
            return Err(Error::Domain(format!(
                "(p, q) = ({p}, {q}) is off the critical hyperbola for N = {n}: residual {residual:.3e}"
            )));
        }
        if !(p > 1.0) {
            return Err(Error::Domain(format!("p = {p} must exceed 1")));
        }
        let crit = (nf + 2.0) / (nf - 2.0);
        if p > crit * (1.0 + 1e-10) || q < crit * (1.0 - 1e-10) {
            return Err(Error::Domain(format!(
                "ordering 1 < p <= (N+2)/(N-2) <= q violated: p = {p}, q = {q}, (N+2)/(N-2) = {crit}"
            )));
        }
        Ok(CriticalPair { n, p, q, alpha, beta, reordered })
    }

    /// Builds the pair from (N, p) alone, filling q from the hyperbola.
    pub fn from_p(n: u32, p: f64, alpha: f64, beta: f64) -> Result<Self> {
        let q = conjugate_exponent(n, p)?;
        Self::new(n, p, q, alpha, beta)
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// The symmetric point (N+2)/(N-2) of the hyperbola.
    pub fn critical_exponent(&self) -> f64 {
        (self.dim() + 2.0) / (self.dim() - 2.0)
    }
}

/// Classification of p against N/(N-2), with the far-field power laws it implies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeTag {
    Above,
    Critical,
    Below,
}

/// Far-field behavior of the ground state: U ~ r^u (times log r in the
/// critical regime), V ~ r^v, with derivatives one power lower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRegime {
    pub tag: RegimeTag,
    pub u_tail_exponent: f64,
    pub v_tail_exponent: f64,
    /// True only in the critical regime, and only for U.
    pub log_factor: bool,
}

impl DecayRegime {
    pub fn u_deriv_exponent(&self) -> f64 {
        self.u_tail_exponent - 1.0
    }

    pub fn v_deriv_exponent(&self) -> f64 {
        self.v_tail_exponent - 1.0
    }
}

/// Which existence hypothesis the pair satisfies, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremCondition {
    /// N/(N-2) < p < (N+2)/(N-2) with N >= 8.
    MidRangeP,
    /// p = (N+2)/(N-2) with N >= 10.
    CriticalP,
    /// 1 < p < N/(N-2) with N >= 8.
    LowRangeP,
}

impl std::fmt::Display for TheoremCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TheoremCondition::MidRangeP => write!(f, "N/(N-2) < p < (N+2)/(N-2) with N >= 8"),
            TheoremCondition::CriticalP => write!(f, "p = (N+2)/(N-2) with N >= 10"),
            TheoremCondition::LowRangeP => write!(f, "1 < p < N/(N-2) with N >= 8"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub condition: Option<TheoremCondition>,
    pub regime: DecayRegime,
    /// Finiteness of the moment constants L1..L7, from tail-exponent arithmetic.
    pub li_finite: [bool; 7],
}

/// Solves 1/(q+1) = (N-2)/N - 1/(p+1) for q.
pub fn conjugate_exponent(n: u32, p: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension N = {n} must be >= 3")));
    }
    let nf = n as f64;
    let crit = (nf + 2.0) / (nf - 2.0);
    if p == crit {
        return Ok(crit);
    }
    let denom = (nf - 2.0) / nf - 1.0 / (p + 1.0);
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "p = {p} is too small for N = {n}: 1/(q+1) = {denom:.3e} is not positive"
        )));
    }
    Ok(1.0 / denom - 1.0)
}

pub fn classify_regime(pair: &CriticalPair) -> DecayRegime {
    let nf = pair.dim();
    let threshold = nf / (nf - 2.0);
    let two_minus_n = 2.0 - nf;
    if (pair.p - threshold).abs() <= 1e-12 * threshold {
        DecayRegime {
            tag: RegimeTag::Critical,
            u_tail_exponent: two_minus_n,
            v_tail_exponent: two_minus_n,
            log_factor: true,
        }
    } else if pair.p > threshold {
        DecayRegime {
            tag: RegimeTag::Above,
            u_tail_exponent: two_minus_n,
            v_tail_exponent: two_minus_n,
            log_factor: false,
        }
    } else {
        DecayRegime {
            tag: RegimeTag::Below,
            u_tail_exponent: 2.0 - (nf - 2.0) * pair.p,
            v_tail_exponent: two_minus_n,
            log_factor: false,
        }
    }
}

pub fn check_theorem_hypotheses(pair: &CriticalPair) -> HypothesisReport {
    let nf = pair.dim();
    let threshold = nf / (nf - 2.0);
    let crit = pair.critical_exponent();
    let at_crit = (pair.p - crit).abs() <= 1e-12 * crit;
    let at_threshold = (pair.p - threshold).abs() <= 1e-12 * threshold;

    let condition = if at_crit && pair.n >= 10 {
        Some(TheoremCondition::CriticalP)
    } else if !at_crit && !at_threshold && pair.p > threshold && pair.p < crit && pair.n >= 8 {
        Some(TheoremCondition::MidRangeP)
    } else if !at_threshold && pair.p < threshold && pair.n >= 8 {
        Some(TheoremCondition::LowRangeP)
    } else {
        None
    };

    let regime = classify_regime(pair);
    let li_finite = moments::integrability_precheck(&regime, pair);
    HypothesisReport { condition, regime, li_finite }
}

/// Dual Lebesgue exponents: 1/p* = p/(p+1) - 1/N and 1/q* = q/(q+1) - 1/N.
pub fn dual_exponents(pair: &CriticalPair) -> Result<(f64, f64)> {
    let nf = pair.dim();
    let inv_p_star = pair.p / (pair.p + 1.0) - 1.0 / nf;
    let inv_q_star = pair.q / (pair.q + 1.0) - 1.0 / nf;
    if !(inv_p_star > 0.0) || !(inv_q_star > 0.0) {
        return Err(Error::Domain(format!(
            "dual exponents undefined: 1/p* = {inv_p_star:.3e}, 1/q* = {inv_q_star:.3e}"
        )));
    }
    Ok((1.0 / inv_p_star, 1.0 / inv_q_star))
}
