//! Numerical core for concentration analysis of critical Lane-Emden systems.
//!
//! The crate solves the radial ground state of
//!
//! ```text
//!   -Delta U = V^p,   -Delta V = U^q   on R^N,
//! ```
//!
//! with (p, q) on the critical hyperbola 1/(p+1) + 1/(q+1) = (N-2)/N, computes
//! the moment constants that drive the reduced-energy expansion, evaluates the
//! reduced peak functional on curved backgrounds (metric jets, weight fields,
//! warped products), predicts concentration rates, and validates the energy
//! expansion by direct quadrature of the bubble functional.

pub mod error;
pub mod exponents;
pub mod fd;
pub mod interp;
pub mod linalg;
pub mod moments;
pub mod ode;
pub mod profile;
pub mod quadrature;

pub use error::{Error, Result};
pub use exponents::{
    check_theorem_hypotheses, classify_regime, conjugate_exponent, dual_exponents, CriticalPair,
    DecayRegime, HypothesisReport, RegimeTag, TheoremCondition,
};
