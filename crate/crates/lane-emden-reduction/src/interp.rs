//! Cubic Hermite interpolation on a single segment, with an optional
//! monotonicity clamp for data known to be strictly monotone.

/// Value of the cubic Hermite interpolant on [x0, x1] with endpoint values
/// f0, f1 and endpoint slopes d0, d1, evaluated at x.
pub fn hermite(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1
}

/// Derivative of the cubic Hermite interpolant at x.
pub fn hermite_deriv(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (dh00 * f0 + dh01 * f1) / h + dh10 * d0 + dh11 * d1
}

/// Hermite evaluation with endpoint slopes limited so the interpolant cannot
/// overshoot strictly monotone data (Fritsch-Carlson bound |d| <= 3|s| with
/// the secant's sign). With accurate slopes on a resolved grid the clamp is
/// inactive and the result equals plain `hermite`.
pub fn hermite_monotone(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let s = (f1 - f0) / (x1 - x0);
    let clamp = |d: f64| -> f64 {
        if s == 0.0 {
            0.0
        } else if d * s <= 0.0 {
            0.0
        } else if d.abs() > 3.0 * s.abs() {
            3.0 * s
        } else {
            d
        }
    };
    hermite(x0, x1, f0, f1, clamp(d0), clamp(d1), x)
}
