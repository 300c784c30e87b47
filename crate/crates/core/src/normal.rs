//! Standard normal density, tail probability and hazard (inverse Mills ratio).

use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density.
pub fn pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
pub fn cdf(t: f64) -> f64 {
    0.5 * erfc(-t * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(t)`, evaluated without cancellation.
pub fn survival(t: f64) -> f64 {
    0.5 * erfc(t * FRAC_1_SQRT_2)
}

// Above this point the continued fraction converges in a handful of terms.
const CONTINUED_FRACTION_FROM: f64 = 5.0;

/// Hazard of the standard normal, `φ(t) / (1 - Φ(t))`.
///
/// This is the mean of a standard normal truncated below at `t`. For large `t`
/// both numerator and denominator underflow, so the Mills ratio is evaluated by
/// its continued fraction instead.
pub fn hazard(t: f64) -> f64 {
    if t < CONTINUED_FRACTION_FROM {
        return pdf(t) / survival(t);
    }
    // Mills ratio R(t) = 1/(t + 1/(t + 2/(t + 3/(t + ...)))), evaluated bottom-up.
    let mut tail = t;
    for k in (1..=60).rev() {
        tail = t + k as f64 / tail;
    }
    tail
}
