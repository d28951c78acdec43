//! Integer-shape incomplete gamma function.
//!
//! For a positive integer shape `s` the upper incomplete gamma function has the
//! finite closed form `Γ(s, x) = (s-1)! e^{-x} Σ_{k<s} x^k / k!`. Every
//! Nakagami term in the coverage expressions reduces to it, so no general
//! continued-fraction routine is needed.

use crate::error::{Error, Result};

/// Largest shape for which `(s-1)!` is finite in `f64`.
pub const MAX_SHAPE: u32 = 171;

/// `n!` as `f64`. Exact for `n <= 22`.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Regularized upper incomplete gamma `Q(s, x) = Γ(s, x) / Γ(s)` for integer
/// `s >= 1`, i.e. the Poisson tail `e^{-x} Σ_{k<s} x^k / k!`.
///
/// Stays finite for any `x >= 0`; for large `x` the terms are summed in log
/// space so that `x^k` never overflows.
pub fn regularized_upper_gamma_int(s: u32, x: f64) -> f64 {
    debug_assert!(s >= 1);
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < 700.0 {
        let mut term = (-x).exp();
        let mut sum = term;
        for k in 1..s {
            term *= x / k as f64;
            sum += term;
        }
        sum.min(1.0)
    } else {
        let lx = x.ln();
        (0..s)
            .map(|k| (k as f64 * lx - x - ln_factorial(k)).exp())
            .sum::<f64>()
            .min(1.0)
    }
}

/// Upper incomplete gamma `Γ(s, x)` for a positive integer shape.
///
/// Fails for `s == 0`, negative `x`, or shapes whose `(s-1)!` overflows.
pub fn upper_gamma_int(s: u32, x: f64) -> Result<f64> {
    if s == 0 {
        return Err(Error::domain("incomplete gamma shape must be >= 1"));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!("incomplete gamma argument {x} < 0")));
    }
    if s > MAX_SHAPE {
        return Err(Error::Overflow(format!("({s}-1)! exceeds f64 range")));
    }
    Ok(factorial(s - 1) * regularized_upper_gamma_int(s, x))
}
