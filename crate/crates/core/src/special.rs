//! Real Gamma function and helpers.
//!
//! `Γ` is evaluated through the Stirling series for `x ≥ 10` (written so that
//! no intermediate overflows before the true result does), upward recurrence
//! for `0 < x < 10`, and the reflection formula for negative arguments.

use std::f64::consts::PI;

use thiserror::Error;

/// Distance to a non-positive integer below which an argument is a pole.
pub const POLE_TOLERANCE: f64 = 1e-12;

const STIRLING_THRESHOLD: f64 = 10.0;

/// Largest argument for which `Γ(x)` is finite in `f64`.
const GAMMA_OVERFLOW: f64 = 171.624_376_956_302_7;

// B_{2j} / (2j (2j-1)), j = 1..8
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("argument {0} is a pole of the Gamma function")]
pub struct PoleArgument(pub f64);

/// `Γ(x)` for real `x` away from the poles `0, −1, −2, …`.
pub fn gamma(x: f64) -> Result<f64, PoleArgument> {
    if is_pole(x) {
        return Err(PoleArgument(x));
    }
    Ok(gamma_unchecked(x))
}

/// `1/Γ(x)`, which is entire; returns exactly zero at the poles of `Γ`.
pub fn rgamma(x: f64) -> f64 {
    if is_pole(x) {
        return 0.0;
    }
    if x < 0.5 {
        // 1/Γ(x) = sin(πx) Γ(1−x) / π
        return sinpi(x) * gamma_positive(1.0 - x) / PI;
    }
    if x > GAMMA_OVERFLOW {
        return 0.0;
    }
    1.0 / gamma_positive(x)
}

/// `ln |Γ(x)|` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x >= STIRLING_THRESHOLD {
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + stirling_series(x)
    } else {
        gamma_positive(x).ln()
    }
}

/// `sin(πx)` with exact argument reduction.
pub fn sinpi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    // r in [-1, 1], sin(πx) = sin(πr)
    let r = x - 2.0 * (x / 2.0).round();
    let (r, sign) = if r < 0.0 { (-r, -1.0) } else { (r, 1.0) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (PI * r).sin()
}

/// `cos(πx)` with exact argument reduction.
pub fn cospi(x: f64) -> f64 {
    sinpi(x + 0.5)
}

/// True when `x` lies within [`POLE_TOLERANCE`] of a non-positive integer.
pub fn is_pole(x: f64) -> bool {
    x <= POLE_TOLERANCE && (x - x.round()).abs() < POLE_TOLERANCE
}

fn gamma_unchecked(x: f64) -> f64 {
    if x <= 0.0 {
        return PI / (sinpi(x) * gamma_positive(1.0 - x));
    }
    gamma_positive(x)
}

fn gamma_positive(x: f64) -> f64 {
    if x > GAMMA_OVERFLOW {
        return f64::INFINITY;
    }
    if x.fract() == 0.0 {
        // exact for x ≤ 23
        return (2..x as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    if x >= STIRLING_THRESHOLD {
        // sqrt(2π) x^{x-1/2} e^{-x} e^{S(x)}, squared half-power avoids overflow
        let half = x.powf(0.5 * (x - 0.5)) * (-0.5 * x).exp();
        return (2.0 * PI).sqrt() * half * half * stirling_series(x).exp();
    }
    let shift = (STIRLING_THRESHOLD - x).ceil() as usize;
    let mut denom = 1.0;
    let mut y = x;
    for _ in 0..shift {
        denom *= y;
        y += 1.0;
    }
    gamma_positive(y) / denom
}

fn stirling_series(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for &c in STIRLING_COEFFS.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}
