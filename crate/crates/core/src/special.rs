//! The Gauss hypergeometric family that appears in the capture probability,
//! `₂F₁(1, b; 1 + b; −z)` with `b = 2/η`.
//!
//! Three representations cover `z ≥ 0`:
//!
//! - `z ≤ 0.5`: `b · Σ (−z)^k / (b + k)`, alternating and fast.
//! - `0.5 < z ≤ 16`: Pfaff transformation,
//!   `(1 + z)^{-1} · ₂F₁(1, 1; 1 + b; w)` with `w = z / (1 + z)`,
//!   a positive series `Σ k! / (1 + b)_k · w^k`.
//! - `z > 16`: inversion about infinity,
//!   `b·π/sin(πb) · z^{-b} − b · Σ_{k≥1} (−1)^{k+1} / ((k − b) z^k)`.
//!
//! The Pfaff series converges like `w^k`; with `w → 1` for interior nodes
//! (`z ~ 1e10`) it would need billions of terms, hence the third branch.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Below this the direct series is used.
pub const Z_SWITCH: f64 = 0.5;
/// Above this the inversion series is used.
pub const Z_INVERT: f64 = 16.0;
/// A series stops once a term falls below this fraction of the partial sum.
pub const SERIES_RTOL: f64 = 1e-14;
pub const MAX_TERMS: usize = 200_000;

/// Evaluates `₂F₁(1, 2/η; 1 + 2/η; −z)` for `η > 2`, `z ≥ 0`.
pub fn hyp2f1_capture(eta: f64, z: f64) -> Result<f64> {
    if !(eta > 2.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("path loss exponent must exceed 2, got {eta}")));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("argument must be finite and non-negative, got {z}")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let b = 2.0 / eta;
    let value = if z <= Z_SWITCH {
        direct_series(b, z)?
    } else if z <= Z_INVERT {
        pfaff_series(b, z)?
    } else {
        inversion_series(b, z)?
    };
    Ok(value.clamp(0.0, 1.0))
}

fn direct_series(b: f64, z: f64) -> Result<f64> {
    let mut power = 1.0;
    let mut sum = 0.0;
    for k in 0..MAX_TERMS {
        let term = power / (b + k as f64);
        sum += term;
        if term.abs() < SERIES_RTOL * sum.abs() {
            return Ok(b * sum);
        }
        power *= -z;
    }
    Err(not_converged("direct", z))
}

fn pfaff_series(b: f64, z: f64) -> Result<f64> {
    let w = z / (1.0 + z);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..MAX_TERMS {
        let k = k as f64;
        term *= (k + 1.0) * w / (b + 1.0 + k);
        sum += term;
        if term < SERIES_RTOL * sum {
            return Ok(sum / (1.0 + z));
        }
    }
    Err(not_converged("Pfaff", z))
}

fn inversion_series(b: f64, z: f64) -> Result<f64> {
    let leading = b * PI / (PI * b).sin() * z.powf(-b);
    let inv = 1.0 / z;
    let mut power = inv;
    let mut sign = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_TERMS {
        let term = sign * power / (k as f64 - b);
        sum += term;
        if term.abs() < SERIES_RTOL * sum.abs() || power == 0.0 {
            return Ok(leading - b * sum);
        }
        power *= inv;
        sign = -sign;
    }
    Err(not_converged("inversion", z))
}

fn not_converged(branch: &str, z: f64) -> Error {
    Error::Numeric(format!("{branch} series for 2F1 did not converge at z = {z}"))
}
