//! Angle helpers shared by the gauge, model and fieldmap modules.
//!
//! Every phase reported by this crate lives in the half-open interval
//! (−π, π]. Comparisons between phases are made modulo 2π.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Absolute tolerance (radians) for mod-2π phase equality.
pub const PHASE_TOLERANCE: f64 = 1e-9;

/// Folds an angle into (−π, π].
pub fn wrap(angle: f64) -> f64 {
    // adding 0.0 turns −0.0 into +0.0
    let r = angle.rem_euclid(TAU) + 0.0;
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Distance between two angles on the circle, in [0, π].
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}

pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    circular_distance(a, b) <= tol
}

/// Parses `pi`, `-pi/2`, `3pi/4`, `0.25`, `-2*pi/3` and similar forms.
pub fn parse(text: &str) -> Result<f64> {
    let err = || Error::InvalidPhase(text.to_string());
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let lower = s.to_ascii_lowercase();
    if let Ok(v) = lower.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(err()) };
    }
    let (sign, body) = match lower.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, lower.strip_prefix('+').unwrap_or(&lower)),
    };
    let (numer, denom) = match body.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (body, None),
    };
    let coeff_text = numer.strip_suffix("pi").ok_or_else(err)?;
    let coeff_text = coeff_text.strip_suffix('*').unwrap_or(coeff_text);
    let coeff = if coeff_text.is_empty() {
        1.0
    } else {
        coeff_text.parse::<f64>().map_err(|_| err())?
    };
    let denom = match denom {
        Some(d) => d.parse::<f64>().map_err(|_| err())?,
        None => 1.0,
    };
    if denom == 0.0 || !coeff.is_finite() || !denom.is_finite() {
        return Err(err());
    }
    Ok(sign * coeff * PI / denom)
}
