//! Asymptotic decay of the radial profile.

use serde::{Deserialize, Serialize};

use super::{GroundState, RadialProfile};
use crate::error::{Error, Result};

/// Fit of `log r₀ = log λ₀ + β log s − κ s` on a window of radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// Prefactor `λ₀` of `r₀(s) ≈ λ₀ s^β e^{−κs}`.
    pub lambda0_estimate: f64,
    /// `−κ`, the limit of `r₀′/r₀`.
    pub slope_estimate: f64,
    pub power_estimate: f64,
    pub fit_window: [f64; 2],
}

/// Default fit window, inside the resolved region of a box of side 32.
pub const DEFAULT_WINDOW: [f64; 2] = [4.0, 10.0];

/// Samples below this fraction of `r(0)` are treated as round-off.
const FLOOR: f64 = 1e-11;

pub fn decay_report(state: &GroundState) -> Result<DecayReport> {
    fit_decay(&state.radial_profile, DEFAULT_WINDOW)
}

pub fn fit_decay(profile: &RadialProfile, window: [f64; 2]) -> Result<DecayReport> {
    let [s1, s2] = window;
    let peak = profile.r.first().copied().unwrap_or(0.0);
    let mut rows = Vec::new();
    for (&s, &r) in profile.s.iter().zip(&profile.r) {
        if s < s1 || s > s2 {
            continue;
        }
        if !(r > FLOOR * peak) {
            return Err(Error::FitWindow(s1, s2));
        }
        rows.push((s, r.ln()));
    }
    if rows.len() < 3 || profile.s.last().is_none_or(|&last| last < s2) {
        return Err(Error::FitWindow(s1, s2));
    }
    let a = nalgebra::DMatrix::from_fn(rows.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => rows[i].0.ln(),
        _ => -rows[i].0,
    });
    let b = nalgebra::DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(DecayReport {
        lambda0_estimate: coef[0].exp(),
        slope_estimate: -coef[2],
        power_estimate: coef[1],
        fit_window: window,
    })
}

/// Largest relative change of `λ₀` when the window is moved by `±shift`
/// of its own position.
pub fn decay_stability(profile: &RadialProfile, window: [f64; 2], shift: f64) -> Result<f64> {
    let base = fit_decay(profile, window)?.lambda0_estimate;
    let mut worst: f64 = 0.0;
    for f in [1.0 - shift, 1.0 + shift] {
        let moved = fit_decay(profile, [window[0] * f, window[1] * f])?.lambda0_estimate;
        worst = worst.max((moved - base).abs() / base);
    }
    Ok(worst)
}
