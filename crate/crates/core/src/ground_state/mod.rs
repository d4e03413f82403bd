//! The ground state `r`: the radial positive solution of
//! `−½Δr + r − (|x|⁻¹*r²)r = 0`.

mod decay;
mod relax;
mod shooting;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use decay::{decay_report, decay_stability, fit_decay, DecayReport, DEFAULT_WINDOW};
pub use relax::{initial_guess, relax, relax_from, RelaxOptions, RelaxReport};
pub use shooting::{radial_shooting_oracle, RadialSolution};

use crate::error::{Error, Result};
use crate::field::Field3;
use crate::grid::Grid3;
use crate::observables;
use crate::spectral::{resample_dilated, Spectral};

/// Radial samples averaged over the lattice points at each exact distance
/// from the center.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RadialProfile {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
}

impl RadialProfile {
    /// Strictly decreasing while the values stay above `floor·r(0)`.
    pub fn is_decreasing_above(&self, floor: f64) -> bool {
        let cut = floor * self.r[0];
        self.r.windows(2).take_while(|w| w[1] > cut).all(|w| w[1] < w[0])
    }
}

/// Shell averages over points with `|x − c| ≤ 0.45L` (further out the
/// periodic images show), and the largest deviation of a sample from its
/// shell average within `|x − c| ≤ L/4`, relative to the peak.
pub fn radial_profile(f: &Field3) -> (RadialProfile, f64) {
    let grid = f.grid();
    let n = grid.n() as i64;
    let half = n / 2;
    let mut shells: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for idx in 0..grid.len() {
        let (i, j, k) = grid.unravel(idx);
        let d = [i as i64 - half, j as i64 - half, k as i64 - half];
        let q = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        if 100 * q <= 81 * half * half {
            shells.entry(q).or_default().push(f.values()[idx].re);
        }
    }
    let h = grid.spacing();
    let mut profile = RadialProfile::default();
    let mut dev: f64 = 0.0;
    for (q, vals) in &shells {
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        if 4 * q <= half * half {
            dev = vals.iter().fold(dev, |d, v| d.max((v - mean).abs()));
        }
        profile.s.push((*q as f64).sqrt() * h);
        profile.r.push(mean);
    }
    let peak = profile.r[0].abs().max(f64::MIN_POSITIVE);
    (profile, dev / peak)
}

/// `−½Δr + r − (|x|⁻¹*r²)r`.
pub fn residual(sp: &Spectral, r: &Field3) -> Result<Field3> {
    let lap = sp.laplacian(r)?;
    let phi = sp.coulomb_convolve(&r.density())?;
    let phir = phi.mul(r)?;
    lap.scale(-0.5).add(r)?.sub(&phir)
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub field: Field3,
    pub radial_profile: RadialProfile,
    /// `‖r‖₂²`.
    pub mass: f64,
    /// `e` in `−½Δr − Φ_r r = e r`, the Rayleigh quotient; `−1` at the fixed point.
    pub multiplier: f64,
    /// `‖−½Δr + r − Φ_r r‖₂`.
    pub residual_l2: f64,
    /// `𝓔(r)`.
    pub energy: f64,
    /// Largest deviation from the shell averages, relative to `r(0)`.
    pub radial_asymmetry: f64,
}

impl GroundState {
    /// Derives every diagnostic from a real, centered field.
    pub fn from_field(field: Field3) -> Result<Self> {
        field.ensure_finite()?;
        let field = field.real();
        let sp = Spectral::new(*field.grid());
        let mass = field.norm_sqr();
        if !(mass > 0.0) {
            return Err(Error::Collapse);
        }
        let res = residual(&sp, &field)?;
        // (Hr, r) = (res, r) − ‖r‖²
        let multiplier = (res.real_inner(&field)? - mass) / mass;
        let (radial_profile, radial_asymmetry) = radial_profile(&field);
        let energy = observables::energy(&sp, &field)?;
        Ok(Self { residual_l2: res.norm(), field, radial_profile, mass, multiplier, energy, radial_asymmetry })
    }

    pub fn grid(&self) -> &Grid3 {
        self.field.grid()
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual_l2 / self.mass.sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.radial_profile.r[0]
    }
}

/// `r(x) = λ⁻¹ū(λ^{−1/2}x)` evaluated on the profile's own grid.
pub fn rescale_to_ground_state(profile: &Field3, multiplier: f64) -> Result<GroundState> {
    rescale_onto(profile, multiplier, profile.grid())
}

/// `r(x) = λ⁻¹ū(λ^{−1/2}x)` by band-limited interpolation onto `target`.
pub fn rescale_onto(profile: &Field3, multiplier: f64, target: &Grid3) -> Result<GroundState> {
    if !(multiplier > 0.0) {
        return Err(Error::NonPositive { name: "multiplier", value: multiplier });
    }
    let field = if multiplier == 1.0 && target == profile.grid() {
        profile.clone()
    } else {
        resample_dilated(profile, target, multiplier.powf(-0.5)).scale(1.0 / multiplier)
    };
    GroundState::from_field(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundStateOptions {
    pub relax: RelaxOptions,
    /// Mass of the first relaxation; the fixed point follows from the
    /// measured multiplier.
    pub seed_mass: f64,
    /// Stop once `|λ − 1|` is below this.
    pub multiplier_tol: f64,
    pub max_outer: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self { relax: RelaxOptions::default(), seed_mass: 2.5, multiplier_tol: 1e-10, max_outer: 8 }
    }
}

/// Result of the fixed-point mass search.
#[derive(Debug, Clone)]
pub struct GroundStateRun {
    pub state: GroundState,
    /// `(mass, λ)` of every relaxation, in order.
    pub mass_history: Vec<(f64, f64)>,
    pub iterations: usize,
}

/// Relaxes at the seed mass, rescales, and iterates `M ← M/√λ(M)` (the
/// rescaled mass) until the multiplier is 1.
pub fn compute_ground_state(grid: Grid3, opts: &GroundStateOptions) -> Result<GroundStateRun> {
    let mut rep = relax(grid, opts.seed_mass, &opts.relax)?;
    let mut history = vec![(opts.seed_mass, rep.multiplier)];
    let mut iterations = rep.iterations;
    for _ in 0..opts.max_outer {
        if (rep.multiplier - 1.0).abs() <= opts.multiplier_tol {
            let state = GroundState::from_field(rep.profile)?;
            return Ok(GroundStateRun { state, mass_history: history, iterations });
        }
        let guess = rescale_onto(&rep.profile, rep.multiplier, &grid)?;
        rep = relax_from(guess.field, guess.mass, &opts.relax)?;
        history.push((guess.mass, rep.multiplier));
        iterations += rep.iterations;
    }
    Err(Error::NoConvergence { iterations: opts.max_outer, residual: (rep.multiplier - 1.0).abs() })
}
