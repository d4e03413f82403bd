//! Constrained minimization of the energy on a mass sphere.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field3;
use crate::grid::Grid3;
use crate::spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxOptions {
    /// Stop once `‖Hu + λu‖₂ / (λ‖u‖₂)` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
    pub max_step: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 20_000, initial_step: 0.1, max_step: 3.0 }
    }
}

/// Result of [`relax`]: a constrained minimizer `ū` with
/// `−½Δū − (|x|⁻¹*ū²)ū = −λū`.
#[derive(Debug, Clone)]
pub struct RelaxReport {
    pub profile: Field3,
    pub multiplier: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Energy after every accepted step, starting with the initial guess.
    pub energy_history: Vec<f64>,
}

/// Everything the flow needs at one iterate.
/// Relative size of round-off in an energy evaluation.
const ENERGY_NOISE: f64 = 1e-13;

struct Probe {
    u: Field3,
    energy: f64,
    lambda: f64,
    grad: Field3,
    grad_norm: f64,
}

fn probe(sp: &Spectral, u: Field3) -> Result<Probe> {
    let grid = *u.grid();
    let h3 = grid.cell_volume();
    let mut c = sp.forward(&u);
    let mut kinetic = 0.0;
    for (idx, z) in c.iter_mut().enumerate() {
        let k2 = sp.k_squared(idx);
        kinetic += k2 * z.norm_sqr();
        *z *= 0.5 * k2;
    }
    kinetic *= 0.5 * h3;
    let minus_half_lap = sp.inverse(c, grid);
    let phi = sp.coulomb_convolve(&u.density())?;
    let mut hu = Field3::zeros(grid);
    let mut coupling = 0.0;
    for (((o, l), p), z) in hu.values_mut().iter_mut().zip(minus_half_lap.values()).zip(phi.values()).zip(u.values()) {
        let pz = p.re * z.re;
        coupling += pz * z.re;
        *o = Complex64::new(l.re - pz, 0.0);
    }
    coupling *= h3;
    let norm2 = u.norm_sqr();
    if !(norm2 > 0.0) || !hu.is_finite() {
        return Err(Error::Collapse);
    }
    // (Hu,u) = kinetic − ∫Φu²
    let lambda = -(kinetic - coupling) / norm2;
    let grad = hu.axpy(lambda, &u)?;
    let grad_norm = grad.norm() / (lambda.abs() * norm2.sqrt());
    Ok(Probe { u, energy: kinetic - 0.5 * coupling, lambda, grad, grad_norm })
}

fn normalize(u: &mut Field3, mass: f64) {
    let s = (mass / u.norm_sqr()).sqrt();
    u.values_mut().iter_mut().for_each(|z| *z = Complex64::new(z.re * s, 0.0));
}

/// Centered Gaussian of the given mass, with a width matched to the
/// expected size of the minimizer at that mass.
pub fn initial_guess(grid: Grid3, mass: f64) -> Field3 {
    let sigma = 2.0 * 2.5 / mass;
    let c = grid.center();
    let mut u = Field3::from_real_fn(grid, |x| {
        let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
        (-r2 / (2.0 * sigma * sigma)).exp()
    });
    normalize(&mut u, mass);
    u
}

/// Minimizes `𝓔` on `{‖u‖₂² = mass}` starting from a Gaussian.
pub fn relax(grid: Grid3, mass: f64, opts: &RelaxOptions) -> Result<RelaxReport> {
    if !(mass > 0.0) {
        return Err(Error::NonPositive { name: "mass", value: mass });
    }
    relax_from(initial_guess(grid, mass), mass, opts)
}

/// Preconditioned normalized gradient flow: `u ← N(u − τP(Hu + λu))` with
/// `P = (λ + ½|k|²)⁻¹`, `N` the rescaling onto the mass sphere and `τ`
/// halved until the energy decreases (Armijo). Once the decrease drops below
/// round-off the step is fixed at one.
pub fn relax_from(initial: Field3, mass: f64, opts: &RelaxOptions) -> Result<RelaxReport> {
    if !(mass > 0.0) {
        return Err(Error::NonPositive { name: "mass", value: mass });
    }
    if !(opts.tol > 0.0) {
        return Err(Error::NonPositive { name: "tol", value: opts.tol });
    }
    initial.ensure_finite()?;
    let grid = *initial.grid();
    let sp = Spectral::new(grid);
    let mut u = initial.real();
    normalize(&mut u, mass);
    let mut cur = probe(&sp, u)?;
    let mut history = vec![cur.energy];
    let mut tau = opts.initial_step;
    let mut iterations = 0;
    while cur.grad_norm > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence { iterations, residual: cur.grad_norm });
        }
        iterations += 1;
        let shift = cur.lambda.abs().max(1e-3);
        let dir = sp.apply_real_multiplier(&cur.grad, |idx| 1.0 / (shift + 0.5 * sp.k_squared(idx)))?;
        let slope = cur.grad.real_inner(&dir)?;
        loop {
            if tau.min(1.0) * slope < ENERGY_NOISE * cur.energy.abs() {
                // the energy no longer resolves the descent; near the minimizer
                // the preconditioned linearization has spectrum in [0, 1], so a
                // unit step contracts every mode
                let mut next = cur.u.axpy(-1.0, &dir)?;
                normalize(&mut next, mass);
                cur = probe(&sp, next)?;
                tau = tau.max(1.0);
                break;
            }
            let mut next = cur.u.axpy(-tau, &dir)?;
            normalize(&mut next, mass);
            let cand = probe(&sp, next)?;
            if cand.energy <= cur.energy - 1e-4 * tau * slope {
                cur = cand;
                tau = (tau * 1.1).min(opts.max_step);
                break;
            }
            tau *= 0.5;
        }
        history.push(cur.energy);
        log::debug!("relax {iterations}: E={:.15} λ={:.12} g={:.3e} τ={tau:.3}", cur.energy, cur.lambda, cur.grad_norm);
    }
    Ok(RelaxReport {
        profile: cur.u,
        multiplier: cur.lambda,
        iterations,
        gradient_norm: cur.grad_norm,
        energy_history: history,
    })
}
