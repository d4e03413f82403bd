//! Energies, norms, mass, momentum and the classical Hamiltonian.
//!
//! Functions taking an `ε` act on a field sampled in physical (lab) variables;
//! the rescaled frame used by the dynamics is related to the lab frame by
//! scaling the grid with [`Grid3::scaled`].

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field3;
use crate::potential::ExternalPotential;
use crate::spectral::Spectral;

/// Boundary amplitude (relative to the maximum) above which the truncated
/// Coulomb kernel no longer yields free-space values.
pub const TAIL_WARNING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential_external: f64,
    pub hartree: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(kinetic: f64, potential_external: f64, hartree: f64) -> Self {
        Self { kinetic, potential_external, hartree, total: kinetic + potential_external + hartree }
    }
}

/// Warns once per process, then only at debug level.
fn warn_on_tail(phi: &Field3) {
    static WARNED: AtomicBool = AtomicBool::new(false);
    let tail = phi.boundary_tail();
    if tail > TAIL_WARNING {
        let level = if WARNED.swap(true, Ordering::Relaxed) { log::Level::Debug } else { log::Level::Warn };
        log::log!(level, "boundary tail {tail:.2e} exceeds {TAIL_WARNING:e}; Coulomb truncation is not exact");
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive { name: "eps", value: eps })
    }
}

/// `(½‖∇φ‖², −½∫(|x|⁻¹*|φ|²)|φ|²)`.
pub fn energy_parts(sp: &Spectral, phi: &Field3) -> Result<(f64, f64)> {
    warn_on_tail(phi);
    let kinetic = 0.5 * sp.dirichlet_energy(phi)?;
    let rho = phi.density();
    let pot = sp.coulomb_convolve(&rho)?;
    Ok((kinetic, -0.5 * pot.real_inner(&rho)?))
}

/// `𝓔(φ) = ½∫|∇φ|² − ½∬|φ(x)|²|φ(y)|²/|x−y|`.
pub fn energy(sp: &Spectral, phi: &Field3) -> Result<f64> {
    let (k, h) = energy_parts(sp, phi)?;
    Ok(k + h)
}

/// `I(φ) = 𝓔(φ) + ‖φ‖₂²`.
pub fn action(sp: &Spectral, phi: &Field3) -> Result<f64> {
    Ok(energy(sp, phi)? + phi.norm_sqr())
}

/// Real H¹ pairing `Re[(u,v) + ½(∇u,∇v)]`.
pub fn h1_inner(sp: &Spectral, u: &Field3, v: &Field3) -> Result<f64> {
    Ok(u.real_inner(v)? + 0.5 * sp.dirichlet_pairing(u, v)?)
}

/// `(‖φ‖₂² + ½‖∇φ‖₂²)^{1/2}`.
pub fn h1_norm(sp: &Spectral, phi: &Field3) -> Result<f64> {
    Ok((phi.norm_sqr() + 0.5 * sp.dirichlet_energy(phi)?).sqrt())
}

/// `E_ε[u] = (1/2ε)∫|∇u|² + ε⁻³∫V|u|² − (1/2ε⁵)∬|u(x)|²|u(y)|²/|x−y|`.
pub fn semiclassical_energy(
    sp: &Spectral,
    u: &Field3,
    eps: f64,
    potential: &dyn ExternalPotential,
) -> Result<EnergyBreakdown> {
    check_eps(eps)?;
    let (kin, hartree) = energy_parts(sp, u)?;
    let grid = u.grid();
    let ext: f64 = u
        .values()
        .iter()
        .enumerate()
        .map(|(idx, z)| potential.value(grid.position(idx)) * z.norm_sqr())
        .sum::<f64>()
        * grid.cell_volume();
    Ok(EnergyBreakdown::new(kin / eps, ext / eps.powi(3), hartree / eps.powi(5)))
}

/// `∫p^ε` with `p^ε = ε⁻² Im(ū∇u)`.
pub fn momentum(sp: &Spectral, u: &Field3, eps: f64) -> Result<[f64; 3]> {
    check_eps(eps)?;
    let c = sp.forward(u);
    let mut p = [0.0; 3];
    for (idx, z) in c.iter().enumerate() {
        let k = sp.derivative_wavevector(idx);
        let w = z.norm_sqr();
        for j in 0..3 {
            p[j] += k[j] * w;
        }
    }
    let scale = u.grid().cell_volume() / (eps * eps);
    Ok(p.map(|x| x * scale))
}

/// `ε⁻³‖u‖₂²`.
pub fn mass(u: &Field3, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(u.norm_sqr() / eps.powi(3))
}

/// `((1/ε)‖∇u‖₂² + (1/ε³)‖u‖₂²)^{1/2}`.
pub fn h_eps_norm(sp: &Spectral, u: &Field3, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok((sp.dirichlet_energy(u)? / eps + u.norm_sqr() / eps.powi(3)).sqrt())
}

/// A point particle of mass `m` moving in `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub t: f64,
    pub x: [f64; 3],
    pub v: [f64; 3],
    /// `½m|v|² + mV(x)`.
    pub hamiltonian: f64,
}

impl TrajectoryState {
    pub fn new(t: f64, x: [f64; 3], v: [f64; 3], mass: f64, potential: &dyn ExternalPotential) -> Self {
        let hamiltonian = classical_hamiltonian(x, v, mass, potential);
        Self { t, x, v, hamiltonian }
    }
}

pub fn classical_hamiltonian(x: [f64; 3], v: [f64; 3], mass: f64, potential: &dyn ExternalPotential) -> f64 {
    0.5 * mass * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) + mass * potential.value(x)
}
