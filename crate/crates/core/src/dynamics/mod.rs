//! Semiclassical evolution `iε∂ₜu = −(ε²/2)Δu + Vu − ε⁻²(|x|⁻¹*|u|²)u`.
//!
//! The substitution `w(s, y) = u(εs, εy)` gives the ε-free equation
//! `i∂ₛw = −½Δw + V(εy)w − (|y|⁻¹*|w|²)w` with initial datum
//! `w(0, y) = r(y − x₀/ε) e^{i v₀·y}`: the convolution picks up `ε³` from the
//! volume element and `ε⁻¹` from the kernel, cancelling the `ε⁻²` prefactor.
//! In these variables
//!
//! - `ε⁻³‖u‖₂² = ‖w‖₂²`,
//! - `E_ε = ½‖∇w‖₂² + ∫V(εy)|w|² − ½∫(|y|⁻¹*|w|²)|w|²`,
//! - `∫p^ε = ∫Im(w̄∇w)`, and `d/dt = ε⁻¹ d/ds`,
//! - `‖f‖²_{𝓗_ε} = ‖∇_y f̃‖₂² + ‖f̃‖₂²` with `f̃(y) = f(εy)`,
//! - `‖∇u‖₂/√ε = ‖∇w‖₂`.
//!
//! The lab-frame field is the same sample array on the grid scaled by `ε`.

mod series;
mod trajectory;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field3;
use crate::grid::Grid3;
use crate::ground_state::GroundState;
use crate::modulation::Modulation;
use crate::observables::{EnergyBreakdown, TrajectoryState};
use crate::potential::{ExternalPotential, Potential};
use crate::spectral::Spectral;

pub use series::{
    energy_expansion_check, identity_checks, run, run_evolution, scaling_report, scaling_study, EnergyExpansion,
    IdentityReport,
    ObservableRecord, ObservableSeries, ScalingReport, ScalingRun,
};
pub use trajectory::{hamiltonian_drift, newton_trajectory, trajectory_at};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    pub eps: f64,
    pub potential: Potential,
    pub x0: [f64; 3],
    pub v0: [f64; 3],
    /// Physical final time.
    pub t_final: f64,
    /// Step in the rescaled time `s = t/ε`.
    pub dt: f64,
    /// Points per axis of the rescaled window.
    pub n: usize,
    /// Side of the rescaled window.
    pub box_length: f64,
    /// Follow the particle with lattice-step translations of the window.
    pub recenter: bool,
    pub recenter_every: usize,
    /// Steps between recorded observables.
    pub output_stride: usize,
    /// Record the modulation frame of the moving-frame field at each output.
    pub track_modulation: bool,
    /// Drop the Hartree term (free Schrödinger flow), for testing.
    pub nonlinear: bool,
    /// Step of the particle integrator, in physical time.
    pub dt_newton: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            potential: Potential::default(),
            x0: [2.0, 0.0, 0.0],
            v0: [0.0; 3],
            t_final: 2.0,
            dt: 5e-3,
            n: 96,
            box_length: 32.0,
            recenter: true,
            recenter_every: 20,
            output_stride: 100,
            track_modulation: true,
            nonlinear: true,
            dt_newton: 1e-4,
        }
    }
}

impl EvolutionConfig {
    pub fn grid(&self) -> Result<Grid3> {
        Grid3::new(self.n, self.box_length)
    }

    /// Number of steps and the step size adjusted to land on `T/ε`.
    pub fn steps(&self) -> (usize, f64) {
        let s_final = self.t_final / self.eps;
        let steps = (s_final / self.dt).round().max(1.0) as usize;
        (steps, s_final / steps as f64)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("eps", self.eps), ("dt", self.dt), ("dt_newton", self.dt_newton)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositive { name, value });
            }
        }
        if !(self.t_final >= 0.0) {
            return Err(Error::InvalidArgument(format!("final time {}", self.t_final)));
        }
        if self.output_stride == 0 || self.recenter_every == 0 {
            return Err(Error::InvalidArgument("strides must be positive".into()));
        }
        let h = self.box_length / self.n as f64;
        if self.dt > h * h {
            log::warn!("dt = {} exceeds h² = {:.3e}; kinetic phases are under-resolved", self.dt, h * h);
        }
        self.grid().map(|_| ())
    }
}

/// Strang-split solver for the rescaled equation, with an optional
/// co-moving window.
#[derive(Debug, Clone)]
pub struct Evolution {
    config: EvolutionConfig,
    sp: Spectral,
    w: Field3,
    /// `|y|⁻¹*|w|²`; `|w|` is invariant under the potential phase, so one
    /// convolution per step suffices.
    hartree: Field3,
    v_ext: Vec<f64>,
    kinetic: Option<(f64, Vec<Complex64>)>,
    s: f64,
    steps_taken: usize,
    /// Window center in lattice units.
    center_index: [i64; 3],
    trajectory: Vec<TrajectoryState>,
    ground: Field3,
    ground_mass: f64,
    ground_energy: f64,
    modulation: Modulation,
}

impl Evolution {
    /// Sets up the initial datum `r(y − x₀/ε)e^{iv₀·y}` on a window centered
    /// at the lattice point nearest to `x₀/ε`.
    pub fn new(state: &GroundState, config: EvolutionConfig) -> Result<Self> {
        config.validate()?;
        let base = config.grid()?;
        if !base.same_lattice(state.grid()) {
            return Err(Error::GridMismatch);
        }
        let eps = config.eps;
        let h = base.spacing();
        let y0 = config.x0.map(|x| x / eps);
        let center_index = y0.map(|y| (y / h).round() as i64);
        let ground_mass = state.field.norm_sqr();
        let (steps, _) = config.steps();
        let t_end = steps as f64 * config.steps().1 * eps;
        let trajectory =
            newton_trajectory(&config.potential, config.x0, config.v0, ground_mass, config.dt_newton, t_end)?;
        if !config.recenter {
            // the soliton must stay in the inner half of the window
            let c = center_index.map(|i| i as f64 * h);
            let reach = trajectory
                .iter()
                .map(|p| (0..3).map(|j| (p.x[j] / eps - c[j]).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if reach > 0.25 * config.box_length {
                return Err(Error::OutsideWindow(format!(
                    "particle moves {reach:.3} rescaled units from the window center, beyond L/4 = {:.3}",
                    0.25 * config.box_length
                )));
            }
        }
        let sp = Spectral::new(base);
        let mut evo = Self {
            sp,
            w: Field3::zeros(base),
            hartree: Field3::zeros(base),
            v_ext: Vec::new(),
            kinetic: None,
            s: 0.0,
            steps_taken: 0,
            center_index,
            trajectory,
            ground: state.field.clone(),
            ground_mass,
            ground_energy: state.energy,
            modulation: Modulation::new(state)?,
            config,
        };
        let w0 = evo.ansatz(y0, evo.config.v0)?;
        evo.install(w0)?;
        Ok(evo)
    }

    fn window(&self) -> Grid3 {
        let h = self.sp.grid().spacing();
        self.sp.grid().recentered(self.center_index.map(|i| i as f64 * h))
    }

    /// `r(y − y_c) e^{iv·y}` on the current window.
    pub fn ansatz(&self, y_c: [f64; 3], v: [f64; 3]) -> Result<Field3> {
        let grid = self.window();
        let c = grid.center();
        let offset = [y_c[0] - c[0], y_c[1] - c[1], y_c[2] - c[2]];
        let r = self.sp.translate(&self.ground, offset)?.with_grid(grid)?;
        Ok(r.map_with_position(|y, z| z * Complex64::from_polar(1.0, v[0] * y[0] + v[1] * y[1] + v[2] * y[2])))
    }

    fn install(&mut self, w: Field3) -> Result<()> {
        w.ensure_finite()?;
        let grid = *w.grid();
        let eps = self.config.eps;
        let pot = &self.config.potential;
        self.v_ext = (0..grid.len()).map(|idx| pot.value(grid.position(idx).map(|y| eps * y))).collect();
        self.hartree = if self.config.nonlinear {
            self.sp.coulomb_convolve(&w.density())?.with_grid(grid)?
        } else {
            Field3::zeros(grid)
        };
        self.w = w;
        Ok(())
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn spectral(&self) -> &Spectral {
        &self.sp
    }

    pub fn field(&self) -> &Field3 {
        &self.w
    }

    /// Rescaled time.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Physical time `εs`.
    pub fn t(&self) -> f64 {
        self.config.eps * self.s
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn trajectory(&self) -> &[TrajectoryState] {
        &self.trajectory
    }

    pub fn ground_mass(&self) -> f64 {
        self.ground_mass
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    pub fn modulation(&self) -> &Modulation {
        &self.modulation
    }

    /// The same samples as `u^ε(εs, ·)` on the window scaled by `ε`.
    pub fn lab_view(&self) -> Result<Field3> {
        self.w.clone().with_grid(self.w.grid().scaled(self.config.eps))
    }

    /// Replaces the field, keeping time and window (used for time reversal
    /// and checkpoints).
    pub fn set_field(&mut self, w: Field3, s: f64) -> Result<()> {
        if !w.grid().same_lattice(self.sp.grid()) {
            return Err(Error::GridMismatch);
        }
        let h = self.sp.grid().spacing();
        self.center_index = w.grid().center().map(|c| (c / h).round() as i64);
        self.s = s;
        self.install(w)
    }

    fn potential_phase(&mut self, tau: f64) {
        let (v, phi) = (&self.v_ext, self.hartree.values());
        for ((z, &ve), p) in self.w.values_mut().iter_mut().zip(v).zip(phi) {
            *z *= Complex64::from_polar(1.0, -tau * (ve - p.re));
        }
    }

    /// One Strang step `e^{−iτ(V−Φ)/2} e^{iτΔ/2} e^{−iτ(V−Φ)/2}` of size `dt`
    /// (negative steps run backwards).
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if self.kinetic.as_ref().is_none_or(|(d, _)| *d != dt) {
            let phases = (0..self.sp.grid().len())
                .map(|idx| Complex64::from_polar(1.0, -0.5 * dt * self.sp.k_squared(idx)))
                .collect();
            self.kinetic = Some((dt, phases));
        }
        self.potential_phase(0.5 * dt);
        let kinetic = &self.kinetic.as_ref().expect("set above").1;
        let data = self.w.values_mut();
        self.sp.forward_in_place(data);
        data.iter_mut().zip(kinetic).for_each(|(z, k)| *z *= k);
        self.sp.inverse_in_place(data);
        if self.config.nonlinear {
            let grid = *self.w.grid();
            self.hartree = self.sp.coulomb_convolve(&self.w.density())?.with_grid(grid)?;
        }
        self.potential_phase(0.5 * dt);
        self.s += dt;
        self.steps_taken += 1;
        if self.config.recenter && self.steps_taken.is_multiple_of(self.config.recenter_every) {
            self.recenter()?;
        }
        Ok(())
    }

    /// Moves the window by whole lattice steps towards the predicted particle
    /// position; an exact relabeling of samples.
    pub fn recenter(&mut self) -> Result<()> {
        let (x, _) = trajectory_at(&self.trajectory, &self.config.potential, self.t())?;
        let h = self.sp.grid().spacing();
        let target = x.map(|xi| (xi / self.config.eps / h).round() as i64);
        let shift = [
            target[0] - self.center_index[0],
            target[1] - self.center_index[1],
            target[2] - self.center_index[2],
        ];
        if shift == [0; 3] {
            return Ok(());
        }
        let back = shift.map(|m| -m);
        self.center_index = target;
        let grid = self.window();
        let w = self.w.roll(back).with_grid(grid)?;
        let hartree = self.hartree.roll(back).with_grid(grid)?;
        let eps = self.config.eps;
        let pot = &self.config.potential;
        self.v_ext = (0..grid.len()).map(|idx| pot.value(grid.position(idx).map(|y| eps * y))).collect();
        self.w = w;
        self.hartree = hartree;
        Ok(())
    }

    /// `E_ε` from the rescaled field.
    pub fn energy(&self) -> Result<EnergyBreakdown> {
        let kinetic = 0.5 * self.sp.dirichlet_energy(&self.w)?;
        let rho = self.w.density();
        let h3 = self.w.grid().cell_volume();
        let ext: f64 = rho.values().iter().zip(&self.v_ext).map(|(d, v)| d.re * v).sum::<f64>() * h3;
        let hartree = if self.config.nonlinear { -0.5 * self.hartree.real_inner(&rho)? } else { 0.0 };
        Ok(EnergyBreakdown::new(kinetic, ext, hartree))
    }

    /// Phase-optimal `𝓗_ε` distance to the soliton ansatz
    /// `r((x − x(t))/ε) e^{iv(t)·x/ε}`:
    /// `min_θ (‖∇(w − e^{iθ}a)‖₂² + ‖w − e^{iθ}a‖₂²)^{1/2}`.
    pub fn soliton_error(&self) -> Result<f64> {
        let (x, v) = trajectory_at(&self.trajectory, &self.config.potential, self.t())?;
        let a = self.ansatz(x.map(|xi| xi / self.config.eps), v)?;
        let sp = &self.sp;
        let star = |f: &Field3| -> Result<f64> { Ok(f.norm_sqr() + sp.dirichlet_energy(f)?) };
        let ka = sp.apply_real_multiplier(&a, |idx| 1.0 + sp.k_squared(idx))?;
        let pairing = ka.inner(&self.w)?;
        let err2 = star(&self.w)? + star(&a)? - 2.0 * pairing.norm();
        Ok(err2.max(0.0).sqrt())
    }

    /// Moving-frame field `Ψ(y) = w(y) e^{−iv(t)·y}`; its orbit distance and
    /// energy excess measure the deviation from the soliton family.
    pub fn moving_frame(&self) -> Result<Field3> {
        let (_, v) = trajectory_at(&self.trajectory, &self.config.potential, self.t())?;
        Ok(self.w.map_with_position(|y, z| z * Complex64::from_polar(1.0, -(v[0] * y[0] + v[1] * y[1] + v[2] * y[2]))))
    }
}
