//! Observable time series, conservation and identity checks, and the
//! ε-scaling studies built on them.

use serde::{Deserialize, Serialize};

use super::{Evolution, EvolutionConfig};
use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::modulation::ModulationFrame;
use crate::observables::{classical_hamiltonian, energy, EnergyBreakdown, TrajectoryState};
use crate::potential::ExternalPotential;

/// Width of the Gaussian test function in the continuity check.
const PROBE_WIDTH: f64 = 2.0;
/// Offset of its center from the initial soliton position, in rescaled units.
const PROBE_OFFSET: [f64; 3] = [2.0, 1.0, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    /// Physical time.
    pub t: f64,
    /// Rescaled time `t/ε`.
    pub s: f64,
    /// `ε⁻³‖u‖₂²`.
    pub mass: f64,
    /// `E_ε` and its parts.
    pub energy: EnergyBreakdown,
    /// `∫p^ε`.
    pub momentum: [f64; 3],
    /// `−ε⁻³∫∇V|u|²`, the predicted rate of change of `∫p^ε`.
    pub force: [f64; 3],
    /// `∫χ|w|²` for a fixed Gaussian test function `χ` in rescaled variables.
    pub probe_mass: f64,
    /// `∫∇χ·Im(w̄∇w)`, its predicted rate of change in `s`.
    pub probe_flux: f64,
    /// `‖∇u‖₂/√ε`.
    pub gradient_ratio: f64,
    pub particle: TrajectoryState,
    pub soliton_error: f64,
    pub frame: Option<ModulationFrame>,
    /// `|εx* − x(t)|` for the modulation center `x*` (physical units).
    pub tracking_deviation: Option<f64>,
    /// `𝓔(Ψ) − 𝓔(r)` of the moving-frame field.
    pub frame_energy_excess: Option<f64>,
    /// Window center in rescaled units.
    pub window_center: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub config: EvolutionConfig,
    /// Step actually used (`T/ε` divided into whole steps).
    pub dt: f64,
    pub steps: usize,
    pub records: Vec<ObservableRecord>,
    /// Relative Hamiltonian drift of the particle trajectory.
    pub hamiltonian_drift: f64,
}

fn probe(evo: &Evolution) -> Result<(f64, f64)> {
    let w = evo.field();
    let grid = *w.grid();
    let eps = evo.config().eps;
    let y0 = evo.config().x0.map(|x| x / eps);
    let c = [y0[0] + PROBE_OFFSET[0], y0[1] + PROBE_OFFSET[1], y0[2] + PROBE_OFFSET[2]];
    let s2 = PROBE_WIDTH * PROBE_WIDTH;
    let chi = |y: [f64; 3]| {
        let d = [y[0] - c[0], y[1] - c[1], y[2] - c[2]];
        let e = (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (2.0 * s2)).exp();
        (e, d.map(|di| -di / s2 * e))
    };
    let grad = evo.spectral().gradient(w)?;
    let (mut q, mut flux) = (0.0, 0.0);
    for (idx, z) in w.values().iter().enumerate() {
        let (x, gx) = chi(grid.position(idx));
        q += x * z.norm_sqr();
        for j in 0..3 {
            // Im(w̄ ∂_j w)
            flux += gx[j] * (z.conj() * grad[j].values()[idx]).im;
        }
    }
    let h3 = grid.cell_volume();
    Ok((q * h3, flux * h3))
}

fn record(evo: &Evolution) -> Result<ObservableRecord> {
    let cfg = evo.config();
    let eps = cfg.eps;
    let w = evo.field();
    let sp = evo.spectral();
    let grid = *w.grid();
    let (x, v) = super::trajectory_at(evo.trajectory(), &cfg.potential, evo.t())?;
    let particle = TrajectoryState {
        t: evo.t(),
        x,
        v,
        hamiltonian: classical_hamiltonian(x, v, evo.ground_mass(), &cfg.potential),
    };
    let spectrum = sp.forward(w);
    let mut momentum = [0.0; 3];
    for (idx, z) in spectrum.iter().enumerate() {
        let k = sp.derivative_wavevector(idx);
        for j in 0..3 {
            momentum[j] += k[j] * z.norm_sqr();
        }
    }
    let h3 = grid.cell_volume();
    let mut force = [0.0; 3];
    for (idx, z) in w.values().iter().enumerate() {
        let g = cfg.potential.gradient(grid.position(idx).map(|y| eps * y));
        for j in 0..3 {
            force[j] -= g[j] * z.norm_sqr();
        }
    }
    let (probe_mass, probe_flux) = probe(evo)?;
    let (frame, tracking_deviation, frame_energy_excess) = if cfg.track_modulation {
        let psi = evo.moving_frame()?;
        let frame = evo.modulation().minimize(&psi)?;
        let dev = (0..3).map(|j| (eps * frame.x_star[j] - x[j]).powi(2)).sum::<f64>().sqrt();
        let excess = energy(sp, &psi)? - evo.ground_energy();
        (Some(frame), Some(dev), Some(excess))
    } else {
        (None, None, None)
    };
    Ok(ObservableRecord {
        t: evo.t(),
        s: evo.s(),
        mass: w.norm_sqr(),
        energy: evo.energy()?,
        momentum: momentum.map(|p| p * h3),
        force: force.map(|f| f * h3),
        probe_mass,
        probe_flux,
        gradient_ratio: sp.dirichlet_energy(w)?.sqrt(),
        particle,
        soliton_error: evo.soliton_error()?,
        frame,
        tracking_deviation,
        frame_energy_excess,
        window_center: grid.center(),
    })
}

/// Evolves to `T` recording observables every `output_stride` steps and at
/// the end.
pub fn run(state: &GroundState, config: EvolutionConfig) -> Result<ObservableSeries> {
    let mut evo = Evolution::new(state, config)?;
    run_evolution(&mut evo)
}

pub fn run_evolution(evo: &mut Evolution) -> Result<ObservableSeries> {
    let (steps, dt) = evo.config().steps();
    let stride = evo.config().output_stride;
    let mut records = vec![record(evo)?];
    for i in 1..=steps {
        evo.step(dt)?;
        if i % stride == 0 || i == steps {
            let rec = record(evo)?;
            log::debug!("t={:.4} mass={:.15} E={:.12} err={:.3e}", rec.t, rec.mass, rec.energy.total, rec.soliton_error);
            records.push(rec);
        }
    }
    Ok(ObservableSeries {
        config: evo.config().clone(),
        dt,
        steps,
        records,
        hamiltonian_drift: super::hamiltonian_drift(evo.trajectory()),
    })
}

impl ObservableSeries {
    /// Largest relative deviation of the mass from its initial value.
    pub fn mass_drift(&self) -> f64 {
        relative_drift(self.records.iter().map(|r| r.mass))
    }

    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.records.iter().map(|r| r.energy.total))
    }

    pub fn sup_soliton_error(&self) -> f64 {
        self.records.iter().map(|r| r.soliton_error).fold(0.0, f64::max)
    }

    pub fn sup_tracking_deviation(&self) -> Option<f64> {
        self.records.iter().map(|r| r.tracking_deviation).collect::<Option<Vec<f64>>>().map(max_of)
    }

    pub fn sup_frame_distance(&self) -> Option<f64> {
        self.records.iter().map(|r| r.frame.map(|f| f.distance)).collect::<Option<Vec<f64>>>().map(max_of)
    }

    pub fn min_frame_energy_excess(&self) -> Option<f64> {
        self.records
            .iter()
            .map(|r| r.frame_energy_excess)
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn sup_gradient_ratio(&self) -> f64 {
        self.records.iter().map(|r| r.gradient_ratio).fold(0.0, f64::max)
    }

    /// Column names matching [`ObservableSeries::csv_rows`].
    pub fn csv_header() -> &'static [&'static str] {
        &[
            "t", "s", "mass", "energy", "kinetic", "external", "hartree", "p1", "p2", "p3", "f1", "f2", "f3",
            "probe_mass", "probe_flux", "gradient_ratio", "x1", "x2", "x3", "v1", "v2", "v3", "hamiltonian",
            "soliton_error", "frame_x1", "frame_x2", "frame_x3", "frame_theta", "frame_distance",
            "tracking_deviation", "frame_energy_excess",
        ]
    }

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.t,
                    r.s,
                    r.mass,
                    r.energy.total,
                    r.energy.kinetic,
                    r.energy.potential_external,
                    r.energy.hartree,
                ];
                row.extend(r.momentum);
                row.extend(r.force);
                row.extend([r.probe_mass, r.probe_flux, r.gradient_ratio]);
                row.extend(r.particle.x);
                row.extend(r.particle.v);
                row.extend([r.particle.hamiltonian, r.soliton_error]);
                match r.frame {
                    Some(f) => row.extend([f.x_star[0], f.x_star[1], f.x_star[2], f.theta_star, f.distance]),
                    None => row.extend([f64::NAN; 5]),
                }
                row.push(r.tracking_deviation.unwrap_or(f64::NAN));
                row.push(r.frame_energy_excess.unwrap_or(f64::NAN));
                row
            })
            .collect()
    }
}

fn max_of(v: Vec<f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let Some(&first) = v.first() else { return 0.0 };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    v.iter().map(|x| (x - first).abs() / scale).fold(0.0, f64::max)
}

/// Finite-difference checks of the momentum and continuity identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `max |D_t∫p^ε − (−ε⁻³∫∇V|u|²)|` over interior outputs (central differences).
    pub momentum_residual: f64,
    /// The same relative to `max |ε⁻³∫∇V|u|²|` (infinite when the force vanishes
    /// and the residual does not).
    pub momentum_residual_relative: f64,
    /// `max_t |∫p^ε(t) − ∫p^ε(0)|`.
    pub momentum_drift: f64,
    /// `max |D_s∫χ|w|² − ∫∇χ·Im(w̄∇w)|` relative to the largest flux.
    pub continuity_residual: f64,
    /// `sup_t ‖∇u^ε(t)‖₂/√ε`.
    pub gradient_sup: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub outputs: usize,
}

pub fn identity_checks(series: &ObservableSeries) -> Result<IdentityReport> {
    let rec = &series.records;
    if rec.len() < 3 {
        return Err(Error::CoarseSeries(format!("{} outputs; central differences need 3", rec.len())));
    }
    let mut momentum_residual: f64 = 0.0;
    let mut continuity_residual: f64 = 0.0;
    for i in 1..rec.len() - 1 {
        let (a, b) = (&rec[i - 1], &rec[i + 1]);
        if (b.t - rec[i].t - (rec[i].t - a.t)).abs() > 1e-9 * (b.t - a.t) {
            // the final output may sit off the regular stride
            continue;
        }
        for j in 0..3 {
            let fd = (b.momentum[j] - a.momentum[j]) / (b.t - a.t);
            momentum_residual = momentum_residual.max((fd - rec[i].force[j]).abs());
        }
        let fd = (b.probe_mass - a.probe_mass) / (b.s - a.s);
        continuity_residual = continuity_residual.max((fd - rec[i].probe_flux).abs());
    }
    let force_scale = rec.iter().flat_map(|r| r.force).map(f64::abs).fold(0.0, f64::max);
    let flux_scale = rec.iter().map(|r| r.probe_flux.abs()).fold(0.0, f64::max);
    let relative = |res: f64, scale: f64| {
        if scale > 0.0 {
            res / scale
        } else if res == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let p0 = rec[0].momentum;
    let momentum_drift = rec
        .iter()
        .flat_map(|r| (0..3).map(move |j| (r.momentum[j] - p0[j]).abs()))
        .fold(0.0, f64::max);
    Ok(IdentityReport {
        momentum_residual,
        momentum_residual_relative: relative(momentum_residual, force_scale),
        momentum_drift,
        continuity_residual: relative(continuity_residual, flux_scale),
        gradient_sup: series.sup_gradient_ratio(),
        mass_drift: series.mass_drift(),
        energy_drift: series.energy_drift(),
        outputs: rec.len(),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyExpansion {
    pub eps: Vec<f64>,
    /// `|E_ε(0) − 𝓔(r) − 𝓗(0)|`.
    pub defect: Vec<f64>,
    pub slope: f64,
}

/// Energy defect of the initial datum for each `ε`; the particle sits at
/// `config.x0` with velocity `config.v0`.
pub fn energy_expansion_check(state: &GroundState, config: &EvolutionConfig, eps: &[f64]) -> Result<EnergyExpansion> {
    let m = state.field.norm_sqr();
    let hamiltonian = classical_hamiltonian(config.x0, config.v0, m, &config.potential);
    let ground = state.energy;
    let mut defect = Vec::with_capacity(eps.len());
    for &e in eps {
        let cfg = EvolutionConfig { eps: e, t_final: 0.0, recenter: false, track_modulation: false, ..config.clone() };
        let evo = Evolution::new(state, cfg)?;
        defect.push((evo.energy()?.total - ground - hamiltonian).abs());
    }
    let slope = if eps.len() >= 2 { log_log_slope(eps, &defect) } else { f64::NAN };
    Ok(EnergyExpansion { eps: eps.to_vec(), defect, slope })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRun {
    pub eps: f64,
    pub steps: usize,
    pub sup_soliton_error: f64,
    pub final_soliton_error: f64,
    pub sup_frame_distance: Option<f64>,
    pub sup_tracking_deviation: Option<f64>,
    pub min_frame_energy_excess: Option<f64>,
    pub sup_gradient_ratio: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub runs: Vec<ScalingRun>,
    /// Log-log slope of `sup_t` soliton error against `ε`.
    pub error_slope: f64,
    /// The same for the orbit distance of the moving-frame field.
    pub frame_distance_slope: Option<f64>,
    /// Tracking deviation at the smallest `ε` over that at the next one.
    pub tracking_ratio: Option<f64>,
    /// Largest over smallest `sup_t ‖∇u‖₂/√ε` across runs.
    pub gradient_spread: f64,
    /// Share of output times at which the smallest-`ε` error curve lies below
    /// every other curve (linearly interpolated in physical time).
    pub dominated_fraction: f64,
}

/// Mass and energy drifts above which a run does not count.
pub const MASS_DRIFT_LIMIT: f64 = 1e-10;
pub const ENERGY_DRIFT_LIMIT: f64 = 1e-6;

/// Runs the same physical problem for each `ε` and fits the error exponents.
pub fn scaling_study(
    state: &GroundState,
    config: &EvolutionConfig,
    eps: &[f64],
) -> Result<(ScalingReport, Vec<ObservableSeries>)> {
    let mut series = Vec::with_capacity(eps.len());
    for &e in eps {
        let s = run(state, EvolutionConfig { eps: e, ..config.clone() })?;
        let (md, ed) = (s.mass_drift(), s.energy_drift());
        if md > MASS_DRIFT_LIMIT || ed > ENERGY_DRIFT_LIMIT {
            return Err(Error::NonConservative(format!("ε = {e}: mass drift {md:.3e}, energy drift {ed:.3e}")));
        }
        series.push(s);
    }
    Ok((scaling_report(&series), series))
}

pub fn scaling_report(series: &[ObservableSeries]) -> ScalingReport {
    let runs: Vec<ScalingRun> = series
        .iter()
        .map(|s| ScalingRun {
            eps: s.config.eps,
            steps: s.steps,
            sup_soliton_error: s.sup_soliton_error(),
            final_soliton_error: s.records.last().map_or(0.0, |r| r.soliton_error),
            sup_frame_distance: s.sup_frame_distance(),
            sup_tracking_deviation: s.sup_tracking_deviation(),
            min_frame_energy_excess: s.min_frame_energy_excess(),
            sup_gradient_ratio: s.sup_gradient_ratio(),
            mass_drift: s.mass_drift(),
            energy_drift: s.energy_drift(),
        })
        .collect();
    let eps: Vec<f64> = runs.iter().map(|r| r.eps).collect();
    let errors: Vec<f64> = runs.iter().map(|r| r.sup_soliton_error).collect();
    let distances: Option<Vec<f64>> = runs.iter().map(|r| r.sup_frame_distance).collect();
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]));
    let tracking_ratio = if order.len() >= 2 {
        match (runs[order[0]].sup_tracking_deviation, runs[order[1]].sup_tracking_deviation) {
            (Some(a), Some(b)) => Some(a / b),
            _ => None,
        }
    } else {
        None
    };
    let grads: Vec<f64> = runs.iter().map(|r| r.sup_gradient_ratio).collect();
    let gradient_spread =
        grads.iter().copied().fold(0.0, f64::max) / grads.iter().copied().fold(f64::INFINITY, f64::min);
    let dominated_fraction = match order.first() {
        Some(&small) => {
            let base = &series[small].records;
            let others: Vec<&ObservableSeries> = order[1..].iter().map(|&i| &series[i]).collect();
            let times: Vec<&ObservableRecord> = base.iter().filter(|r| r.t > 0.0).collect();
            let hits = times
                .iter()
                .filter(|r| others.iter().all(|o| r.soliton_error <= interpolate_error(o, r.t)))
                .count();
            hits as f64 / times.len().max(1) as f64
        }
        None => 0.0,
    };
    ScalingReport {
        error_slope: if runs.len() >= 2 { log_log_slope(&eps, &errors) } else { f64::NAN },
        frame_distance_slope: distances.filter(|_| runs.len() >= 2).map(|d| log_log_slope(&eps, &d)),
        tracking_ratio,
        gradient_spread,
        dominated_fraction,
        runs,
    }
}

fn interpolate_error(series: &ObservableSeries, t: f64) -> f64 {
    let rec = &series.records;
    let i = rec.partition_point(|r| r.t <= t);
    if i == 0 {
        return rec[0].soliton_error;
    }
    if i >= rec.len() {
        return rec[rec.len() - 1].soliton_error;
    }
    let (a, b) = (&rec[i - 1], &rec[i]);
    let u = (t - a.t) / (b.t - a.t);
    a.soliton_error + u * (b.soliton_error - a.soliton_error)
}
