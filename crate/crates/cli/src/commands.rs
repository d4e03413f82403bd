//! Subcommand implementations. Each writes into its own directory under
//! the output root and returns whether its checks passed.

use std::path::{Path, PathBuf};

use anyhow::Context;
use newton_soliton::dynamics::{
    energy_expansion_check, identity_checks, run, scaling_report, EvolutionConfig, ObservableSeries,
};
use newton_soliton::ground_state::{decay_stability, fit_decay, radial_shooting_oracle};
use newton_soliton::linearized::{
    coercivity_probe, identity_report, ConstraintKind, Constraints, LinearizedOperator,
};
use newton_soliton::modulation::coercivity_experiment;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::acceptance::{run_suite, Tier};
use crate::cache::{self, CacheStatus};
use crate::config::RunConfig;
use crate::output::{flatten, Meta, Sink};

/// Options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub cache: PathBuf,
    pub rebuild: bool,
}

impl RunContext {
    pub fn new(cfg: RunConfig, out: Option<PathBuf>, rebuild: bool) -> Self {
        let out = out.unwrap_or_else(|| cfg.campaign.out.clone());
        let cache = cache::cache_dir(&out);
        Self { cfg, out, cache, rebuild }
    }

    fn sink(&self, command: &str, eps: &[f64]) -> anyhow::Result<Sink> {
        Sink::new(&self.out.join(command), Meta::new(command, &self.cfg, eps)?)
    }

    fn ground_state(&self) -> anyhow::Result<(newton_soliton::GroundState, CacheStatus)> {
        cache::ground_state(&self.cfg, self.cfg.grid.n, &self.cache, self.rebuild)
    }

    fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.cfg.campaign.workers).build()?)
    }
}

pub fn ground_state(ctx: &RunContext) -> anyhow::Result<bool> {
    let sink = ctx.sink("ground-state", &[])?;
    let (state, status) = ctx.ground_state()?;
    let g = &ctx.cfg.ground_state;
    let oracle = radial_shooting_oracle(g.oracle_s_max, g.oracle_ds)?;
    let fit = fit_decay(&state.radial_profile, g.decay_window)?;
    let drift = decay_stability(&state.radial_profile, g.decay_window, g.decay_shift)?;
    let p = &state.radial_profile;
    let rows: Vec<Vec<f64>> = p
        .s
        .iter()
        .zip(&p.r)
        .filter(|(&s, _)| s <= oracle.s_max())
        .map(|(&s, &r)| {
            let o = oracle.value(s);
            vec![s, r, o, (r - o).abs() / oracle.r[0]]
        })
        .collect();
    let deviation = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
    sink.csv("profile.csv", &[], &["s", "r", "r_oracle", "deviation"], &rows)?;
    sink.gnuplot(
        "profile.gp",
        "profile.csv",
        "radial profile",
        &[("1:2", "3D relaxation"), ("1:3", "radial shooting")],
        false,
    )?;
    sink.json(
        "ground_state.json",
        &json!({
            "cache": if status == CacheStatus::Loaded { "loaded" } else { "computed" },
            "mass": state.mass,
            "oracle_mass": oracle.mass,
            "mass_deviation": (state.mass - oracle.mass).abs() / oracle.mass,
            "profile_deviation": deviation,
            "multiplier": state.multiplier,
            "relative_residual": state.relative_residual(),
            "energy": state.energy,
            "peak": state.peak(),
            "radial_asymmetry": state.radial_asymmetry,
            "decay": fit,
            "lambda0_window_drift": drift,
        }),
    )?;
    println!(
        "ground state n={} mass={:.10} residual={:.3e} profile deviation={:.3e} decay slope={:.4} ({})",
        state.grid().n(),
        state.mass,
        state.relative_residual(),
        deviation,
        fit.slope_estimate,
        sink.dir().display()
    );
    Ok(true)
}

pub fn spectrum(ctx: &RunContext) -> anyhow::Result<bool> {
    let sink = ctx.sink("spectrum", &[])?;
    let (state, _) = ctx.ground_state()?;
    let mut obj = flatten(serde_json::to_value(identity_report(&state)?)?);
    let opts = ctx.cfg.linearized.probe_options();
    let mut ok = true;
    for kind in [ConstraintKind::PlusOnV0, ConstraintKind::MinusOnRPerp, ConstraintKind::PlusOnRPerp] {
        let op = LinearizedOperator::new(&state, kind.sector())?;
        let cons = Constraints::new(&state, kind)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.campaign.seed);
        let rep = coercivity_probe(&op, &cons, &opts, &mut rng)?;
        ok &= rep.converged;
        println!("{:<16} min quotient {:.6e} ({} iterations)", kind.label(), rep.min_rayleigh, rep.iterations);
        for (k, v) in flatten(serde_json::to_value(&rep)?) {
            obj.insert(format!("{}_{k}", kind.label()), v);
        }
    }
    sink.json("spectrum.json", &Value::Object(obj))?;
    Ok(ok)
}

pub fn coerce(ctx: &RunContext) -> anyhow::Result<bool> {
    let sink = ctx.sink("coerce", &[])?;
    let (state, _) = ctx.ground_state()?;
    let m = &ctx.cfg.modulation;
    let rows = coercivity_experiment(&state, &m.distances(), m.n_per_distance, m.sector, ctx.cfg.campaign.seed)?;
    let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.d_target, r.d_star, r.delta_e, r.ratio, r.seed as f64]).collect();
    sink.csv("coerce.csv", &[format!("sector = {:?}", m.sector)], &["d_target", "d_star", "delta_E", "ratio", "seed"], &table)?;
    sink.gnuplot("coerce.gp", "coerce.csv", "energy excess against orbit distance", &[("2:3", "delta_E"), ("2:4", "ratio")], true)?;
    let mut ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let min = ratios.first().copied().unwrap_or(f64::NAN);
    let median = ratios.get(ratios.len() / 2).copied().unwrap_or(f64::NAN);
    sink.json("coerce.json", &json!({ "samples": rows.len(), "min_ratio": min, "median_ratio": median }))?;
    println!("{} samples, min ratio {min:.4e}, median {median:.4e}", rows.len());
    Ok(min > 0.0)
}

fn series_files(sink: &Sink, series: &ObservableSeries) -> anyhow::Result<()> {
    let eps = series.config.eps;
    let name = format!("series_eps{eps}.csv");
    let extra = [format!("dt = {}, steps = {}", series.dt, series.steps), format!("potential = {:?}", series.config.potential)];
    sink.csv(&name, &extra, ObservableSeries::csv_header(), &series.csv_rows())?;
    Ok(())
}

pub fn evolve(ctx: &RunContext, eps: Option<f64>) -> anyhow::Result<bool> {
    let eps = eps.unwrap_or(ctx.cfg.dynamics.eps);
    let sink = ctx.sink("evolve", &[eps])?;
    let (state, _) = ctx.ground_state()?;
    let series = run(&state, ctx.cfg.evolution(eps)).context("evolution failed")?;
    series_files(&sink, &series)?;
    let name = format!("series_eps{eps}.csv");
    sink.gnuplot(
        &format!("series_eps{eps}.gp"),
        &name,
        "soliton error and tracking deviation",
        &[("1:24", "soliton error"), ("1:30", "tracking deviation")],
        false,
    )?;
    let rep = identity_checks(&series)?;
    let mut obj = flatten(serde_json::to_value(&rep)?);
    obj.insert("sup_soliton_error".into(), series.sup_soliton_error().into());
    obj.insert("hamiltonian_drift".into(), series.hamiltonian_drift.into());
    sink.json(&format!("identities_eps{eps}.json"), &Value::Object(obj))?;
    println!(
        "eps={eps}: {} steps, mass drift {:.3e}, energy drift {:.3e}, sup soliton error {:.4e}",
        series.steps,
        rep.mass_drift,
        rep.energy_drift,
        series.sup_soliton_error()
    );
    Ok(true)
}

pub fn scale(ctx: &RunContext) -> anyhow::Result<bool> {
    let eps = ctx.cfg.campaign.eps.clone();
    let sink = ctx.sink("scale", &eps)?;
    let (state, _) = ctx.ground_state()?;
    let configs: Vec<EvolutionConfig> = eps.iter().map(|&e| ctx.cfg.evolution(e)).collect();
    let series: Vec<ObservableSeries> =
        ctx.pool()?.install(|| configs.into_par_iter().map(|c| run(&state, c)).collect::<Result<_, _>>())?;
    for s in &series {
        series_files(&sink, s)?;
    }
    let rep = scaling_report(&series);
    let rows: Vec<Vec<f64>> = rep
        .runs
        .iter()
        .map(|r| {
            vec![
                r.eps,
                r.steps as f64,
                r.sup_soliton_error,
                r.final_soliton_error,
                r.sup_frame_distance.unwrap_or(f64::NAN),
                r.sup_tracking_deviation.unwrap_or(f64::NAN),
                r.min_frame_energy_excess.unwrap_or(f64::NAN),
                r.sup_gradient_ratio,
                r.mass_drift,
                r.energy_drift,
            ]
        })
        .collect();
    let columns = [
        "eps", "steps", "sup_error", "final_error", "sup_frame_distance", "sup_tracking_deviation",
        "min_frame_energy_excess", "sup_gradient_ratio", "mass_drift", "energy_drift",
    ];
    sink.csv("scaling.csv", &[], &columns, &rows)?;
    sink.gnuplot(
        "scaling.gp",
        "scaling.csv",
        "sup-in-time errors against eps",
        &[("1:3", "soliton error"), ("1:5", "orbit distance"), ("1:6", "tracking deviation")],
        true,
    )?;
    let expansion = energy_expansion_check(&state, &ctx.cfg.evolution(ctx.cfg.dynamics.eps), &eps)?;
    let rows: Vec<Vec<f64>> = expansion.eps.iter().zip(&expansion.defect).map(|(&e, &d)| vec![e, d]).collect();
    sink.csv("energy_expansion.csv", &[format!("slope = {}", expansion.slope)], &["eps", "defect"], &rows)?;
    sink.gnuplot("energy_expansion.gp", "energy_expansion.csv", "initial energy defect", &[("1:2", "defect")], true)?;
    let mut obj = flatten(serde_json::to_value(&rep)?);
    obj.insert("energy_defect_slope".into(), expansion.slope.into());
    sink.json("scaling.json", &Value::Object(obj))?;
    println!(
        "error slope {:.3}, tracking ratio {:?}, gradient spread {:.3}, energy defect slope {:.3}",
        rep.error_slope, rep.tracking_ratio, rep.gradient_spread, expansion.slope
    );
    Ok(true)
}

pub fn validate(ctx: &RunContext, quick: bool) -> anyhow::Result<bool> {
    let tier = if quick { Tier::Quick } else { Tier::Full };
    let report = run_suite(&ctx.cfg, tier, |c| println!("{c}"))?;
    let sink = ctx.sink(if quick { "validate-quick" } else { "validate" }, &ctx.cfg.campaign.eps)?;
    sink.json("acceptance.json", &Value::Object(report.to_json(tier)))?;
    let rows: Vec<Vec<f64>> = report
        .experiment
        .iter()
        .map(|r| vec![r.d_target, r.d_star, r.delta_e, r.ratio, r.seed as f64])
        .collect();
    sink.csv("coerce.csv", &[], &["d_target", "d_star", "delta_E", "ratio", "seed"], &rows)?;
    for s in &report.series {
        series_files(&sink, s)?;
    }
    let failed = report.failures().count();
    println!("{} checks, {failed} failed ({})", report.checks.iter().filter(|c| c.pass.is_some()).count(), path_of(&sink));
    Ok(failed == 0)
}

fn path_of(sink: &Sink) -> String {
    Path::new(sink.dir()).join("acceptance.json").display().to_string()
}
