//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use newton_soliton::dynamics::EvolutionConfig;
use newton_soliton::ground_state::{GroundStateOptions, RelaxOptions, DEFAULT_WINDOW};
use newton_soliton::linearized::ProbeOptions;
use newton_soliton::modulation::PerturbationSector;
use newton_soliton::potential::Potential;
use newton_soliton::Grid3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// The configuration shipped with the binary.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub ground_state: GroundStateSection,
    #[serde(default)]
    pub linearized: LinearizedSection,
    #[serde(default)]
    pub modulation: ModulationSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    pub campaign: CampaignSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub box_length: f64,
    /// Coulomb truncation radius; half the box when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: 96, box_length: 32.0, truncation_radius: None }
    }
}

impl GridSection {
    pub fn grid(&self) -> newton_soliton::Result<Grid3> {
        self.grid_with(self.n)
    }

    /// The same box at another resolution.
    pub fn grid_with(&self, n: usize) -> newton_soliton::Result<Grid3> {
        Grid3::with_truncation(n, self.box_length, self.truncation_radius.unwrap_or(0.5 * self.box_length))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundStateSection {
    pub relax: RelaxOptions,
    pub seed_mass: f64,
    pub multiplier_tol: f64,
    pub max_outer: usize,
    /// Outer radius and step of the radial shooting reference.
    pub oracle_s_max: f64,
    pub oracle_ds: f64,
    pub decay_window: [f64; 2],
    /// Relative shift of the decay window in the stability check.
    pub decay_shift: f64,
}

impl Default for GroundStateSection {
    fn default() -> Self {
        let o = GroundStateOptions::default();
        Self {
            relax: o.relax,
            seed_mass: o.seed_mass,
            multiplier_tol: o.multiplier_tol,
            max_outer: o.max_outer,
            oracle_s_max: 20.0,
            oracle_ds: 2e-3,
            decay_window: DEFAULT_WINDOW,
            decay_shift: 0.1,
        }
    }
}

impl GroundStateSection {
    pub fn options(&self) -> GroundStateOptions {
        GroundStateOptions {
            relax: self.relax,
            seed_mass: self.seed_mass,
            multiplier_tol: self.multiplier_tol,
            max_outer: self.max_outer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearizedSection {
    /// Resolution of the second grid in the probe stability comparison.
    pub coarse_n: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub samples: usize,
}

impl Default for LinearizedSection {
    fn default() -> Self {
        let p = ProbeOptions::default();
        Self { coarse_n: 64, max_iter: p.max_iter, tol: p.tol, samples: p.samples }
    }
}

impl LinearizedSection {
    pub fn probe_options(&self) -> ProbeOptions {
        ProbeOptions { max_iter: self.max_iter, tol: self.tol, samples: self.samples }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationSection {
    /// Target distances are log-spaced on `[d_min, d_max]`.
    pub d_min: f64,
    pub d_max: f64,
    pub n_distances: usize,
    pub n_per_distance: usize,
    pub sector: PerturbationSector,
    /// Random points at which the analytic gradient is checked.
    pub gradient_probes: usize,
}

impl Default for ModulationSection {
    fn default() -> Self {
        Self {
            d_min: 1.25e-3,
            d_max: 1e-1,
            n_distances: 10,
            n_per_distance: 30,
            sector: PerturbationSector::Complex,
            gradient_probes: 50,
        }
    }
}

impl ModulationSection {
    pub fn distances(&self) -> Vec<f64> {
        let k = self.n_distances;
        if k <= 1 {
            return vec![self.d_min];
        }
        let (a, b) = (self.d_min.ln(), self.d_max.ln());
        (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect()
    }
}

/// Evolution parameters; the window is taken from `[grid]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsSection {
    pub eps: f64,
    pub potential: Potential,
    pub x0: [f64; 3],
    pub v0: [f64; 3],
    pub t_final: f64,
    pub dt: f64,
    pub recenter: bool,
    pub recenter_every: usize,
    pub output_stride: usize,
    pub track_modulation: bool,
    pub dt_newton: f64,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        let e = EvolutionConfig::default();
        Self {
            eps: e.eps,
            potential: e.potential,
            x0: e.x0,
            v0: e.v0,
            t_final: e.t_final,
            dt: e.dt,
            recenter: e.recenter,
            recenter_every: e.recenter_every,
            output_stride: e.output_stride,
            track_modulation: e.track_modulation,
            dt_newton: e.dt_newton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads for independent runs; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
}

fn default_eps() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn shipped() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped config parses")
    }

    pub fn check(&self) -> anyhow::Result<()> {
        self.grid.grid()?;
        if self.campaign.eps.is_empty() || self.campaign.eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            bail!("campaign.eps must be a non-empty list of positive numbers");
        }
        let m = &self.modulation;
        if !(m.d_min > 0.0 && m.d_max >= m.d_min) || m.n_distances == 0 {
            bail!("modulation distances must satisfy 0 < d_min <= d_max with n_distances >= 1");
        }
        self.evolution(self.dynamics.eps).validate()?;
        Ok(())
    }

    /// Evolution parameters for one `ε` on the configured window.
    pub fn evolution(&self, eps: f64) -> EvolutionConfig {
        let d = &self.dynamics;
        EvolutionConfig {
            eps,
            potential: d.potential.clone(),
            x0: d.x0,
            v0: d.v0,
            t_final: d.t_final,
            dt: d.dt,
            n: self.grid.n,
            box_length: self.grid.box_length,
            recenter: d.recenter,
            recenter_every: d.recenter_every,
            output_stride: d.output_stride,
            track_modulation: d.track_modulation,
            nonlinear: true,
            dt_newton: d.dt_newton,
        }
    }

    /// SHA-256 of the canonical TOML form, as lowercase hex.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_matches_the_library_defaults() {
        let cfg = RunConfig::shipped();
        assert_eq!(cfg.grid, GridSection::default());
        assert_eq!(cfg.ground_state, GroundStateSection::default());
        assert_eq!(cfg.linearized, LinearizedSection::default());
        assert_eq!(cfg.modulation, ModulationSection::default());
        assert_eq!(cfg.dynamics, DynamicsSection::default());
        assert_eq!(cfg.campaign.eps, default_eps());
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(RunConfig::parse("[campaign]\neps = [0.1]\n").is_err());
        assert!(RunConfig::parse("[campaign]\nseed = 1\n").is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "[campaign]\nseed = 1\nsede = 2\n",
            "[campaign]\nseed = 1\n[grid]\nsize = 3\n",
            "[campaign]\nseed = 1\n[dynamics]\nn = 64\n",
            "[campaign]\nseed = 1\n[extra]\n",
            "[campaign]\nseed = 1\n[ground_state.relax]\ntolerance = 1e-3\n",
        ] {
            assert!(RunConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn hash_tracks_every_value() {
        let a = RunConfig::shipped();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.dynamics.dt *= 2.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn distances_are_log_spaced() {
        let d = ModulationSection::default().distances();
        assert_eq!(d.len(), 10);
        assert!((d[0] - 1.25e-3).abs() < 1e-15 && (d[9] - 1e-1).abs() < 1e-14);
        assert!((d[1] / d[0] - d[5] / d[4]).abs() < 1e-12);
    }

    #[test]
    fn evolution_window_comes_from_the_grid() {
        let mut cfg = RunConfig::shipped();
        cfg.grid.n = 48;
        let e = cfg.evolution(0.2);
        assert_eq!((e.n, e.box_length, e.eps), (48, 32.0, 0.2));
    }
}
