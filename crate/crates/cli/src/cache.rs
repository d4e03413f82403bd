//! On-disk cache of relaxed ground states, one file per resolution.

use std::path::{Path, PathBuf};

use anyhow::Context;
use newton_soliton::ground_state::compute_ground_state;
use newton_soliton::io::{load_cached_ground_state, write_ground_state};
use newton_soliton::{Error, GroundState};

use crate::config::RunConfig;

pub const CACHE_ENV: &str = "NEWTON_SOLITON_CACHE";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Loaded,
    Computed,
}

/// `$NEWTON_SOLITON_CACHE`, or `cache/` under the output directory.
pub fn cache_dir(out: &Path) -> PathBuf {
    std::env::var_os(CACHE_ENV).map(PathBuf::from).unwrap_or_else(|| out.join("cache"))
}

/// Files are keyed on the resolution only, so a changed box or truncation
/// radius is caught as a mismatch rather than silently recomputed.
pub fn cache_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("ground_state_n{n}.bin"))
}

/// Loads the ground state for resolution `n` of the configured box, or
/// relaxes and stores it. A cached file for different box parameters is an
/// error unless `rebuild` is set.
pub fn ground_state(cfg: &RunConfig, n: usize, dir: &Path, rebuild: bool) -> anyhow::Result<(GroundState, CacheStatus)> {
    let grid = cfg.grid.grid_with(n)?;
    let path = cache_path(dir, n);
    if !rebuild {
        match load_cached_ground_state(&path, &grid) {
            Ok(Some(state)) => {
                log::info!("loaded ground state from {}", path.display());
                return Ok((state, CacheStatus::Loaded));
            }
            Ok(None) => {}
            Err(e @ Error::CacheMismatch(_)) => {
                return Err(anyhow::Error::new(e).context(format!("{} (pass --rebuild to replace it)", path.display())))
            }
            Err(e) => return Err(anyhow::Error::new(e).context(format!("reading {}", path.display()))),
        }
    }
    log::info!("relaxing ground state on {n}³");
    let run = compute_ground_state(grid, &cfg.ground_state.options())?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_ground_state(&path, &run.state)?;
    Ok((run.state, CacheStatus::Computed))
}
