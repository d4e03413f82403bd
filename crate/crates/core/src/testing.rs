//! Shared fixtures for unit tests.

use std::sync::OnceLock;

use crate::ground_state::{compute_ground_state, GroundStateOptions, GroundStateRun, RelaxOptions};
use crate::grid::Grid3;

/// 32³ grid on a box of side 20.
pub fn coarse_grid() -> Grid3 {
    Grid3::new(32, 20.0).unwrap()
}

pub fn tight_options() -> GroundStateOptions {
    GroundStateOptions { relax: RelaxOptions { tol: 1e-10, ..Default::default() }, ..Default::default() }
}

/// Ground state on [`coarse_grid`], computed once per test binary.
pub fn coarse_run() -> &'static GroundStateRun {
    static RUN: OnceLock<GroundStateRun> = OnceLock::new();
    RUN.get_or_init(|| compute_ground_state(coarse_grid(), &tight_options()).unwrap())
}
