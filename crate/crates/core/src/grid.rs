//! Periodic cubic grid standing in for ℝ³.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cubic periodic grid with `n` points per axis on a box of side `box_length`.
///
/// Samples sit at `center + (i - n/2) * spacing` along each axis, so the box
/// is `[center - L/2, center + L/2)`. The Coulomb kernel is truncated at
/// `truncation_radius`, which must fit inside half the box so that periodic
/// images of the kernel never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    n: usize,
    box_length: f64,
    truncation_radius: f64,
    center: [f64; 3],
}

impl Grid3 {
    /// Grid centered at the origin with the kernel truncated at `L/2`.
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        Self::with_truncation(n, box_length, 0.5 * box_length)
    }

    pub fn with_truncation(n: usize, box_length: f64, truncation_radius: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and >= 4")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length {box_length}")));
        }
        if !(truncation_radius > 0.0 && truncation_radius <= 0.5 * box_length) {
            return Err(Error::InvalidGrid(format!(
                "truncation radius {truncation_radius} must lie in (0, L/2 = {}]",
                0.5 * box_length
            )));
        }
        Ok(Self { n, box_length, truncation_radius, center: [0.0; 3] })
    }

    /// Same grid, shifted so that its middle sample sits at `center`.
    pub fn recentered(&self, center: [f64; 3]) -> Self {
        Self { center, ..*self }
    }

    /// Same samples, all lengths multiplied by `factor` (center included).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            box_length: self.box_length * factor,
            truncation_radius: self.truncation_radius * factor,
            center: self.center.map(|c| c * factor),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Quadrature weight of one sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Coordinate of sample `i` along `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.center[axis] + (i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    /// Coordinates along one axis (all axes share the same offsets).
    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.coordinate(axis, i)).collect()
    }

    /// Coordinates relative to the grid center.
    pub fn offsets(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|i| (i as f64 - (self.n / 2) as f64) * h).collect()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    pub fn position(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.coordinate(0, i), self.coordinate(1, j), self.coordinate(2, k)]
    }

    /// Signed mode number of DFT index `m`, in `{-n/2, ..., n/2 - 1}`.
    pub fn mode(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Wavenumbers `(2π/L)·{-n/2,…,n/2-1}` in DFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / self.box_length;
        (0..self.n).map(|m| dk * self.mode(m) as f64).collect()
    }

    /// Wavenumbers for odd-order derivatives: Nyquist entry set to zero.
    pub fn derivative_wavenumbers(&self) -> Vec<f64> {
        let mut k = self.wavenumbers();
        k[self.n / 2] = 0.0;
        k
    }

    /// Same sampling lattice and kernel (centers may differ).
    pub fn same_lattice(&self, other: &Grid3) -> bool {
        self.n == other.n
            && self.box_length == other.box_length
            && self.truncation_radius == other.truncation_radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_times_n_is_box_length() {
        for &(n, l) in &[(64, 32.0), (96, 32.0), (48, 17.3)] {
            let g = Grid3::new(n, l).unwrap();
            assert_eq!(g.spacing() * n as f64, l);
        }
    }

    #[test]
    fn wavenumbers_are_antisymmetric_under_index_negation() {
        let g = Grid3::new(16, 8.0).unwrap();
        let k = g.wavenumbers();
        for m in 1..16 {
            if m == 8 {
                continue;
            }
            assert_eq!(k[m], -k[16 - m]);
        }
        assert_eq!(k[0], 0.0);
        assert!(k[8] < 0.0);
    }

    #[test]
    fn rejects_oversized_truncation() {
        assert!(Grid3::with_truncation(16, 8.0, 4.5).is_err());
        assert!(Grid3::with_truncation(16, 8.0, 4.0).is_ok());
        assert!(Grid3::new(15, 8.0).is_err());
    }

    #[test]
    fn positions_are_centered() {
        let g = Grid3::new(8, 4.0).unwrap().recentered([1.0, 0.0, -2.0]);
        let p = g.position(g.index(4, 4, 4));
        assert_eq!(p, [1.0, 0.0, -2.0]);
        assert_eq!(g.coordinate(0, 0), 1.0 - 2.0);
    }
}
