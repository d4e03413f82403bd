//! Complex scalar fields sampled on a [`Grid3`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid3;

/// Complex samples on a periodic grid, row-major with the last axis fastest.
///
/// Integrals use the rectangle rule `∫f ≈ h³ Σ f`, which is spectrally
/// accurate for smooth periodic data; every functional in the crate goes
/// through it.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    grid: Grid3,
    values: Vec<Complex64>,
}

impl Field3 {
    pub fn zeros(grid: Grid3) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: Grid3, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: Grid3, values: &[f64]) -> Result<Self> {
        Self::from_values(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f(x)` at every grid position.
    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid3, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Reinterprets the samples on another grid with the same point count.
    pub fn with_grid(mut self, grid: Grid3) -> Result<Self> {
        if grid.n() != self.grid.n() {
            return Err(Error::GridMismatch);
        }
        self.grid = grid;
        Ok(self)
    }

    pub fn check_same_grid(&self, other: &Field3) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Real-valued up to `rel_tol` of the largest real part.
    pub fn ensure_real(&self, rel_tol: f64) -> Result<()> {
        let scale = self.values.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        let im = self.max_imag();
        if im <= rel_tol * scale.max(f64::MIN_POSITIVE) || im == 0.0 {
            Ok(())
        } else {
            Err(Error::ComplexInput(im))
        }
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn real(&self) -> Field3 {
        self.map(|z| Complex64::new(z.re, 0.0))
    }

    pub fn imag(&self) -> Field3 {
        self.map(|z| Complex64::new(z.im, 0.0))
    }

    pub fn conj(&self) -> Field3 {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field3 {
        Field3 { grid: self.grid, values: self.values.iter().map(|&z| f(z)).collect() }
    }

    /// Pointwise `f(x, z)` with the sample position.
    pub fn map_with_position(&self, f: impl Fn([f64; 3], Complex64) -> Complex64) -> Field3 {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &z)| f(self.grid.position(idx), z))
            .collect();
        Field3 { grid: self.grid, values }
    }

    pub fn zip_map(
        &self,
        other: &Field3,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field3> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field3 { grid: self.grid, values })
    }

    pub fn scale(&self, s: f64) -> Field3 {
        self.map(|z| z * s)
    }

    pub fn scale_complex(&self, s: Complex64) -> Field3 {
        self.map(|z| z * s)
    }

    pub fn add(&self, other: &Field3) -> Result<Field3> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field3) -> Result<Field3> {
        self.zip_map(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field3) -> Result<Field3> {
        self.zip_map(other, |a, b| a * b)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Field3) -> Result<Field3> {
        self.zip_map(other, |a, b| a + b * s)
    }

    pub fn axpy_in_place(&mut self, s: f64, other: &Field3) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b * s;
        }
        Ok(())
    }

    /// `|f|²` as a real field.
    pub fn density(&self) -> Field3 {
        self.map(|z| Complex64::new(z.norm_sqr(), 0.0))
    }

    /// `∫ f`.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    /// L² inner product `∫ f ḡ`.
    pub fn inner(&self, other: &Field3) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// `Re ∫ f ḡ`, the real inner product of the notation `u·v = Re(u v̄)`.
    pub fn real_inner(&self, other: &Field3) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a.re * b.re + a.im * b.im).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// L² norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest sample magnitude on the outer faces of the box, relative to the
    /// largest sample magnitude overall.
    pub fn boundary_tail(&self) -> f64 {
        let n = self.grid.n();
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let mut tail: f64 = 0.0;
        for idx in 0..self.grid.len() {
            let (i, j, k) = self.grid.unravel(idx);
            if i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1 {
                tail = tail.max(self.values[idx].norm());
            }
        }
        tail / max
    }

    /// Integer lattice shift: `out(x) = self(x - shift·h)` with periodic wrap.
    pub fn roll(&self, shift: [i64; 3]) -> Field3 {
        let n = self.grid.n() as i64;
        let mut out = Field3::zeros(self.grid);
        for idx in 0..self.grid.len() {
            let (i, j, k) = self.grid.unravel(idx);
            let ti = (i as i64 + shift[0]).rem_euclid(n) as usize;
            let tj = (j as i64 + shift[1]).rem_euclid(n) as usize;
            let tk = (k as i64 + shift[2]).rem_euclid(n) as usize;
            out.values[self.grid.index(ti, tj, tk)] = self.values[idx];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid3 {
        Grid3::new(8, 4.0).unwrap()
    }

    #[test]
    fn constant_integral_is_volume() {
        let f = Field3::from_real_fn(grid(), |_| 2.0);
        assert!((f.integral().re - 2.0 * 64.0).abs() < 1e-12);
    }

    #[test]
    fn inner_is_conjugate_linear_in_second_slot() {
        let g = grid();
        let a = Field3::from_fn(g, |x| Complex64::new(x[0], x[1]));
        let b = Field3::from_fn(g, |x| Complex64::new(1.0, x[2]));
        let ab = a.inner(&b).unwrap();
        let ba = b.inner(&a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-12);
        assert!((a.inner(&a).unwrap().re - a.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Field3::zeros(grid());
        let b = Field3::zeros(Grid3::new(8, 5.0).unwrap());
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn ensure_real_flags_imaginary_parts() {
        let g = grid();
        let f = Field3::from_real_fn(g, |x| x[0]);
        assert!(f.ensure_real(1e-12).is_ok());
        let h = f.map(|z| z + Complex64::new(0.0, 1e-3));
        assert!(matches!(h.ensure_real(1e-12), Err(Error::ComplexInput(_))));
    }

    #[test]
    fn roll_moves_samples() {
        let g = grid();
        let f = Field3::from_real_fn(g, |x| x[0] + 10.0 * x[1]);
        let r = f.roll([1, 0, 0]);
        assert_eq!(r.values()[g.index(3, 2, 5)], f.values()[g.index(2, 2, 5)]);
        assert_eq!(r.roll([-1, 0, 0]), f);
    }
}
