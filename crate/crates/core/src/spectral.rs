//! Unitary 3D Fourier transform, spectral derivatives, translations and the
//! free-space Coulomb convolution via a truncated kernel.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::Field3;
use crate::grid::Grid3;

/// Relative tolerance below which a field's imaginary part counts as zero.
pub const REAL_TOLERANCE: f64 = 1e-12;

/// FFT plans and Fourier symbols for one grid.
///
/// The transform is unitary: `forward` divides by `√N`, so Parseval holds
/// without extra factors and `inverse(forward(f)) = f`.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid3,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
    k_deriv: Vec<f64>,
    coulomb: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish_non_exhaustive()
    }
}

/// Fourier symbol of `1/|x|` truncated to the ball `|x| < radius`.
pub fn truncated_coulomb_symbol(k: f64, radius: f64) -> f64 {
    if k == 0.0 {
        2.0 * PI * radius * radius
    } else {
        let s = (0.5 * radius * k).sin();
        8.0 * PI * s * s / (k * k)
    }
}

impl Spectral {
    pub fn new(grid: Grid3) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let k = grid.wavenumbers();
        let k_deriv = grid.derivative_wavenumbers();
        let radius = grid.truncation_radius();
        let mut coulomb = vec![0.0; grid.len()];
        for (idx, c) in coulomb.iter_mut().enumerate() {
            let (i, j, l) = grid.unravel(idx);
            let kk = (k[i] * k[i] + k[j] * k[j] + k[l] * k[l]).sqrt();
            *c = truncated_coulomb_symbol(kk, radius);
        }
        Self { grid, forward, inverse, k, k_deriv, coulomb }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    /// Wavenumbers along one axis in DFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn derivative_wavenumbers(&self) -> &[f64] {
        &self.k_deriv
    }

    /// `|k|²` of the 3D mode at `idx`.
    #[inline]
    pub fn k_squared(&self, idx: usize) -> f64 {
        let (i, j, l) = self.grid.unravel(idx);
        self.k[i] * self.k[i] + self.k[j] * self.k[j] + self.k[l] * self.k[l]
    }

    /// Wavevector of the 3D mode at `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let (i, j, l) = self.grid.unravel(idx);
        [self.k[i], self.k[j], self.k[l]]
    }

    #[inline]
    pub fn derivative_wavevector(&self, idx: usize) -> [f64; 3] {
        let (i, j, l) = self.grid.unravel(idx);
        [self.k_deriv[i], self.k_deriv[j], self.k_deriv[l]]
    }

    pub fn coulomb_symbol(&self) -> &[f64] {
        &self.coulomb
    }

    fn check(&self, f: &Field3) -> Result<()> {
        if f.grid().same_lattice(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// In-place unnormalized 3D transform.
    pub fn fft3_in_place(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.grid.n();
        let nn = n * n;
        assert_eq!(data.len(), nn * n);
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut plane = vec![Complex64::new(0.0, 0.0); nn];
        // last axis is contiguous
        plan.process_with_scratch(data, &mut scratch);
        // middle axis: transpose each plane
        for slab in data.chunks_exact_mut(nn) {
            for j in 0..n {
                for l in 0..n {
                    plane[l * n + j] = slab[j * n + l];
                }
            }
            plan.process_with_scratch(&mut plane, &mut scratch);
            for j in 0..n {
                for l in 0..n {
                    slab[j * n + l] = plane[l * n + j];
                }
            }
        }
        // first axis: gather (i, l) planes at fixed j
        for j in 0..n {
            for i in 0..n {
                let row = &data[i * nn + j * n..i * nn + j * n + n];
                for (l, &v) in row.iter().enumerate() {
                    plane[l * n + i] = v;
                }
            }
            plan.process_with_scratch(&mut plane, &mut scratch);
            for i in 0..n {
                let row = &mut data[i * nn + j * n..i * nn + j * n + n];
                for (l, v) in row.iter_mut().enumerate() {
                    *v = plane[l * n + i];
                }
            }
        }
    }

    /// Unitary forward transform of the samples.
    pub fn forward(&self, f: &Field3) -> Vec<Complex64> {
        let mut data = f.values().to_vec();
        self.forward_in_place(&mut data);
        data
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.fft3_in_place(data, false);
        let s = 1.0 / (data.len() as f64).sqrt();
        data.iter_mut().for_each(|z| *z *= s);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.fft3_in_place(data, true);
        let s = 1.0 / (data.len() as f64).sqrt();
        data.iter_mut().for_each(|z| *z *= s);
    }

    /// Unitary inverse transform back onto a field over `grid`.
    pub fn inverse(&self, mut coeffs: Vec<Complex64>, grid: Grid3) -> Field3 {
        self.inverse_in_place(&mut coeffs);
        Field3::from_values(grid, coeffs).expect("coefficient count matches grid")
    }

    /// Applies the Fourier multiplier `symbol(mode index)`.
    pub fn apply_multiplier(
        &self,
        f: &Field3,
        symbol: impl Fn(usize) -> Complex64,
    ) -> Result<Field3> {
        self.check(f)?;
        let mut c = self.forward(f);
        c.iter_mut().enumerate().for_each(|(idx, z)| *z *= symbol(idx));
        Ok(self.inverse(c, *f.grid()))
    }

    pub fn apply_real_multiplier(&self, f: &Field3, symbol: impl Fn(usize) -> f64) -> Result<Field3> {
        self.apply_multiplier(f, |idx| Complex64::new(symbol(idx), 0.0))
    }

    /// Spectral gradient; component `j` has symbol `i k_j` (zero at Nyquist).
    pub fn gradient(&self, f: &Field3) -> Result<[Field3; 3]> {
        self.check(f)?;
        f.ensure_finite()?;
        let c = self.forward(f);
        let component = |axis: usize| {
            let mut d = c.clone();
            d.iter_mut().enumerate().for_each(|(idx, z)| {
                let kj = self.derivative_wavevector(idx)[axis];
                *z = Complex64::new(-z.im * kj, z.re * kj);
            });
            self.inverse(d, *f.grid())
        };
        Ok([component(0), component(1), component(2)])
    }

    /// Spectral derivative along one axis.
    pub fn derivative(&self, f: &Field3, axis: usize) -> Result<Field3> {
        self.apply_multiplier(f, |idx| Complex64::new(0.0, self.derivative_wavevector(idx)[axis]))
    }

    /// Spectral Laplacian, symbol `-|k|²`.
    pub fn laplacian(&self, f: &Field3) -> Result<Field3> {
        f.ensure_finite()?;
        self.apply_real_multiplier(f, |idx| -self.k_squared(idx))
    }

    /// `∫|∇f|²` evaluated in Fourier space with the Laplacian's symbol.
    pub fn dirichlet_energy(&self, f: &Field3) -> Result<f64> {
        self.check(f)?;
        let c = self.forward(f);
        let s: f64 = c.iter().enumerate().map(|(idx, z)| self.k_squared(idx) * z.norm_sqr()).sum();
        Ok(s * self.grid.cell_volume())
    }

    /// `Re ∫ ∇f · ∇ḡ`, the gradient part of the real H¹ pairing.
    pub fn dirichlet_pairing(&self, f: &Field3, g: &Field3) -> Result<f64> {
        self.check(f)?;
        f.check_same_grid(g)?;
        let a = self.forward(f);
        let b = self.forward(g);
        let s: f64 = a
            .iter()
            .zip(&b)
            .enumerate()
            .map(|(idx, (x, y))| self.k_squared(idx) * (x.re * y.re + x.im * y.im))
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Band-limited translate `f(· - offset)` via the phase `e^{-i k·offset}`.
    pub fn translate(&self, f: &Field3, offset: [f64; 3]) -> Result<Field3> {
        if offset == [0.0; 3] {
            self.check(f)?;
            return Ok(f.clone());
        }
        self.apply_multiplier(f, |idx| {
            let k = self.wavevector(idx);
            Complex64::from_polar(1.0, -(k[0] * offset[0] + k[1] * offset[1] + k[2] * offset[2]))
        })
    }

    /// `x ↦ (|·|⁻¹ * density)(x)` with the kernel truncated at the grid's
    /// truncation radius; exact free-space values whenever the density and
    /// the evaluation points fit in a ball of diameter at most that radius.
    pub fn coulomb_convolve(&self, density: &Field3) -> Result<Field3> {
        self.check(density)?;
        density.ensure_finite()?;
        density.ensure_real(REAL_TOLERANCE)?;
        let mut c: Vec<Complex64> = density.values().iter().map(|z| Complex64::new(z.re, 0.0)).collect();
        self.forward_in_place(&mut c);
        c.iter_mut().zip(&self.coulomb).for_each(|(z, g)| *z *= *g);
        self.inverse_in_place(&mut c);
        c.iter_mut().for_each(|z| z.im = 0.0);
        Field3::from_values(*density.grid(), c)
    }

    /// Band-limited resampling onto a grid with the same box and center but a
    /// different point count (zero padding or truncation in Fourier space).
    pub fn resample(&self, f: &Field3, target: &Grid3) -> Result<Field3> {
        self.check(f)?;
        if target.box_length() != self.grid.box_length() {
            return Err(Error::InvalidArgument("resample needs equal box lengths".into()));
        }
        let src = self.forward(f);
        let (ns, nt) = (self.grid.n(), target.n());
        let half = ns.min(nt) / 2;
        let mut dst = vec![Complex64::new(0.0, 0.0); target.len()];
        let map = |m: i64, n: usize| -> usize { m.rem_euclid(n as i64) as usize };
        let modes: Vec<i64> = (-(half as i64) + 1..half as i64).collect();
        for &a in &modes {
            for &b in &modes {
                for &c in &modes {
                    let s = self.grid.index(map(a, ns), map(b, ns), map(c, ns));
                    let t = target.index(map(a, nt), map(b, nt), map(c, nt));
                    dst[t] = src[s];
                }
            }
        }
        // unitary scaling: coefficients carry a factor √N
        let scale = (target.len() as f64 / self.grid.len() as f64).sqrt();
        dst.iter_mut().for_each(|z| *z *= scale);
        let target_spectral = Spectral::new(*target);
        Ok(target_spectral.inverse(dst, *target))
    }
}

/// Periodic trigonometric interpolation kernel for `n` (even) samples on a
/// period `period`, evaluated at displacement `t`.
pub fn trig_kernel(n: usize, period: f64, t: f64) -> f64 {
    let w = 2.0 * PI * t / period;
    let mut s = 1.0;
    for m in 1..n / 2 {
        s += 2.0 * (m as f64 * w).cos();
    }
    s += (0.5 * n as f64 * w).cos();
    s / n as f64
}

/// Dilated resampling `out(c_t + y) = f(c_s + alpha·y)`, applied separably
/// along each axis with dense trigonometric interpolation matrices.
pub fn resample_dilated(f: &Field3, target: &Grid3, alpha: f64) -> Field3 {
    let src = f.grid();
    let (ns, nt) = (src.n(), target.n());
    let src_off = src.offsets();
    let tgt_off = target.offsets();
    let period = src.box_length();
    let mut matrix = vec![0.0; nt * ns];
    for (a, &y) in tgt_off.iter().enumerate() {
        for (b, &x) in src_off.iter().enumerate() {
            matrix[a * ns + b] = trig_kernel(ns, period, alpha * y - x);
        }
    }
    // axis 0
    let mut stage1 = vec![Complex64::new(0.0, 0.0); nt * ns * ns];
    for a in 0..nt {
        let row = &matrix[a * ns..(a + 1) * ns];
        let out = &mut stage1[a * ns * ns..(a + 1) * ns * ns];
        for (b, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let inp = &f.values()[b * ns * ns..(b + 1) * ns * ns];
            out.iter_mut().zip(inp).for_each(|(o, v)| *o += v * w);
        }
    }
    // axis 1
    let mut stage2 = vec![Complex64::new(0.0, 0.0); nt * nt * ns];
    for a in 0..nt {
        for c in 0..nt {
            let row = &matrix[c * ns..(c + 1) * ns];
            let out = &mut stage2[(a * nt + c) * ns..(a * nt + c + 1) * ns];
            for (b, &w) in row.iter().enumerate() {
                let inp = &stage1[(a * ns + b) * ns..(a * ns + b + 1) * ns];
                out.iter_mut().zip(inp).for_each(|(o, v)| *o += v * w);
            }
        }
    }
    // axis 2
    let mut out = vec![Complex64::new(0.0, 0.0); nt * nt * nt];
    for (line_out, line_in) in out.chunks_exact_mut(nt).zip(stage2.chunks_exact(ns)) {
        for (c, o) in line_out.iter_mut().enumerate() {
            let row = &matrix[c * ns..(c + 1) * ns];
            *o = row.iter().zip(line_in).map(|(&w, v)| v * w).sum();
        }
    }
    Field3::from_values(*target, out).expect("sizes match")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid3, sigma: f64, c: [f64; 3]) -> Field3 {
        Field3::from_real_fn(grid, |x| {
            let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
            (-r2 / (2.0 * sigma * sigma)).exp()
        })
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = Grid3::new(16, 6.0).unwrap();
        let sp = Spectral::new(g);
        let f = Field3::from_fn(g, |x| Complex64::new((x[0] * 1.3).sin() + x[1], x[2].cos() * x[0]));
        let c = sp.forward(&f);
        let p_phys: f64 = f.values().iter().map(|z| z.norm_sqr()).sum();
        let p_four: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        assert!((p_phys - p_four).abs() <= 1e-12 * p_phys);
        let back = sp.inverse(c, g);
        let err = back.sub(&f).unwrap().max_abs() / f.max_abs();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = Grid3::new(8, 3.0).unwrap();
        let sp = Spectral::new(g);
        let f = Field3::from_real_fn(g, |_| 3.5);
        for d in sp.gradient(&f).unwrap() {
            assert!(d.max_abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_derivative_is_exact() {
        let g = Grid3::new(16, 5.0).unwrap();
        let sp = Spectral::new(g);
        let kk = 2.0 * PI / 5.0;
        let f = Field3::from_real_fn(g, |x| (kk * x[0]).sin());
        let d = sp.gradient(&f).unwrap();
        let exact = Field3::from_real_fn(g, |x| kk * (kk * x[0]).cos());
        assert!(d[0].sub(&exact).unwrap().max_abs() < 1e-13);
        assert!(d[1].max_abs() < 1e-13 && d[2].max_abs() < 1e-13);
    }

    #[test]
    fn gradient_matches_fourth_order_differences() {
        // the spectral derivative is exact to round-off here; fourth-order
        // differences converge to it like h^4
        let mut errors = Vec::new();
        for &n in &[32usize, 64] {
            let g = Grid3::new(n, 12.0).unwrap();
            let sp = Spectral::new(g);
            let f = gaussian(g, 1.0, [0.3, -0.2, 0.1]);
            let d = sp.gradient(&f).unwrap();
            let h = g.spacing();
            let mut err: f64 = 0.0;
            for idx in 0..g.len() {
                let (i, j, k) = g.unravel(idx);
                let at = |ii: i64| f.values()[g.index((i as i64 + ii).rem_euclid(n as i64) as usize, j, k)].re;
                let fd = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
                err = err.max((fd - d[0].values()[idx].re).abs());
            }
            errors.push(err);
        }
        let order = (errors[0] / errors[1]).log2();
        assert!(order > 3.7 && order < 4.4, "observed order {order}, errors {errors:?}");
    }

    #[test]
    fn translate_identities() {
        let g = Grid3::new(16, 8.0).unwrap();
        let sp = Spectral::new(g);
        let f = gaussian(g, 0.9, [0.0; 3]);
        assert_eq!(sp.translate(&f, [0.0; 3]).unwrap(), f);
        let h = g.spacing();
        let shifted = sp.translate(&f, [h, 0.0, -2.0 * h]).unwrap();
        let rolled = f.roll([1, 0, -2]);
        assert!(shifted.sub(&rolled).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn translate_matches_shifted_gaussian() {
        let g = Grid3::new(48, 16.0).unwrap();
        let sp = Spectral::new(g);
        let f = gaussian(g, 1.0, [0.0; 3]);
        let a = 0.3 * g.spacing();
        let t = sp.translate(&f, [a, -a, 0.5 * a]).unwrap();
        let exact = gaussian(g, 1.0, [a, -a, 0.5 * a]);
        let err = t.sub(&exact).unwrap().max_abs();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn coulomb_of_zero_is_zero() {
        let g = Grid3::new(8, 4.0).unwrap();
        let sp = Spectral::new(g);
        let p = sp.coulomb_convolve(&Field3::zeros(g)).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn coulomb_rejects_complex_density() {
        let g = Grid3::new(8, 4.0).unwrap();
        let sp = Spectral::new(g);
        let f = Field3::from_fn(g, |x| Complex64::new(1.0, x[0]));
        assert!(matches!(sp.coulomb_convolve(&f), Err(Error::ComplexInput(_))));
        let other = Field3::zeros(Grid3::new(8, 5.0).unwrap());
        assert!(matches!(sp.coulomb_convolve(&other), Err(Error::GridMismatch)));
    }

    #[test]
    fn resample_is_exact_for_band_limited_data() {
        let g = Grid3::new(24, 16.0).unwrap();
        let t = Grid3::new(36, 16.0).unwrap();
        let sp = Spectral::new(g);
        let f = gaussian(g, 1.2, [0.0; 3]);
        let up = sp.resample(&f, &t).unwrap();
        let exact = gaussian(t, 1.2, [0.0; 3]);
        assert!(up.sub(&exact).unwrap().max_abs() < 1e-6);
        let down = Spectral::new(t).resample(&up, &g).unwrap();
        assert!(down.sub(&f).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn dilated_resampling_of_gaussian() {
        let g = Grid3::new(48, 24.0).unwrap();
        let f = gaussian(g, 1.0, [0.0; 3]);
        let out = resample_dilated(&f, &g, 0.8);
        let exact = gaussian(g, 1.25, [0.0; 3]);
        let err = out.sub(&exact).unwrap().max_abs();
        assert!(err < 1e-8, "{err}");
        let same = resample_dilated(&f, &g, 1.0);
        assert!(same.sub(&f).unwrap().max_abs() < 1e-12);
    }
}
