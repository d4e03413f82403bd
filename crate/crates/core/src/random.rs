//! Seeded random test fields.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::field::Field3;
use crate::spectral::Spectral;

/// Default width of the Gaussian envelope applied to random fields.
pub const ENVELOPE_WIDTH: f64 = 3.0;

/// Random field with Fourier amplitudes `∝ (1 + |k|²)^{−3/2}` (so it lies in
/// H¹ with room to spare), localized by `exp(−|x − c|²/2w²)` around the grid
/// center. Real when `complex` is false.
pub fn random_field<R: Rng + ?Sized>(rng: &mut R, sp: &Spectral, width: f64, complex: bool) -> Field3 {
    let grid = *sp.grid();
    let mut c: Vec<Complex64> = (0..grid.len())
        .map(|idx| {
            let a = (1.0 + sp.k_squared(idx)).powf(-1.5);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * a
        })
        .collect();
    sp.inverse_in_place(&mut c);
    let center = grid.center();
    let field = Field3::from_values(grid, c).expect("sizes match");
    field.map_with_position(|x, z| {
        let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) + (x[2] - center[2]).powi(2);
        let z = if complex { z } else { Complex64::new(z.re, 0.0) };
        z * (-r2 / (2.0 * width * width)).exp()
    })
}
