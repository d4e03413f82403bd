//! Distance of a field to the soliton orbit `{e^{iθ} r(· − x)}` in H¹, its
//! minimization over `(x, θ)`, and the energy-excess experiment around `r`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field3;
use crate::ground_state::GroundState;
use crate::observables::{energy, h1_inner, h1_norm};
use crate::random::{random_field, ENVELOPE_WIDTH};
use crate::spectral::Spectral;

/// Relative mass mismatch above which minimization warns.
const MASS_WARNING: f64 = 1e-2;

/// `Υ(x, θ) = ‖φ − e^{iθ} r(· − x)‖²_{H¹}` for a fixed ground state.
///
/// With `κ = (1 − ½Δ)r` the H¹ pairing against a translate is an L² pairing,
/// `⟨φ, r(· − x)⟩_{H¹} = ∫ φ̄(y) κ(y − x) dy =: C(x)`, so
/// `Υ = ‖φ‖² + ‖r‖² − 2 Re(e^{iθ} C(x))` and all lattice shifts come from
/// one FFT.
#[derive(Debug, Clone)]
pub struct Modulation {
    sp: Spectral,
    kappa_hat: Vec<Complex64>,
    ground_norm_sqr: f64,
    ground_mass: f64,
    ground_energy: f64,
}

/// `φ̂` paired with `κ̂`, ready for point evaluations of `C` and its derivatives.
struct Correlation {
    g: Vec<Complex64>,
    phi_norm_sqr: f64,
    center: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationFrame {
    pub x_star: [f64; 3],
    pub theta_star: f64,
    /// `Υ(x*, θ*)^{1/2}`.
    pub distance: f64,
    pub converged: bool,
    pub n_restarts_used: usize,
    /// `|∇Υ|` at the optimum over `‖φ‖² + ‖r‖²`.
    pub gradient_norm: f64,
}

impl Modulation {
    pub fn new(state: &GroundState) -> Result<Self> {
        let sp = Spectral::new(*state.grid());
        let r = &state.field;
        let kappa = sp.apply_real_multiplier(r, |idx| 1.0 + 0.5 * sp.k_squared(idx))?;
        let ground_norm_sqr = r.real_inner(&kappa)?;
        let kappa_hat = sp.forward(&kappa);
        let ground_energy = energy(&sp, r)?;
        Ok(Self { kappa_hat, ground_norm_sqr, ground_mass: r.norm_sqr(), ground_energy, sp })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.sp
    }

    /// `‖r‖²_{H¹}`.
    pub fn ground_norm_sqr(&self) -> f64 {
        self.ground_norm_sqr
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    fn prepare(&self, phi: &Field3) -> Result<Correlation> {
        if !phi.grid().same_lattice(self.sp.grid()) {
            return Err(Error::GridMismatch);
        }
        let phi_hat = self.sp.forward(phi);
        let w = self.sp.grid().cell_volume();
        let g = phi_hat.iter().zip(&self.kappa_hat).map(|(p, k)| p.conj() * k * w).collect();
        Ok(Correlation { g, phi_norm_sqr: h1_inner(&self.sp, phi, phi)?, center: phi.grid().center() })
    }

    /// `C`, `∇C` and `∇∇C` at the absolute position `x`.
    fn evaluate(&self, c: &Correlation, x: [f64; 3], hessian: bool) -> (Complex64, [Complex64; 3], [[Complex64; 3]; 3]) {
        let n = self.sp.grid().n();
        let k = self.sp.wavenumbers();
        let d = [x[0] - c.center[0], x[1] - c.center[1], x[2] - c.center[2]];
        let phase: Vec<Vec<Complex64>> =
            (0..3).map(|a| k.iter().map(|&kk| Complex64::from_polar(1.0, -kk * d[a])).collect()).collect();
        let zero = Complex64::new(0.0, 0.0);
        let mut val = zero;
        let mut grad = [zero; 3];
        let mut hess = [[zero; 3]; 3];
        let mi = Complex64::new(0.0, -1.0);
        for i in 0..n {
            // per-plane partial sums weighted by powers of (−i k_y), (−i k_z)
            let mut p = [zero; 6]; // 1, ky, kz, ky², kz², ky kz
            for j in 0..n {
                let row = &c.g[(i * n + j) * n..(i * n + j + 1) * n];
                let mut s0 = zero;
                let mut s1 = zero;
                let mut s2 = zero;
                for l in 0..n {
                    let t = row[l] * phase[2][l];
                    s0 += t;
                    s1 += t * k[l];
                    s2 += t * (k[l] * k[l]);
                }
                let e = phase[1][j];
                let kj = k[j];
                p[0] += s0 * e;
                p[1] += s0 * e * kj;
                p[2] += s1 * e;
                if hessian {
                    p[3] += s0 * e * (kj * kj);
                    p[4] += s2 * e;
                    p[5] += s1 * e * kj;
                }
            }
            let e = phase[0][i];
            let ki = k[i];
            val += p[0] * e;
            grad[0] += p[0] * e * ki;
            grad[1] += p[1] * e;
            grad[2] += p[2] * e;
            if hessian {
                hess[0][0] += p[0] * e * (ki * ki);
                hess[1][1] += p[3] * e;
                hess[2][2] += p[4] * e;
                hess[0][1] += p[1] * e * ki;
                hess[0][2] += p[2] * e * ki;
                hess[1][2] += p[5] * e;
            }
        }
        let grad = grad.map(|g| g * mi);
        for a in 0..3 {
            for b in a..3 {
                hess[a][b] = -hess[a][b];
                hess[b][a] = hess[a][b];
            }
        }
        (val, grad, hess)
    }

    pub fn upsilon(&self, phi: &Field3, x: [f64; 3], theta: f64) -> Result<f64> {
        let c = self.prepare(phi)?;
        let (v, _, _) = self.evaluate(&c, x, false);
        Ok(c.phi_norm_sqr + self.ground_norm_sqr - 2.0 * (Complex64::from_polar(1.0, theta) * v).re)
    }

    /// `(∂Υ/∂x, ∂Υ/∂θ)`.
    pub fn upsilon_grad(&self, phi: &Field3, x: [f64; 3], theta: f64) -> Result<([f64; 3], f64)> {
        let c = self.prepare(phi)?;
        let (v, g, _) = self.evaluate(&c, x, false);
        let e = Complex64::from_polar(1.0, theta);
        Ok((g.map(|gj| -2.0 * (e * gj).re), 2.0 * (e * v).im))
    }

    /// `C` at every lattice shift, as a field whose sample at position `y`
    /// is the H¹ pairing of `φ` with `r` centered at `y`.
    pub fn correlation_scan(&self, phi: &Field3) -> Result<Field3> {
        let c = self.prepare(phi)?;
        self.scan(&c)
    }

    fn scan(&self, c: &Correlation) -> Result<Field3> {
        let mut data = c.g.clone();
        // Σ_k g_k e^{−ik·mh} is an unnormalized forward transform
        self.sp.fft3_in_place(&mut data, false);
        let grid = self.sp.grid().recentered(c.center);
        let n = grid.n();
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        let shift = |m: usize| (m + n / 2) % n;
        for (idx, v) in data.iter().enumerate() {
            let (i, j, l) = grid.unravel(idx);
            out[grid.index(shift(i), shift(j), shift(l))] = *v;
        }
        Field3::from_values(grid, out)
    }

    /// Global minimizer of `Υ`: lattice scan of `|C|`, then damped Newton on
    /// `(x, θ)` from the best few local maxima.
    pub fn minimize(&self, phi: &Field3) -> Result<ModulationFrame> {
        let mass = phi.norm_sqr();
        if (mass - self.ground_mass).abs() > MASS_WARNING * self.ground_mass {
            log::warn!("modulation of a field with mass {mass:.6} (ground state {:.6})", self.ground_mass);
        }
        let c = self.prepare(phi)?;
        let seeds = local_maxima(&self.scan(&c)?, 4);
        let scale = c.phi_norm_sqr + self.ground_norm_sqr;
        let mut best: Option<ModulationFrame> = None;
        for (attempt, (x0, c0)) in seeds.iter().enumerate() {
            let frame = self.refine(&c, *x0, -c0.arg(), scale, attempt + 1);
            if best.is_none_or(|b| frame.distance < b.distance) {
                best = Some(frame);
            }
        }
        best.ok_or_else(|| Error::InvalidArgument("empty correlation scan".into()))
    }

    fn refine(&self, c: &Correlation, mut x: [f64; 3], mut theta: f64, scale: f64, restarts: usize) -> ModulationFrame {
        let value = |v: Complex64, th: f64| scale - 2.0 * (Complex64::from_polar(1.0, th) * v).re;
        let (mut v, mut g, mut h) = self.evaluate(c, x, true);
        let mut converged = false;
        let mut gnorm = f64::INFINITY;
        for _ in 0..60 {
            let e = Complex64::from_polar(1.0, theta);
            let grad = [-2.0 * (e * g[0]).re, -2.0 * (e * g[1]).re, -2.0 * (e * g[2]).re, 2.0 * (e * v).im];
            gnorm = grad.iter().map(|a| a * a).sum::<f64>().sqrt() / scale;
            if gnorm < 1e-13 {
                converged = true;
                break;
            }
            let mut hm = nalgebra::Matrix4::zeros();
            for a in 0..3 {
                for b in 0..3 {
                    hm[(a, b)] = -2.0 * (e * h[a][b]).re;
                }
                hm[(a, 3)] = 2.0 * (e * g[a]).im;
                hm[(3, a)] = hm[(a, 3)];
            }
            hm[(3, 3)] = 2.0 * (e * v).re;
            let gv = nalgebra::Vector4::from(grad);
            let step = match hm.cholesky() {
                Some(ch) => -ch.solve(&gv),
                None => -gv / hm.norm().max(scale),
            };
            let f0 = value(v, theta);
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-8 {
                let xn = [x[0] + t * step[0], x[1] + t * step[1], x[2] + t * step[2]];
                let thn = theta + t * step[3];
                let (vn, gn, hn) = self.evaluate(c, xn, true);
                if value(vn, thn) <= f0 + 1e-15 * scale {
                    (x, theta, v, g, h) = (xn, thn, vn, gn, hn);
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // at the round-off floor of Υ
                converged = gnorm < 1e-8;
                break;
            }
        }
        let upsilon = value(v, theta).max(0.0);
        ModulationFrame {
            x_star: x,
            theta_star: theta.rem_euclid(TAU),
            distance: upsilon.sqrt(),
            converged,
            n_restarts_used: restarts,
            gradient_norm: gnorm,
        }
    }

    /// Mass-preserving perturbation `φ = (r + a ξ)·‖r‖/‖r + a ξ‖`, with
    /// `ξ` a random field of unit H¹ norm in the requested sector.
    pub fn perturb<R: Rng + ?Sized>(
        &self,
        state: &GroundState,
        amplitude: f64,
        sector: PerturbationSector,
        rng: &mut R,
    ) -> Result<Field3> {
        let raw = random_field(rng, &self.sp, ENVELOPE_WIDTH, sector == PerturbationSector::Complex);
        let xi = match sector {
            PerturbationSector::Imaginary => raw.scale_complex(Complex64::new(0.0, 1.0)),
            _ => raw,
        };
        let xi = xi.scale(1.0 / h1_norm(&self.sp, &xi)?);
        let phi = state.field.axpy(amplitude, &xi)?;
        Ok(phi.scale((self.ground_mass / phi.norm_sqr()).sqrt()))
    }
}

/// Lattice positions and values of the `count` largest local maxima of `|C|`.
fn local_maxima(scan: &Field3, count: usize) -> Vec<([f64; 3], Complex64)> {
    let grid = scan.grid();
    let n = grid.n();
    let v = scan.values();
    let wrap = |i: usize, d: i64| ((i as i64 + d).rem_euclid(n as i64)) as usize;
    let mut peaks: Vec<(usize, f64)> = (0..grid.len())
        .filter_map(|idx| {
            let (i, j, l) = grid.unravel(idx);
            let a = v[idx].norm();
            let is_max = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
                .iter()
                .all(|&(di, dj, dl)| v[grid.index(wrap(i, di), wrap(j, dj), wrap(l, dl))].norm() <= a);
            is_max.then_some((idx, a))
        })
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.truncate(count.max(1));
    peaks.into_iter().map(|(idx, _)| (grid.position(idx), v[idx])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationSector {
    /// Real perturbations (the `L₊` sector).
    Real,
    /// Purely imaginary perturbations (the `L₋` sector).
    Imaginary,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub d_target: f64,
    pub d_star: f64,
    pub delta_e: f64,
    pub ratio: f64,
    pub seed: u64,
}

/// Energy excess `𝓔(φ) − 𝓔(r)` against the squared orbit distance for
/// `n_per_distance` perturbations at each target amplitude. Sample `i` at
/// distance index `j` uses the seed `seed + j·n_per_distance + i`.
pub fn coercivity_experiment(
    state: &GroundState,
    distances: &[f64],
    n_per_distance: usize,
    sector: PerturbationSector,
    seed: u64,
) -> Result<Vec<ExperimentRow>> {
    let m = Modulation::new(state)?;
    let ground_h1 = m.ground_norm_sqr().sqrt();
    let mut rows = Vec::with_capacity(distances.len() * n_per_distance);
    for (j, &d) in distances.iter().enumerate() {
        if !(d > 0.0 && d <= ground_h1) {
            return Err(Error::InvalidArgument(format!("target distance {d} outside (0, ‖r‖]")));
        }
        for i in 0..n_per_distance {
            let s = seed + (j * n_per_distance + i) as u64;
            let phi = m.perturb(state, d, sector, &mut ChaCha8Rng::seed_from_u64(s))?;
            let frame = m.minimize(&phi)?;
            if frame.distance <= 0.0 {
                return Err(Error::DegeneratePerturbation);
            }
            let delta_e = energy(m.spectral(), &phi)? - m.ground_energy();
            rows.push(ExperimentRow {
                d_target: d,
                d_star: frame.distance,
                delta_e,
                ratio: delta_e / (frame.distance * frame.distance),
                seed: s,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests;
