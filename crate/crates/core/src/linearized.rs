//! The linearized operators `L₊`, `L₋` around the ground state, the fields
//! `Ξ_j = ∂_j(Φ_r r)`, constraint projections and coercivity probes.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field3;
use crate::ground_state::GroundState;
use crate::observables::h1_inner;
use crate::random::{random_field, ENVELOPE_WIDTH};
use crate::spectral::{Spectral, REAL_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Plus,
    Minus,
}

/// `L₋η = −½Δη + η − Φ_r η` and `L₊η = L₋η − 2(|x|⁻¹*(rη))r`.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    kind: Sector,
    sp: Spectral,
    r: Field3,
    phi_r: Field3,
}

impl LinearizedOperator {
    pub fn new(state: &GroundState, kind: Sector) -> Result<Self> {
        let sp = Spectral::new(*state.grid());
        let phi_r = sp.coulomb_convolve(&state.field.density())?;
        Ok(Self { kind, sp, r: state.field.clone(), phi_r })
    }

    pub fn kind(&self) -> Sector {
        self.kind
    }

    pub fn spectral(&self) -> &Spectral {
        &self.sp
    }

    pub fn ground(&self) -> &Field3 {
        &self.r
    }

    /// `Φ_r = |x|⁻¹ * r²`.
    pub fn potential(&self) -> &Field3 {
        &self.phi_r
    }

    pub fn apply(&self, eta: &Field3) -> Result<Field3> {
        eta.ensure_real(REAL_TOLERANCE)?;
        let lap = self.sp.laplacian(eta)?;
        let mut out = eta.zip_map(&lap, |e, l| e - 0.5 * l)?.sub(&self.phi_r.mul(eta)?)?;
        if self.kind == Sector::Plus {
            let exchange = self.sp.coulomb_convolve(&self.r.mul(eta)?)?;
            out.axpy_in_place(-2.0, &exchange.mul(&self.r)?)?;
        }
        Ok(out.real())
    }
}

/// `Ξ_j(r) = ∂_j((|x|⁻¹*r²)r)`, differentiated as a single product.
pub fn xi_fields(state: &GroundState) -> Result<[Field3; 3]> {
    let sp = Spectral::new(*state.grid());
    let phi = sp.coulomb_convolve(&state.field.density())?;
    let g = sp.gradient(&phi.mul(&state.field)?)?;
    Ok(g.map(|f| f.real()))
}

/// Constraint subspaces for the coercivity statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `(u, r) = (u, Ξ_j) = 0` in L², for `L₊`.
    PlusOnV0,
    /// `(v, r)_{H¹} = 0`, for `L₋`.
    MinusOnRPerp,
    /// `(u, r) = 0` only: admits the kernel of `L₊` (negative control).
    PlusOnRPerp,
}

impl ConstraintKind {
    pub fn sector(self) -> Sector {
        match self {
            ConstraintKind::PlusOnV0 | ConstraintKind::PlusOnRPerp => Sector::Plus,
            ConstraintKind::MinusOnRPerp => Sector::Minus,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ConstraintKind::PlusOnV0 => "plus_on_v0",
            ConstraintKind::MinusOnRPerp => "minus_on_r_perp",
            ConstraintKind::PlusOnRPerp => "plus_on_r_perp",
        }
    }
}

/// Relative eigenvalue cutoff of the constraint Gram matrix.
pub const GRAM_CUTOFF: f64 = 1e-12;

/// Orthogonal projector onto a constraint subspace.
#[derive(Debug, Clone)]
pub struct Constraints {
    kind: ConstraintKind,
    sp: Spectral,
    /// Raw constraint fields, for reporting.
    raw: Vec<Field3>,
    /// Orthonormal basis of their span in the relevant inner product.
    basis: Vec<Field3>,
}

impl Constraints {
    pub fn new(state: &GroundState, kind: ConstraintKind) -> Result<Self> {
        let sp = Spectral::new(*state.grid());
        let r = state.field.real();
        let raw = match kind {
            ConstraintKind::PlusOnV0 => {
                let mut v = vec![r];
                v.extend(xi_fields(state)?);
                v
            }
            ConstraintKind::PlusOnRPerp | ConstraintKind::MinusOnRPerp => vec![r],
        };
        let mut c = Self { kind, sp, raw, basis: Vec::new() };
        c.basis = c.orthonormalize()?;
        Ok(c)
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    fn pairing(&self, a: &Field3, b: &Field3) -> Result<f64> {
        match self.kind {
            ConstraintKind::MinusOnRPerp => h1_inner(&self.sp, a, b),
            _ => a.real_inner(b),
        }
    }

    /// Symmetric eigendecomposition of the Gram matrix, `q_k = Σ_j V_jk b_j/√μ_k`.
    fn orthonormalize(&self) -> Result<Vec<Field3>> {
        let m = self.raw.len();
        let mut gram = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = self.pairing(&self.raw[i], &self.raw[j])?;
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(gram);
        let top = eig.eigenvalues.max();
        let low = eig.eigenvalues.min();
        if !(low > GRAM_CUTOFF * top) {
            return Err(Error::SingularGram(low / top));
        }
        let grid = *self.raw[0].grid();
        Ok((0..m)
            .map(|k| {
                let mut q = Field3::zeros(grid);
                for j in 0..m {
                    q.axpy_in_place(eig.eigenvectors[(j, k)] / eig.eigenvalues[k].sqrt(), &self.raw[j])
                        .expect("same grid");
                }
                q
            })
            .collect())
    }

    /// Removes the Lagrange-multiplier directions from a residual `Lu − σBu`:
    /// the constraint fields themselves for L² constraints, nothing for the
    /// H¹ one (there they are `B r`, which the H¹ projection removes after `B⁻¹`).
    pub fn project_dual(&self, rho: &Field3) -> Result<Field3> {
        match self.kind {
            ConstraintKind::MinusOnRPerp => Ok(rho.real()),
            _ => self.project(rho),
        }
    }

    pub fn project(&self, eta: &Field3) -> Result<Field3> {
        let mut out = eta.real();
        for q in &self.basis {
            let c = self.pairing(&out, q)?;
            out.axpy_in_place(-c, q)?;
        }
        Ok(out)
    }

    /// Constraint pairings of `eta` with each raw constraint field, relative
    /// to the product of norms.
    pub fn residuals(&self, eta: &Field3) -> Result<Vec<f64>> {
        let ne = self.pairing(eta, eta)?.sqrt().max(f64::MIN_POSITIVE);
        self.raw
            .iter()
            .map(|c| Ok(self.pairing(eta, c)?.abs() / (ne * self.pairing(c, c)?.sqrt())))
            .collect()
    }
}

/// Projects onto the constraint subspace of `kind`.
pub fn project_constraints(state: &GroundState, eta: &Field3, kind: ConstraintKind) -> Result<Field3> {
    Constraints::new(state, kind)?.project(eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeOptions {
    pub max_iter: usize,
    /// Stop once the dual norm of the eigen-residual falls below this.
    pub tol: f64,
    /// Random fields tried by the sampling fallback.
    pub samples: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { max_iter: 400, tol: 1e-5, samples: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMethod {
    Krylov,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub kind: ConstraintKind,
    /// Smallest `(Lu,u)/‖u‖²` found, with the H¹ norm (½ on the gradient).
    pub min_rayleigh: f64,
    pub method: ProbeMethod,
    pub n_probes: usize,
    pub grid_level: usize,
    pub box_length: f64,
    pub krylov_min: f64,
    pub sampled_min: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Quotients below this are treated as round-off around zero.
const NEGATIVE_SLACK: f64 = 1e-8;

/// `(Lu,u)/‖u‖²_{H¹}`.
pub fn rayleigh_quotient(op: &LinearizedOperator, u: &Field3) -> Result<f64> {
    let lu = op.apply(u)?;
    Ok(lu.real_inner(u)? / h1_inner(&op.sp, u, u)?)
}

/// Quotients of `n` random fields projected onto the constraint subspace.
pub fn sample_quotients<R: Rng + ?Sized>(
    op: &LinearizedOperator,
    constraints: &Constraints,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    (0..n)
        .map(|_| {
            let u = constraints.project(&random_field(rng, &op.sp, ENVELOPE_WIDTH, false))?;
            rayleigh_quotient(op, &u)
        })
        .collect()
}

/// Minimizes the constrained Rayleigh quotient `(Lu,u)/(u,Bu)`, `B = 1 − ½Δ`,
/// by locally optimal preconditioned conjugate gradients (Rayleigh–Ritz on
/// the current iterate, the `B⁻¹`-preconditioned residual and the previous
/// direction, all projected), then compares with best-of-N sampling.
pub fn coercivity_probe<R: Rng + ?Sized>(
    op: &LinearizedOperator,
    constraints: &Constraints,
    opts: &ProbeOptions,
    rng: &mut R,
) -> Result<CoercivityReport> {
    if constraints.kind().sector() != op.kind() {
        return Err(Error::InvalidArgument("constraint set belongs to the other operator".into()));
    }
    let sp = &op.sp;
    let b = |u: &Field3| sp.apply_real_multiplier(u, |idx| 1.0 + 0.5 * sp.k_squared(idx)).map(|f| f.real());
    let b_inv = |u: &Field3| sp.apply_real_multiplier(u, |idx| 1.0 / (1.0 + 0.5 * sp.k_squared(idx))).map(|f| f.real());

    let mut x = constraints.project(&random_field(rng, sp, ENVELOPE_WIDTH, false))?;
    let mut bx = b(&x)?;
    let s = 1.0 / x.real_inner(&bx)?.sqrt();
    x = x.scale(s);
    bx = bx.scale(s);
    let mut lx = op.apply(&x)?;
    let mut sigma = lx.real_inner(&x)?;
    let mut prev: Option<(Field3, Field3, Field3)> = None;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let rho = lx.axpy(-sigma, &bx)?;
        let w = constraints.project(&b_inv(&constraints.project_dual(&rho)?)?)?;
        let bw = b(&w)?;
        residual = w.real_inner(&bw)?.max(0.0).sqrt();
        if residual < opts.tol {
            break;
        }
        iterations += 1;
        let lw = op.apply(&w)?;
        let mut vecs = vec![(x.clone(), lx.clone(), bx.clone()), (w, lw, bw)];
        if let Some(p) = prev.take() {
            vecs.push(p);
        }
        let m = vecs.len();
        let mut a = DMatrix::zeros(m, m);
        let mut g = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] = 0.5 * (vecs[i].0.real_inner(&vecs[j].1)? + vecs[j].0.real_inner(&vecs[i].1)?);
                g[(i, j)] = 0.5 * (vecs[i].0.real_inner(&vecs[j].2)? + vecs[j].0.real_inner(&vecs[i].2)?);
            }
        }
        let coef = smallest_ritz_vector(&a, &g)?;
        let grid = *x.grid();
        let combine = |k: usize, from: usize| -> Result<Field3> {
            let mut out = Field3::zeros(grid);
            for i in from..m {
                let f = match k {
                    0 => &vecs[i].0,
                    1 => &vecs[i].1,
                    _ => &vecs[i].2,
                };
                out.axpy_in_place(coef[i], f)?;
            }
            Ok(out)
        };
        let p = (combine(0, 1)?, combine(1, 1)?, combine(2, 1)?);
        x = constraints.project(&combine(0, 0)?)?;
        lx = combine(1, 0)?;
        bx = combine(2, 0)?;
        let norm = x.real_inner(&bx)?.sqrt();
        x = x.scale(1.0 / norm);
        lx = lx.scale(1.0 / norm);
        bx = bx.scale(1.0 / norm);
        sigma = lx.real_inner(&x)?;
        let pn = p.0.real_inner(&p.2)?.sqrt();
        if pn > 0.0 {
            prev = Some((p.0.scale(1.0 / pn), p.1.scale(1.0 / pn), p.2.scale(1.0 / pn)));
        }
        log::debug!("probe {}: σ={sigma:.10} residual={residual:.3e}", iterations);
    }
    // report the quotient of the final, projected iterate evaluated afresh
    let krylov_min = rayleigh_quotient(op, &x)?;
    let samples = sample_quotients(op, constraints, opts.samples, rng)?;
    let sampled_min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let (min_rayleigh, method) = if sampled_min < krylov_min {
        (sampled_min, ProbeMethod::Sampled)
    } else {
        (krylov_min, ProbeMethod::Krylov)
    };
    if min_rayleigh < -NEGATIVE_SLACK {
        return Err(Error::NegativeQuotient(min_rayleigh));
    }
    let grid = sp.grid();
    Ok(CoercivityReport {
        kind: constraints.kind(),
        min_rayleigh,
        method,
        n_probes: iterations + opts.samples,
        grid_level: grid.n(),
        box_length: grid.box_length(),
        krylov_min,
        sampled_min,
        iterations,
        residual,
        converged: residual < opts.tol,
    })
}

/// Coefficients of the lowest eigenvector of the pencil `(a, g)`, with `g`
/// symmetric positive semidefinite; nearly dependent directions are dropped.
fn smallest_ritz_vector(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<Vec<f64>> {
    let eg = SymmetricEigen::new(g.clone());
    let top = eg.eigenvalues.max();
    let keep: Vec<usize> = (0..g.nrows()).filter(|&i| eg.eigenvalues[i] > 1e-12 * top).collect();
    if keep.is_empty() {
        return Err(Error::SingularGram(0.0));
    }
    let t = DMatrix::from_fn(g.nrows(), keep.len(), |i, j| {
        eg.eigenvectors[(i, keep[j])] / eg.eigenvalues[keep[j]].sqrt()
    });
    let c = t.transpose() * a * &t;
    let ec = SymmetricEigen::new(0.5 * (&c + c.transpose()));
    let k = ec.eigenvalues.imin();
    let y = ec.eigenvectors.column(k);
    let coef = &t * y;
    Ok(coef.iter().copied().collect())
}

/// Operator and integral identities that pin the ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `‖L₋r‖₂/‖r‖₂`.
    pub minus_kernel: f64,
    /// `‖L₊∂_j r‖₂/‖∂_j r‖₂`.
    pub plus_kernel: [f64; 3],
    /// `‖L₊(x·∇r) + Δr‖₂/‖Δr‖₂`.
    pub dilation: f64,
    /// `‖L₊(x·∇r) + Δr − 2Φ_r r‖₂/‖Δr‖₂`: the commutator of the dilation
    /// generator with the Hartree term contributes `2Φ_r r`.
    pub dilation_with_hartree: f64,
    /// `‖L₊r + 2Φ_r r‖₂/‖2Φ_r r‖₂`.
    pub plus_on_ground: f64,
    /// `|(Ξ_j, r)|/(‖Ξ_j‖₂‖r‖₂)`.
    pub xi_ground: [f64; 3],
    /// `max_{j≠h} |(Ξ_j, ∂_h r)|/(‖Ξ_j‖₂‖∂_h r‖₂)`.
    pub xi_cross: f64,
    /// `|(Ξ_h, ∂_h r) − ‖∂_h r‖²_{H¹}|/‖∂_h r‖²_{H¹}`.
    pub xi_diagonal: [f64; 3],
    /// `|(x·∇r, r) + (3/2)‖r‖₂²|/((3/2)‖r‖₂²)`.
    pub dilation_pairing: f64,
}

pub fn identity_report(state: &GroundState) -> Result<IdentityReport> {
    let plus = LinearizedOperator::new(state, Sector::Plus)?;
    let minus = LinearizedOperator::new(state, Sector::Minus)?;
    let sp = &plus.sp;
    let r = &plus.r;
    let grad = sp.gradient(r)?.map(|f| f.real());
    let lap = sp.laplacian(r)?.real();
    let c = state.grid().center();
    let mut dil = Field3::zeros(*state.grid());
    for (j, g) in grad.iter().enumerate() {
        dil = dil.add(&g.map_with_position(|x, z| z * (x[j] - c[j])))?;
    }
    let phir = plus.phi_r.mul(r)?.scale(2.0);
    let xi = xi_fields(state)?;
    let h1 = |f: &Field3| h1_inner(sp, f, f);
    let mut plus_kernel = [0.0; 3];
    let mut xi_ground = [0.0; 3];
    let mut xi_diagonal = [0.0; 3];
    let mut xi_cross: f64 = 0.0;
    for j in 0..3 {
        plus_kernel[j] = plus.apply(&grad[j])?.norm() / grad[j].norm();
        xi_ground[j] = xi[j].real_inner(r)?.abs() / (xi[j].norm() * r.norm());
        let d = h1(&grad[j])?;
        xi_diagonal[j] = (xi[j].real_inner(&grad[j])? - d).abs() / d;
        for (h, g) in grad.iter().enumerate() {
            if h != j {
                xi_cross = xi_cross.max(xi[j].real_inner(g)?.abs() / (xi[j].norm() * g.norm()));
            }
        }
    }
    let m = r.norm_sqr();
    let plus_dil = plus.apply(&dil)?;
    Ok(IdentityReport {
        minus_kernel: minus.apply(r)?.norm() / r.norm(),
        plus_kernel,
        dilation: plus_dil.add(&lap)?.norm() / lap.norm(),
        dilation_with_hartree: plus_dil.add(&lap)?.sub(&phir)?.norm() / lap.norm(),
        plus_on_ground: plus.apply(r)?.add(&phir)?.norm() / phir.norm(),
        xi_ground,
        xi_cross,
        xi_diagonal,
        dilation_pairing: (dil.real_inner(r)? + 1.5 * m).abs() / (1.5 * m),
    })
}

#[cfg(test)]
mod tests;
