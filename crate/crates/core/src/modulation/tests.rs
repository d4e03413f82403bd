use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use super::*;
use crate::grid::Grid3;
use crate::testing::coarse_run;

fn state() -> &'static GroundState {
    &coarse_run().state
}

fn modulation() -> Modulation {
    Modulation::new(state()).unwrap()
}

fn orbit_member(m: &Modulation, x: [f64; 3], theta: f64) -> Field3 {
    m.spectral().translate(&state().field, x).unwrap().scale_complex(Complex64::from_polar(1.0, theta))
}

fn random_complex(m: &Modulation, seed: u64) -> Field3 {
    random_field(&mut ChaCha8Rng::seed_from_u64(seed), m.spectral(), ENVELOPE_WIDTH, true)
}

/// `‖φ − e^{iθ} r(· − x)‖²_{H¹}` from the definition.
fn direct_upsilon(m: &Modulation, phi: &Field3, x: [f64; 3], theta: f64) -> f64 {
    let diff = phi.sub(&orbit_member(m, x, theta)).unwrap();
    h1_inner(m.spectral(), &diff, &diff).unwrap()
}

#[test]
fn orbit_members_are_recovered() {
    let m = modulation();
    let x0 = [0.7, -0.3, 0.2];
    let phi = orbit_member(&m, x0, 1.1);
    assert!(m.upsilon(&phi, x0, 1.1).unwrap().abs() < 1e-10 * m.ground_norm_sqr());
    let f = m.minimize(&phi).unwrap();
    assert!(f.converged);
    for a in 0..3 {
        assert!((f.x_star[a] - x0[a]).abs() < 1e-6, "{f:?}");
    }
    assert!((f.theta_star - 1.1).abs() < 1e-6, "{f:?}");
    assert!(f.distance < 1e-8, "{f:?}");
}

#[test]
fn antipodal_phase_doubles_the_field() {
    let m = modulation();
    let v = m.upsilon(&state().field, [0.0; 3], PI).unwrap();
    assert!((v / (4.0 * m.ground_norm_sqr()) - 1.0).abs() < 1e-12);
}

#[test]
fn correlation_form_matches_the_definition() {
    let m = modulation();
    for seed in 0..4 {
        let phi = random_complex(&m, seed).add(&state().field).unwrap();
        let x = [0.3 * seed as f64, -0.45, 1.1];
        let theta = 0.7 * seed as f64 - 1.0;
        let direct = direct_upsilon(&m, &phi, x, theta);
        let fast = m.upsilon(&phi, x, theta).unwrap();
        assert!((direct - fast).abs() < 1e-10 * direct.max(1.0), "{direct} vs {fast}");
    }
}

#[test]
fn gradient_matches_central_differences() {
    let m = modulation();
    let h = 1e-5;
    for seed in 0..10u64 {
        let phi = random_complex(&m, 100 + seed).add(&state().field).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let theta = rng.random_range(0.0..TAU);
        let (gx, gt) = m.upsilon_grad(&phi, x, theta).unwrap();
        let scale = gx.iter().map(|g| g * g).sum::<f64>().sqrt().max(gt.abs());
        for a in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[a] += h;
            xm[a] -= h;
            let fd = (m.upsilon(&phi, xp, theta).unwrap() - m.upsilon(&phi, xm, theta).unwrap()) / (2.0 * h);
            assert!((fd - gx[a]).abs() < 1e-6 * scale, "axis {a}: {fd} vs {}", gx[a]);
        }
        let fd = (m.upsilon(&phi, x, theta + h).unwrap() - m.upsilon(&phi, x, theta - h).unwrap()) / (2.0 * h);
        assert!((fd - gt).abs() < 1e-6 * scale, "{fd} vs {gt}");
    }
}

#[test]
fn real_even_fields_are_phase_stationary_at_the_origin() {
    let m = modulation();
    let phi = Field3::from_real_fn(*state().grid(), |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 4.0).exp());
    let (_, gt) = m.upsilon_grad(&phi, [0.0; 3], 0.0).unwrap();
    assert!(gt.abs() < 1e-12);
}

#[test]
fn small_perturbations_satisfy_the_orthogonality_conditions() {
    let m = modulation();
    let phi = m.perturb(state(), 0.01, PerturbationSector::Complex, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert!((phi.norm_sqr() / state().mass - 1.0).abs() < 1e-12);
    let f = m.minimize(&phi).unwrap();
    assert!(f.converged);
    assert!(f.distance > 0.0 && f.distance < 0.05, "{f:?}");
    let (gx, gt) = m.upsilon_grad(&phi, f.x_star, f.theta_star).unwrap();
    let scale = m.ground_norm_sqr();
    assert!(gx.iter().all(|g| g.abs() < 1e-8 * scale) && gt.abs() < 1e-8 * scale, "{gx:?} {gt}");
    // the optimum is no worse than any lattice seed
    let best_seed = m.correlation_scan(&phi).unwrap().values().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let at_seed = h1_inner(m.spectral(), &phi, &phi).unwrap() + scale - 2.0 * best_seed;
    assert!(f.distance * f.distance <= at_seed + 1e-14);
}

#[test]
fn minimization_is_equivariant() {
    let m = modulation();
    let phi = m.perturb(state(), 0.02, PerturbationSector::Complex, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let f = m.minimize(&phi).unwrap();
    let shift = [0.4, -0.9, 0.25];
    let moved = m.spectral().translate(&phi, shift).unwrap().scale_complex(Complex64::from_polar(1.0, 0.5));
    let g = m.minimize(&moved).unwrap();
    assert!((f.distance - g.distance).abs() < 1e-10, "{f:?} {g:?}");
    for a in 0..3 {
        assert!((g.x_star[a] - f.x_star[a] - shift[a]).abs() < 1e-6);
    }
    assert!(((g.theta_star - f.theta_star - 0.5).rem_euclid(TAU)).min(TAU - (g.theta_star - f.theta_star - 0.5).rem_euclid(TAU)) < 1e-6);
}

#[test]
fn other_lattices_are_rejected() {
    let m = modulation();
    let phi = Field3::zeros(Grid3::new(16, 20.0).unwrap());
    assert!(matches!(m.upsilon(&phi, [0.0; 3], 0.0), Err(Error::GridMismatch)));
}

#[test]
fn energy_excess_is_positive_in_both_sectors() {
    for sector in [PerturbationSector::Real, PerturbationSector::Imaginary] {
        let rows = coercivity_experiment(state(), &[0.01, 0.05], 3, sector, 17).unwrap();
        assert_eq!(rows.len(), 6);
        for row in &rows {
            assert!(row.d_star > 0.0 && row.d_star <= 1.5 * row.d_target, "{row:?}");
            assert!(row.ratio > 0.0, "{sector:?}: {row:?}");
        }
    }
    assert!(coercivity_experiment(state(), &[0.0], 1, PerturbationSector::Real, 0).is_err());
}

#[test]
fn energy_is_constant_on_the_orbit() {
    let m = modulation();
    let h = state().grid().spacing();
    // lattice shifts are exact; off-lattice ones alias the Hartree product
    for (x, tol) in [([2.0 * h, h, -h], 1e-12), ([1.0, 0.5, -0.5], 1e-6)] {
        let phi = orbit_member(&m, x, 2.0);
        let e = energy(m.spectral(), &phi).unwrap();
        assert!((e - m.ground_energy()).abs() < tol * e.abs(), "{}", (e - m.ground_energy()) / e);
        assert!(m.minimize(&phi).unwrap().distance < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn upsilon_is_nonnegative_and_periodic_in_phase(
        seed in 0u64..1000,
        x in prop::array::uniform3(-2.0f64..2.0),
        theta in 0.0f64..TAU,
    ) {
        let m = modulation();
        let phi = random_complex(&m, seed).scale(0.1).add(&state().field).unwrap();
        let v = m.upsilon(&phi, x, theta).unwrap();
        prop_assert!(v >= -1e-12);
        let w = m.upsilon(&phi, x, theta + TAU).unwrap();
        prop_assert!((v - w).abs() <= 1e-12 * m.ground_norm_sqr());
    }
}
