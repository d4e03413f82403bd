use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::testing::coarse_run;

fn state() -> &'static GroundState {
    &coarse_run().state
}

fn field(seed: u64) -> Field3 {
    let sp = Spectral::new(*state().grid());
    random_field(&mut ChaCha8Rng::seed_from_u64(seed), &sp, ENVELOPE_WIDTH, false)
}

#[test]
fn kernel_and_integral_identities() {
    let rep = identity_report(state()).unwrap();
    assert!(rep.minus_kernel < 1e-8, "{rep:?}");
    assert!(rep.plus_on_ground < 1e-8, "{rep:?}");
    // translation modes are only resolved to the grid at 32³
    assert!(rep.plus_kernel.iter().all(|&e| e < 5e-3), "{rep:?}");
    assert!(rep.xi_ground.iter().all(|&e| e < 1e-12), "{rep:?}");
    assert!(rep.xi_cross < 1e-12, "{rep:?}");
    assert!(rep.xi_diagonal.iter().all(|&e| e < 1e-8), "{rep:?}");
    assert!(rep.dilation_pairing < 1e-6, "{rep:?}");
}

#[test]
fn hartree_commutator_enters_the_dilation_identity() {
    let rep = identity_report(state()).unwrap();
    assert!(rep.dilation_with_hartree < 1e-2, "{rep:?}");
    assert!(rep.dilation > 1.0, "{rep:?}");
}

#[test]
fn operators_are_self_adjoint() {
    let (u, v) = (field(1), field(2));
    for sector in [Sector::Plus, Sector::Minus] {
        let op = LinearizedOperator::new(state(), sector).unwrap();
        let a = op.apply(&u).unwrap().real_inner(&v).unwrap();
        let b = u.real_inner(&op.apply(&v).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{sector:?}: {a} vs {b}");
    }
}

#[test]
fn complex_input_is_rejected() {
    let op = LinearizedOperator::new(state(), Sector::Minus).unwrap();
    let sp = Spectral::new(*state().grid());
    let z = random_field(&mut ChaCha8Rng::seed_from_u64(5), &sp, ENVELOPE_WIDTH, true);
    assert!(matches!(op.apply(&z), Err(Error::ComplexInput(_))));
}

#[test]
fn projection_is_idempotent_and_satisfies_the_constraints() {
    let u = field(7);
    for kind in [ConstraintKind::PlusOnV0, ConstraintKind::MinusOnRPerp, ConstraintKind::PlusOnRPerp] {
        let c = Constraints::new(state(), kind).unwrap();
        let p = c.project(&u).unwrap();
        assert!(c.residuals(&p).unwrap().iter().all(|&e| e < 1e-12), "{kind:?}");
        let pp = c.project(&p).unwrap();
        assert!(pp.sub(&p).unwrap().norm() < 1e-12 * p.norm(), "{kind:?}");
    }
}

#[test]
fn dependent_constraints_are_rejected() {
    let mut c = Constraints::new(state(), ConstraintKind::PlusOnRPerp).unwrap();
    c.raw.push(c.raw[0].scale(2.0));
    assert!(matches!(c.orthonormalize(), Err(Error::SingularGram(_))));
}

#[test]
fn mismatched_constraints_are_rejected() {
    let op = LinearizedOperator::new(state(), Sector::Minus).unwrap();
    let c = Constraints::new(state(), ConstraintKind::PlusOnV0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(coercivity_probe(&op, &c, &ProbeOptions::default(), &mut rng).is_err());
}

#[test]
fn constrained_quotients_are_positive_and_the_control_is_not() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let probe = |kind: ConstraintKind, rng: &mut ChaCha8Rng| {
        let op = LinearizedOperator::new(state(), kind.sector()).unwrap();
        let c = Constraints::new(state(), kind).unwrap();
        coercivity_probe(&op, &c, &ProbeOptions::default(), rng).unwrap()
    };
    let plus = probe(ConstraintKind::PlusOnV0, &mut rng);
    let minus = probe(ConstraintKind::MinusOnRPerp, &mut rng);
    let control = probe(ConstraintKind::PlusOnRPerp, &mut rng);
    assert!(plus.converged && minus.converged && control.converged);
    assert!(plus.min_rayleigh > 0.1, "{plus:?}");
    assert!(minus.min_rayleigh > 0.1, "{minus:?}");
    assert!(control.min_rayleigh.abs() < 1e-4, "{control:?}");
    // the eigensolver beats random sampling
    assert!(plus.krylov_min < plus.sampled_min);
    assert_eq!(plus.method, ProbeMethod::Krylov);
}

#[test]
fn sampled_quotients_are_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for kind in [ConstraintKind::PlusOnV0, ConstraintKind::MinusOnRPerp] {
        let op = LinearizedOperator::new(state(), kind.sector()).unwrap();
        let c = Constraints::new(state(), kind).unwrap();
        let q = sample_quotients(&op, &c, 100, &mut rng).unwrap();
        assert!(q.iter().all(|&v| v > 0.0), "{kind:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn plus_is_nonnegative_on_v0(seed in any::<u64>()) {
        let op = LinearizedOperator::new(state(), Sector::Plus).unwrap();
        let c = Constraints::new(state(), ConstraintKind::PlusOnV0).unwrap();
        let u = c.project(&field(seed)).unwrap();
        let q = op.apply(&u).unwrap().real_inner(&u).unwrap();
        prop_assert!(q >= -1e-8 * u.norm_sqr());
    }
}
