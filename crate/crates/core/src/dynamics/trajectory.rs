//! The point-particle system `ẋ = v`, `v̇ = −∇V(x)`.

use crate::error::{Error, Result};
use crate::observables::TrajectoryState;
use crate::potential::ExternalPotential;

fn accel(potential: &dyn ExternalPotential, x: [f64; 3]) -> [f64; 3] {
    potential.gradient(x).map(|g| -g)
}

/// Velocity-Verlet samples on `[0, T]` with a step no larger than `dt`.
/// `mass` only enters the reported Hamiltonian.
pub fn newton_trajectory(
    potential: &dyn ExternalPotential,
    x0: [f64; 3],
    v0: [f64; 3],
    mass: f64,
    dt: f64,
    t_final: f64,
) -> Result<Vec<TrajectoryState>> {
    if !(dt > 0.0) {
        return Err(Error::NonPositive { name: "dt", value: dt });
    }
    if !(t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!("final time {t_final}")));
    }
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let h = t_final / steps as f64;
    let (mut x, mut v) = (x0, v0);
    let mut a = accel(potential, x);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(TrajectoryState::new(0.0, x, v, mass, potential));
    for i in 1..=steps {
        for j in 0..3 {
            v[j] += 0.5 * h * a[j];
            x[j] += h * v[j];
        }
        a = accel(potential, x);
        for j in 0..3 {
            v[j] += 0.5 * h * a[j];
        }
        out.push(TrajectoryState::new(i as f64 * h, x, v, mass, potential));
    }
    Ok(out)
}

/// Position and velocity at `t` by cubic Hermite interpolation between the
/// bracketing samples (velocities and forces as slopes).
pub fn trajectory_at(
    traj: &[TrajectoryState],
    potential: &dyn ExternalPotential,
    t: f64,
) -> Result<([f64; 3], [f64; 3])> {
    let (first, last) = match (traj.first(), traj.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidArgument("empty trajectory".into())),
    };
    let tol = 1e-9 * (last.t - first.t).abs().max(1.0);
    if t < first.t - tol || t > last.t + tol {
        return Err(Error::OutsideWindow(format!("time {t} beyond trajectory [{}, {}]", first.t, last.t)));
    }
    if traj.len() == 1 {
        return Ok((first.x, first.v));
    }
    let i = traj.partition_point(|s| s.t <= t).clamp(1, traj.len() - 1);
    let (p, q) = (&traj[i - 1], &traj[i]);
    let h = q.t - p.t;
    let u = ((t - p.t) / h).clamp(0.0, 1.0);
    let (h00, h10, h01, h11) = (
        2.0 * u.powi(3) - 3.0 * u * u + 1.0,
        u.powi(3) - 2.0 * u * u + u,
        -2.0 * u.powi(3) + 3.0 * u * u,
        u.powi(3) - u * u,
    );
    let (ap, aq) = (accel(potential, p.x), accel(potential, q.x));
    let mut x = [0.0; 3];
    let mut v = [0.0; 3];
    for j in 0..3 {
        x[j] = h00 * p.x[j] + h10 * h * p.v[j] + h01 * q.x[j] + h11 * h * q.v[j];
        v[j] = h00 * p.v[j] + h10 * h * ap[j] + h01 * q.v[j] + h11 * h * aq[j];
    }
    Ok((x, v))
}

/// Largest relative deviation of the Hamiltonian from its initial value.
pub fn hamiltonian_drift(traj: &[TrajectoryState]) -> f64 {
    let h0 = traj.first().map_or(0.0, |s| s.hamiltonian);
    let scale = h0.abs().max(f64::MIN_POSITIVE);
    traj.iter().map(|s| (s.hamiltonian - h0).abs() / scale).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::potential::Potential;

    #[test]
    fn constant_potential_gives_straight_lines() {
        let v = Potential::Constant { value: 2.0 };
        let traj = newton_trajectory(&v, [1.0, 2.0, 3.0], [0.5, -1.0, 0.25], 1.0, 0.01, 3.0).unwrap();
        let last = traj.last().unwrap();
        assert_eq!(last.t, 3.0);
        for j in 0..3 {
            let exact = [1.0, 2.0, 3.0][j] + 3.0 * [0.5, -1.0, 0.25][j];
            assert!((last.x[j] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_oscillator_half_period() {
        let v = Potential::Harmonic { omega: 1.0, center: [0.0; 3] };
        let traj = newton_trajectory(&v, [1.0, 0.0, 0.0], [0.0; 3], 2.5, 1e-4, PI).unwrap();
        let last = traj.last().unwrap();
        assert!((last.x[0] + 1.0).abs() < 1e-8, "{:?}", last.x);
        assert!(hamiltonian_drift(&traj) < 1e-8);
    }

    #[test]
    fn gaussian_well_conserves_the_hamiltonian() {
        let v = Potential::default();
        let traj = newton_trajectory(&v, [2.0, 1.0, 0.0], [0.1, 0.0, -0.2], 2.48, 1e-3, 10.0).unwrap();
        assert!(hamiltonian_drift(&traj) < 1e-8, "{}", hamiltonian_drift(&traj));
    }

    #[test]
    fn interpolation_is_third_order() {
        let v = Potential::Harmonic { omega: 1.0, center: [0.0; 3] };
        let traj = newton_trajectory(&v, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1.0, 1e-3, 2.0).unwrap();
        for &t in &[0.0, 0.3337, 1.23456, 2.0] {
            let (x, vel) = trajectory_at(&traj, &v, t).unwrap();
            assert!((x[0] - t.cos()).abs() < 1e-6 && (x[1] - t.sin()).abs() < 1e-6);
            assert!((vel[0] + t.sin()).abs() < 1e-6 && (vel[1] - t.cos()).abs() < 1e-6);
        }
        assert!(trajectory_at(&traj, &v, 2.5).is_err());
    }
}
