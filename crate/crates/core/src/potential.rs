//! External potentials `V(x)` with analytic gradients.

use serde::{Deserialize, Serialize};

/// An external potential given by value and gradient callbacks.
pub trait ExternalPotential: Send + Sync {
    fn value(&self, x: [f64; 3]) -> f64;
    fn gradient(&self, x: [f64; 3]) -> [f64; 3];
}

/// The shipped potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Zero,
    Constant {
        value: f64,
    },
    /// `½ω²|x − c|²`.
    Harmonic {
        omega: f64,
        center: [f64; 3],
    },
    /// `−A exp(−|x − c|² / 2s²)`.
    GaussianWell {
        depth: f64,
        width: f64,
        center: [f64; 3],
    },
    /// `g·(x₁ − c₁)` on a period of length `period` centered at `c₁`, bent
    /// back smoothly within `edge_width` of the period boundary so that the
    /// potential is periodic and C^∞. The force is exactly `−g e₁` on
    /// `|x₁ − c₁| ≤ period/2 − edge_width`.
    Ramp {
        slope: f64,
        center: [f64; 3],
        period: f64,
        edge_width: f64,
    },
}

impl Default for Potential {
    fn default() -> Self {
        Potential::GaussianWell { depth: 0.5, width: 4.0, center: [0.0; 3] }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm_sqr(a: [f64; 3]) -> f64 {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

fn flat(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

fn flat_deriv(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp() / (t * t)
    }
}

/// C^∞ step rising from 0 at `t ≤ 0` to 1 at `t ≥ 1`.
fn smooth_step(t: f64) -> f64 {
    let a = flat(t);
    let b = flat(1.0 - t);
    if a + b == 0.0 {
        return if t >= 1.0 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

fn smooth_step_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = flat(t);
    let b = flat(1.0 - t);
    let da = flat_deriv(t);
    let db = -flat_deriv(1.0 - t);
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

impl Potential {
    /// `(V, dV/dξ)` of the periodic ramp at `ξ = x₁ − c₁`.
    fn ramp_profile(slope: f64, period: f64, edge: f64, xi: f64) -> (f64, f64) {
        let half = 0.5 * period;
        let xi = (xi + half).rem_euclid(period) - half;
        // cumulative share of the return bump sitting on each side of ±period/2
        let (c, dc) = if xi >= half - edge {
            let t = (xi - (half - edge)) / edge;
            (0.5 + 0.5 * smooth_step(t), 0.5 * smooth_step_deriv(t) / edge)
        } else if xi <= -half + edge {
            let t = (xi + half) / edge;
            (0.5 * smooth_step(t), 0.5 * smooth_step_deriv(t) / edge)
        } else {
            (0.5, 0.0)
        };
        (slope * (xi - period * (c - 0.5)), slope * (1.0 - period * dc))
    }
}

impl ExternalPotential for Potential {
    fn value(&self, x: [f64; 3]) -> f64 {
        match *self {
            Potential::Zero => 0.0,
            Potential::Constant { value } => value,
            Potential::Harmonic { omega, center } => 0.5 * omega * omega * norm_sqr(sub(x, center)),
            Potential::GaussianWell { depth, width, center } => {
                -depth * (-norm_sqr(sub(x, center)) / (2.0 * width * width)).exp()
            }
            Potential::Ramp { slope, center, period, edge_width } => {
                Self::ramp_profile(slope, period, edge_width, x[0] - center[0]).0
            }
        }
    }

    fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        match *self {
            Potential::Zero | Potential::Constant { .. } => [0.0; 3],
            Potential::Harmonic { omega, center } => sub(x, center).map(|d| omega * omega * d),
            Potential::GaussianWell { depth, width, center } => {
                let d = sub(x, center);
                let s2 = width * width;
                let e = (-norm_sqr(d) / (2.0 * s2)).exp();
                d.map(|di| depth * e * di / s2)
            }
            Potential::Ramp { slope, center, period, edge_width } => {
                [Self::ramp_profile(slope, period, edge_width, x[0] - center[0]).1, 0.0, 0.0]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_gradient(p: &Potential, x: [f64; 3]) {
        let g = p.gradient(x);
        let h = 1e-5;
        for axis in 0..3 {
            let mut a = x;
            let mut b = x;
            a[axis] += h;
            b[axis] -= h;
            let fd = (p.value(a) - p.value(b)) / (2.0 * h);
            assert!((fd - g[axis]).abs() < 1e-7 * (1.0 + g[axis].abs()), "{p:?} axis {axis}: {fd} vs {}", g[axis]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let ps = [
            Potential::Harmonic { omega: 1.3, center: [0.1, 0.2, -0.3] },
            Potential::GaussianWell { depth: 0.5, width: 4.0, center: [1.0, 0.0, 0.0] },
            Potential::Ramp { slope: 0.2, center: [0.0; 3], period: 4.0, edge_width: 0.6 },
        ];
        for p in &ps {
            for x in [[0.3, -0.2, 0.5], [1.7, 0.4, 0.0], [-1.6, 1.0, 2.0], [1.95, 0.0, 0.0]] {
                check_gradient(p, x);
            }
        }
    }

    #[test]
    fn ramp_is_linear_inside_and_periodic() {
        let p = Potential::Ramp { slope: 0.3, center: [1.0, 0.0, 0.0], period: 4.0, edge_width: 0.5 };
        assert!((p.value([2.2, 5.0, -1.0]) - 0.3 * 1.2).abs() < 1e-15);
        assert_eq!(p.gradient([0.0, 0.0, 0.0])[0], 0.3);
        let a = p.value([1.0 + 1.999_999, 0.0, 0.0]);
        let b = p.value([1.0 - 2.0, 0.0, 0.0]);
        assert!(a.abs() < 1e-6 && b.abs() < 1e-12);
        assert!((p.value([0.7, 0.0, 0.0]) - p.value([4.7, 0.0, 0.0])).abs() < 1e-12);
    }
}
