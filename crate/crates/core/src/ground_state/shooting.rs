//! Independent radial solver for the ground state.
//!
//! With `ψ = Φ − 1` the radial system `−½Δr = ψr`, `−Δψ = 4πr²` is invariant
//! under `(r, ψ)(s) ↦ a²(r, ψ)(as)`. We fix `r(0) = 1`, bisect on `ψ(0)`
//! until the solution neither crosses zero nor turns up, then choose `a` so
//! that `ψ → −1` at infinity.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A radial profile tabulated on a uniform grid `s_i = i·ds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub ds: f64,
    pub r: Vec<f64>,
    pub dr: Vec<f64>,
    /// `‖r‖₂² = 4π∫r²s²ds`.
    pub mass: f64,
    /// Radius beyond which values come from the linear tail equation rather
    /// than the nonlinear shot.
    pub matched_radius: f64,
}

impl RadialSolution {
    pub fn s_max(&self) -> f64 {
        self.ds * (self.r.len() - 1) as f64
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.r.len()).map(|i| i as f64 * self.ds).collect()
    }

    /// Cubic Hermite interpolation; zero beyond the table.
    pub fn value(&self, s: f64) -> f64 {
        let t = s / self.ds;
        let i = t.floor() as usize;
        if i + 1 >= self.r.len() {
            return if i + 1 == self.r.len() { self.r[i] } else { 0.0 };
        }
        let u = t - i as f64;
        let (h00, h10) = ((1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u), u * (1.0 - u) * (1.0 - u));
        let (h01, h11) = (u * u * (3.0 - 2.0 * u), u * u * (u - 1.0));
        h00 * self.r[i] + h10 * self.ds * self.dr[i] + h01 * self.r[i + 1] + h11 * self.ds * self.dr[i + 1]
    }

    /// `r′/r` at the table point nearest to `s`.
    pub fn log_derivative(&self, s: f64) -> f64 {
        let i = ((s / self.ds).round() as usize).min(self.r.len() - 1);
        self.dr[i] / self.r[i]
    }
}

type State = [f64; 5];

/// `(r, r′, ψ, ψ′, Q)` with `Q = 4π∫r²t²`.
fn rhs(s: f64, y: &State) -> State {
    let [r, rp, psi, psip, _] = *y;
    [rp, -2.0 * rp / s - 2.0 * psi * r, psip, -2.0 * psip / s - 4.0 * PI * r * r, 4.0 * PI * r * r * s * s]
}

fn rk4<const N: usize>(f: impl Fn(f64, &[f64; N]) -> [f64; N], s: f64, y: &[f64; N], h: f64) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], c: f64| -> [f64; N] { std::array::from_fn(|i| a[i] + c * b[i]) };
    let k1 = f(s, y);
    let k2 = f(s + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = f(s + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = f(s + h, &add(y, &k3, h));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

#[derive(Debug, PartialEq, Eq, Clone, Copy)]
enum Outcome {
    Crossed,
    TurnedUp,
    Undecided,
}

/// Integrates from the series start until the profile crosses zero, turns
/// up, or reaches `s_end`. Returns the samples at `s_i = i·h`.
fn shoot(psi0: f64, h: f64, s_end: f64) -> (Outcome, Vec<State>) {
    let mut y = [1.0, 0.0, psi0, 0.0, 0.0];
    let mut out = vec![y];
    let s1 = h;
    y = [
        1.0 - psi0 / 3.0 * s1 * s1,
        -2.0 * psi0 / 3.0 * s1,
        psi0 - 2.0 * PI / 3.0 * s1 * s1,
        -4.0 * PI / 3.0 * s1,
        4.0 * PI / 3.0 * s1.powi(3),
    ];
    out.push(y);
    let steps = (s_end / h).ceil() as usize;
    for i in 1..steps {
        y = rk4(rhs, i as f64 * h, &y, h);
        out.push(y);
        if y[0] < 0.0 {
            return (Outcome::Crossed, out);
        }
        if y[1] > 0.0 {
            return (Outcome::TurnedUp, out);
        }
    }
    (Outcome::Undecided, out)
}

/// Solves the radial ground-state problem and tabulates `r₀` on
/// `[0, s_max]` with spacing `ds`.
pub fn radial_shooting_oracle(s_max: f64, ds: f64) -> Result<RadialSolution> {
    if !(ds > 0.0 && s_max > 0.0) {
        return Err(Error::InvalidArgument(format!("need positive s_max and ds, got {s_max}, {ds}")));
    }
    if ds > 1e-3 * s_max {
        return Err(Error::InvalidArgument(format!("ds = {ds} too coarse for s_max = {s_max}")));
    }
    // unscaled radii are ~1.6× the scaled ones; 200 is far past any event
    let h = ds;
    let s_end = 200.0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while shoot(hi, h, s_end).0 != Outcome::Crossed {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::ShootingBracket("no crossing solution found".into()));
        }
    }
    if shoot(lo, h, s_end).0 != Outcome::TurnedUp {
        return Err(Error::ShootingBracket("ψ(0) = 0 does not turn up".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, h, s_end).0 {
            Outcome::Crossed => hi = mid,
            _ => lo = mid,
        }
    }
    let (_, low) = shoot(lo, h, s_end);
    let (_, high) = shoot(hi, h, s_end);
    // trust the shot while the two brackets agree
    let len = low.len().min(high.len());
    let mut trusted = len - 1;
    for i in 1..len {
        if (low[i][0] - high[i][0]).abs() > 1e-9 * low[i][0].abs() {
            trusted = i - 1;
            break;
        }
    }
    let end = low[trusted];
    let s_t = trusted as f64 * h;
    let q = end[4];
    let psi_inf = end[2] - q / s_t;
    if !(psi_inf < 0.0) {
        return Err(Error::ShootingBracket(format!("ψ(∞) = {psi_inf} is not negative")));
    }
    let a = 1.0 / (-psi_inf).sqrt();
    let mut mass = a * q;

    // scaled solution r_a(s) = a² r(as), r_a′(s) = a³ r′(as), sampled by Hermite
    // interpolation of the unscaled table
    let unscaled = |s: f64| -> (f64, f64) {
        let t = s * a / h;
        let i = (t.floor() as usize).min(trusted - 1);
        let u = t - i as f64;
        let (y0, y1) = (low[i], low[i + 1]);
        let (f0, f1) = (rhs((i as f64 * h).max(h), &y0), rhs(((i + 1) as f64) * h, &y1));
        let hermite = |p0: f64, m0: f64, p1: f64, m1: f64| {
            let (h00, h10) = ((1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u), u * (1.0 - u) * (1.0 - u));
            let (h01, h11) = (u * u * (3.0 - 2.0 * u), u * u * (u - 1.0));
            h00 * p0 + h10 * h * m0 + h01 * p1 + h11 * h * m1
        };
        (hermite(y0[0], y0[1], y1[0], y1[1]), hermite(y0[1], f0[1], y1[1], f1[1]))
    };
    let n = (s_max / ds).round() as usize + 1;
    let matched = s_t / a;
    let mut r = Vec::with_capacity(n);
    let mut dr = Vec::with_capacity(n);
    let mut i = 0;
    while i < n && (i as f64) * ds < matched {
        let (v, d) = unscaled(i as f64 * ds);
        r.push(a * a * v);
        dr.push(a * a * a * d);
        i += 1;
    }
    if i < n {
        // beyond the trusted range only the monopole of the density matters:
        // r″ + 2r′/s = 2(1 − m/s)r, integrated inward from far out, where the
        // growing mode dies away
        let (r_m, _) = unscaled(matched);
        let r_m = a * a * r_m;
        let core_mass = mass;
        let tail = |s: f64, y: &[f64; 2]| [y[1], -2.0 * y[1] / s + 2.0 * (1.0 - core_mass / s) * y[0]];
        let s_far = s_max.max(matched) + 15.0;
        let beta = mass / SQRT_2 - 1.0;
        let steps = ((s_far - matched) / ds).ceil() as usize;
        let step = (s_far - matched) / steps as f64;
        let mut y = [1.0, -(SQRT_2 - beta / s_far)];
        let mut table = vec![(s_far, y)];
        for k in 0..steps {
            let s = s_far - k as f64 * step;
            y = rk4(tail, s, &y, -step);
            table.push((s - step, y));
        }
        table.reverse();
        let scale = r_m / table[0].1[0];
        // charge carried by the tail, trapezoid rule on the inward table
        let tail_mass: f64 = table
            .windows(2)
            .map(|w| {
                let f = |(s, y): (f64, [f64; 2])| 4.0 * PI * (scale * y[0]).powi(2) * s * s;
                0.5 * step * (f(w[0]) + f(w[1]))
            })
            .sum();
        mass += tail_mass;
        while i < n {
            let s = i as f64 * ds;
            let t = ((s - matched) / step).max(0.0);
            let k = (t.floor() as usize).min(table.len() - 2);
            let u = t - k as f64;
            let (y0, y1) = (table[k].1, table[k + 1].1);
            let (f0, f1) = (tail(table[k].0, &y0), tail(table[k + 1].0, &y1));
            let (h00, h10) = ((1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u), u * (1.0 - u) * (1.0 - u));
            let (h01, h11) = (u * u * (3.0 - 2.0 * u), u * u * (u - 1.0));
            r.push(scale * (h00 * y0[0] + h10 * step * y0[1] + h01 * y1[0] + h11 * step * y1[1]));
            dr.push(scale * (h00 * y0[1] + h10 * step * f0[1] + h01 * y1[1] + h11 * step * f1[1]));
            i += 1;
        }
    }
    Ok(RadialSolution { ds, r, dr, mass, matched_radius: matched })
}
