//! Truncated-kernel Coulomb convolution against independent oracles.

use std::f64::consts::PI;

use newton_soliton::{Field3, Grid3, Spectral};

fn erf(x: f64) -> f64 {
    // Maclaurin series, adequate for |x| <= 3 in double precision
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-17 * sum.abs() {
        n += 1.0;
        term *= -x * x / n;
        sum += term / (2.0 * n + 1.0);
    }
    2.0 / PI.sqrt() * sum
}

fn gaussian_density(grid: Grid3, sigma: f64, c: [f64; 3], mass: f64) -> Field3 {
    let norm = mass / (2.0 * PI * sigma * sigma).powf(1.5);
    Field3::from_real_fn(grid, |x| {
        let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
        norm * (-r2 / (2.0 * sigma * sigma)).exp()
    })
}

#[test]
fn gaussian_potential_matches_erf_closed_form() {
    let grid = Grid3::with_truncation(64, 16.0, 8.0).unwrap();
    let sp = Spectral::new(grid);
    let sigma = 0.5;
    let rho = gaussian_density(grid, sigma, [0.0; 3], 1.0);
    let pot = sp.coulomb_convolve(&rho).unwrap();
    let mut worst: f64 = 0.0;
    for idx in 0..grid.len() {
        let x = grid.position(idx);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r > 2.0 {
            continue;
        }
        let exact = if r == 0.0 {
            (2.0 / PI).sqrt() / sigma
        } else {
            erf(r / (sigma * 2f64.sqrt())) / r
        };
        worst = worst.max((pot.values()[idx].re - exact).abs());
    }
    assert!(worst < 1e-6, "max deviation {worst:e}");
    assert!(pot.max_imag() == 0.0);
}

#[test]
fn two_bump_interaction_matches_direct_summation() {
    let grid = Grid3::with_truncation(16, 16.0, 8.0).unwrap();
    let sp = Spectral::new(grid);
    let (m1, m2) = (1.0, 0.7);
    let a = gaussian_density(grid, 0.7, [-1.5, 0.0, 0.0], m1);
    let b = gaussian_density(grid, 0.7, [1.5, 0.0, 0.0], m2);
    let spectral = sp.coulomb_convolve(&b).unwrap().real_inner(&a).unwrap();

    // O(n^6) pair sum over lattice point masses
    let h3 = grid.cell_volume();
    let mut direct = 0.0;
    let (av, bv) = (a.real_parts(), b.real_parts());
    let pos: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.position(i)).collect();
    let (mut qa, mut qb) = (0.0, 0.0);
    for i in 0..grid.len() {
        qa += av[i] * h3;
        qb += bv[i] * h3;
        if av[i] < 1e-14 {
            continue;
        }
        for j in 0..grid.len() {
            if i == j || bv[j] < 1e-14 {
                continue;
            }
            let d = ((pos[i][0] - pos[j][0]).powi(2)
                + (pos[i][1] - pos[j][1]).powi(2)
                + (pos[i][2] - pos[j][2]).powi(2))
            .sqrt();
            direct += av[i] * bv[j] * h3 * h3 / d;
        }
    }
    // point-mass quadrature of the singular kernel is only good to ~1% at this spacing
    let newton = qa * qb / 3.0;
    assert!((spectral - direct).abs() < 1e-2 * direct, "spectral {spectral} direct {direct}");
    assert!((direct - newton).abs() < 1e-2 * newton, "direct {direct} point-mass {newton}");
    assert!((spectral - newton).abs() < 3e-3 * newton, "spectral {spectral} point-mass {newton}");
}

#[test]
fn convolution_preserves_symmetry_and_reality() {
    let grid = Grid3::new(32, 16.0).unwrap();
    let sp = Spectral::new(grid);
    let rho = gaussian_density(grid, 1.0, [0.0; 3], 2.0);
    let pot = sp.coulomb_convolve(&rho).unwrap();
    let n = grid.n();
    let v = pot.real_parts();
    let mut asym: f64 = 0.0;
    for idx in 0..grid.len() {
        let (i, j, k) = grid.unravel(idx);
        let mirror = grid.index((n - i) % n, (n - j) % n, (n - k) % n);
        let swapped = grid.index(j, k, i);
        asym = asym.max((v[idx] - v[mirror]).abs()).max((v[idx] - v[swapped]).abs());
    }
    assert!(asym < 1e-12 * pot.max_abs(), "{asym:e}");
}
