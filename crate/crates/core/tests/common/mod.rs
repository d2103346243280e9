#![allow(dead_code)]

use hedonic_eq::linalg::{norm2, scale, Matrix};
use hedonic_eq::MarketInstance;
use rand::rngs::StdRng;
use rand::Rng;
use rand_distr::StandardNormal;

pub const S3: f64 = 1.732_050_807_568_877_2;

pub fn duopoly() -> MarketInstance {
    MarketInstance::new(1.0, vec![0.0, 1.0], vec![2.0, S3]).unwrap()
}

pub fn unit_vector(rng: &mut StdRng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let nv = norm2(&v);
        if nv > 1e-3 {
            return scale(&v, 1.0 / nv);
        }
    }
}

fn log_uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Standalone values spanning the concentration, differentiation, and
/// polarization regions.
pub fn random_gamma(rng: &mut StdRng, n: usize) -> Vec<f64> {
    let level = log_uniform(rng, 0.05, 6.0);
    let spread = rng.gen_range(0.0..1.0);
    let mut g: Vec<f64> = (0..n)
        .map(|_| level * (1.0 - spread * rng.gen_range(0.0..1.0)) + 1e-3)
        .collect();
    if rng.gen_bool(0.2) {
        let i = rng.gen_range(0..n);
        g[i] *= rng.gen_range(2.0..6.0);
    }
    g
}

pub fn random_instance(rng: &mut StdRng, max_n: usize, max_m: usize) -> MarketInstance {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(2..=max_m);
    let alpha = log_uniform(rng, 0.1, 5.0);
    let beta = unit_vector(rng, m);
    MarketInstance::new(alpha, beta, random_gamma(rng, n)).unwrap()
}

/// `alpha A'A + I` for a random unit-column `A`: symmetric positive definite
/// with constant diagonal `1 + alpha`.
pub fn random_sigma(rng: &mut StdRng, n: usize) -> Matrix {
    let m = rng.gen_range(1..=n + 1);
    let alpha = log_uniform(rng, 0.1, 5.0);
    let cols: Vec<Vec<f64>> = (0..n).map(|_| unit_vector(rng, m)).collect();
    let mut s = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            let v: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            s[(i, j)] = if i == j { 1.0 + alpha } else { alpha * v };
        }
    }
    s
}

/// Symmetric zero-diagonal network scaled to spectral radius `target`.
pub fn random_network(rng: &mut StdRng, n: usize, nonnegative: bool, target: f64) -> Matrix {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if nonnegative {
                rng.gen_range(0.0..1.0)
            } else {
                rng.gen_range(-1.0..1.0)
            };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    let rho = hedonic_eq::linalg::symmetric_spectral_radius(&w).unwrap();
    if rho == 0.0 {
        w
    } else {
        w.scaled(target / rho)
    }
}
