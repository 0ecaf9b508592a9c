//! Shared fixtures and test-side oracles.
#![allow(dead_code)]

use adamhash::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

pub fn sphere_point<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    unit((0..d).map(|_| StandardNormal.sample(rng)).collect())
}

pub fn ball_point<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    let r = rng.random::<f64>().powf(1.0 / d as f64);
    sphere_point(d, rng).into_iter().map(|x| x * r).collect()
}

pub fn sphere_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    (0..n).map(|_| sphere_point(d, &mut rng)).collect()
}

pub fn sphere_data(n: usize, d: usize, seed: u64) -> Dataset {
    Dataset::from_rows(d, sphere_rows(n, d, seed)).unwrap()
}

/// Unit vectors scattered around `e₁` with per-coordinate noise `spread`.
pub fn cluster_rows(n: usize, d: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    (0..n)
        .map(|_| {
            let mut v: Vec<f64> = (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    spread * z
                })
                .collect();
            v[0] += 1.0;
            unit(v)
        })
        .collect()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `(1/n)·Σ exp(−(s·‖x−q‖)²)`, summed directly from the definition.
pub fn gaussian_mean(rows: &[Vec<f64>], scale: f64, q: &[f64]) -> f64 {
    let total: f64 = rows.iter().map(|x| (-(scale * dist(x, q)).powi(2)).exp()).sum();
    total / rows.len() as f64
}

/// Standard deviation of a binomial proportion.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `⌈x⌉`, snapping values within 1e-9 (relative) of an integer onto it.
pub fn ceil_snapped(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}
