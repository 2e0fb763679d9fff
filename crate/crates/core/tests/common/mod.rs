//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Closed-form exponentially weighted least squares with a Gaussian prior:
/// solves `(l^n P0^-1 + sum l^(n-i) phi phi') theta = l^n P0^-1 theta0 + sum l^(n-i) phi y`.
pub fn weighted_least_squares(
    rows: &[Vec<f64>],
    targets: &[f64],
    theta0: &[f64],
    prior_scale: f64,
    lambda: f64,
) -> Vec<f64> {
    let d = theta0.len();
    let n = rows.len();
    let prior_weight = lambda.powi(n as i32) / prior_scale;
    let mut a = DMatrix::<f64>::identity(d, d) * prior_weight;
    let mut b = DVector::from_column_slice(theta0) * prior_weight;
    for (i, (phi, &y)) in rows.iter().zip(targets).enumerate() {
        let w = lambda.powi((n - 1 - i) as i32);
        let phi = DVector::from_column_slice(phi);
        a += &phi * phi.transpose() * w;
        b += &phi * (y * w);
    }
    a.lu().solve(&b).expect("prior keeps the system nonsingular").as_slice().to_vec()
}

/// `inf { p : #{x <= p} / n >= level }` by scanning every candidate.
pub fn brute_force_quantile(values: &[f64], level: f64) -> Option<f64> {
    let n = values.len() as f64;
    values
        .iter()
        .copied()
        .filter(|&p| values.iter().filter(|&&x| x <= p).count() as f64 / n >= level)
        .min_by(f64::total_cmp)
}

/// An Elec2-shaped demand series: daily and weekly cycles, a slow drift,
/// AR(1) noise and occasional spikes, all inside `[0, 0.999]`.
pub fn synthetic_elec2(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = 0.0f64;
    (0..len)
        .map(|i| {
            let t = i as f64;
            noise = 0.9 * noise + 0.02 * (rng.random::<f64>() - 0.5);
            let spike = if rng.random_bool(0.005) { 0.25 } else { 0.0 };
            let v = 0.42
                + 0.15 * (TAU * t / 48.0 - 1.2).sin()
                + 0.05 * (TAU * t / 336.0).sin()
                + 0.05 * (TAU * t / 20_000.0).sin()
                + noise
                + spike;
            v.clamp(0.0, 0.999)
        })
        .collect()
}

pub fn write_elec2_csv(path: &Path, values: &[f64]) {
    let mut f = std::fs::File::create(path).unwrap();
    writeln!(f, "date,day,period,nswprice,nswdemand,vicprice,vicdemand,transfer,class").unwrap();
    for (i, v) in values.iter().enumerate() {
        let period = (i % 48) as f64 / 47.0;
        let day = 1 + (i / 48) % 7;
        writeln!(f, "0,{day},{period},0.05,{v},0.003,0.42,0.41,UP").unwrap();
    }
}
