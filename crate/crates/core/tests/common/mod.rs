#![allow(dead_code)]

use neglabel::store::{normalize_rows, Matrix};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn random_unit_matrix(rng: &mut impl Rng, rows: usize, dims: usize) -> Matrix {
    let raw: Vec<f32> = (0..rows * dims)
        .map(|_| rng.random_range(-1.0f32..1.0))
        .collect();
    normalize_rows(rows, dims, &raw).unwrap()
}

pub fn random_row(rng: &mut impl Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}
