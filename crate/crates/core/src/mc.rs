//! Seeded, chunked Monte Carlo driver.
//!
//! Work is cut into fixed-size chunks. Chunk `i` of stream family `tag` draws
//! from ChaCha8 seeded with `seed` on stream `(tag << 40) | i`, so the numbers a
//! chunk sees do not depend on how many threads run or in what order.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Samples per chunk.
pub const CHUNK: usize = 1 << 14;

/// Generator for one chunk of one stream family.
pub fn chunk_rng(seed: u64, tag: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 40) | chunk);
    rng
}

/// Runs `f` over `total` samples in parallel chunks and returns per-chunk results in chunk order.
pub fn par_chunks<T, F>(total: usize, seed: u64, tag: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, Range<usize>) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, tag, c as u64);
            let start = c * CHUNK;
            f(&mut rng, start..(start + CHUNK).min(total))
        })
        .collect()
}

/// Parallel sum of a per-sample statistic, reduced in chunk order.
pub fn par_sum<F>(total: usize, seed: u64, tag: u64, f: F) -> f64
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    par_chunks(total, seed, tag, |rng, range| {
        let mut acc = 0.0;
        for _ in range {
            acc += f(rng);
        }
        acc
    })
    .into_iter()
    .sum()
}

/// Circularly-symmetric complex Gaussian with unit variance, as (re, im).
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    (
        re * std::f64::consts::FRAC_1_SQRT_2,
        im * std::f64::consts::FRAC_1_SQRT_2,
    )
}

/// Kolmogorov–Smirnov distance between sorted samples and a CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
