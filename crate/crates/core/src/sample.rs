//! Seeded sampling for verification checks.
//!
//! Every check derives its own RNG stream from (seed, check label), so
//! residual maxima are reproducible run to run and independent of the order
//! in which checks execute.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Uniform per-coordinate sampling interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub lo: f64,
    pub hi: f64,
}

impl SampleBox {
    pub fn new(lo: f64, hi: f64) -> Self {
        SampleBox { lo, hi }
    }
}

fn fnv1a64(s: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Deterministic RNG for one check: fixed seed, stream keyed by label.
pub fn rng_for(seed: u64, label: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a64(label));
    rng
}

pub fn sample_point(rng: &mut ChaCha8Rng, b: SampleBox, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(b.lo..b.hi)).collect()
}

/// Rejection-sample a point satisfying `pred`, or `None` after `max_tries`.
pub fn sample_where(
    rng: &mut ChaCha8Rng,
    b: SampleBox,
    dim: usize,
    max_tries: usize,
    mut pred: impl FnMut(&[f64]) -> bool,
) -> Option<Vec<f64>> {
    for _ in 0..max_tries {
        let x = sample_point(rng, b, dim);
        if pred(&x) {
            return Some(x);
        }
    }
    None
}

/// Sup norm; the residual norm used throughout the verification suites.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.abs()))
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Running result of one sampled check.
#[derive(Debug, Clone, Copy, Default)]
pub struct CheckOutcome {
    pub samples: usize,
    pub skipped: usize,
    pub max_residual: f64,
}

impl CheckOutcome {
    pub fn record(&mut self, residual: f64) {
        self.samples += 1;
        if residual > self.max_residual {
            self.max_residual = residual;
        }
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn merge(&mut self, other: &CheckOutcome) {
        self.samples += other.samples;
        self.skipped += other.skipped;
        self.max_residual = self.max_residual.max(other.max_residual);
    }
}
