//! Seeded generators for the randomized sweeps.

use infodyn::qstate::{CMatrix, DensityOperator};
use infodyn::Result;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive weights, each in `[lo, 1)`, not normalized.
pub fn positive(rng: &mut ChaCha8Rng, n: usize, lo: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..1.0)).collect()
}

/// A normalized, strictly positive weight vector.
pub fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v = positive(rng, n, 0.05);
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// A faithful normalized density operator `(G G† + ε I) / tr`.
pub fn density(rng: &mut ChaCha8Rng, n: usize) -> Result<DensityOperator> {
    let g = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &g * g.adjoint() + CMatrix::identity(n, n).scale(0.05);
    let t = m.trace().re;
    DensityOperator::new(m.unscale(t))
}
