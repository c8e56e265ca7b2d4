//! Seeded generators shared by the integration suites.
#![allow(dead_code)]

use infodyn::cmeasure::{ClassicalWeights, MarkovMap};
use infodyn::qstate::{CMatrix, DensityOperator, ObservableOperator};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive weights, each in `[lo, 1]`, not normalized.
pub fn positive(rng: &mut ChaCha8Rng, n: usize, lo: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..1.0)).collect()
}

/// A normalized, strictly positive weight vector.
pub fn simplex(rng: &mut ChaCha8Rng, n: usize) -> ClassicalWeights {
    let v = positive(rng, n, 0.05);
    let s: f64 = v.iter().sum();
    ClassicalWeights::new(v.into_iter().map(|x| x / s).collect()).unwrap()
}

/// A random `n × m` row-stochastic map.
pub fn markov(rng: &mut ChaCha8Rng, n: usize, m: usize) -> MarkovMap {
    let mut e = Vec::with_capacity(n * m);
    for _ in 0..n {
        let row: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = row.iter().sum();
        let mut row: Vec<f64> = row.into_iter().map(|x| x / s).collect();
        // absorb roundoff so each row sums to one
        let drift: f64 = row.iter().sum::<f64>() - 1.0;
        row[0] -= drift;
        e.extend(row);
    }
    MarkovMap::new(n, m, e).unwrap()
}

pub fn complex_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = complex_matrix(rng, n);
    (&a + a.adjoint()).scale(0.5)
}

pub fn observable(rng: &mut ChaCha8Rng, n: usize) -> ObservableOperator {
    ObservableOperator::new(hermitian(rng, n)).unwrap()
}

/// A faithful normalized density operator `(G G† + ε I) / tr`.
pub fn density(rng: &mut ChaCha8Rng, n: usize) -> DensityOperator {
    let g = complex_matrix(rng, n);
    let m = &g * g.adjoint() + CMatrix::identity(n, n).scale(0.05);
    let t = m.trace().re;
    DensityOperator::new(m.unscale(t)).unwrap()
}

/// A density operator diagonal in the computational basis.
pub fn diagonal_density(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, DensityOperator) {
    let w = simplex(rng, n).into_vec();
    let rho = DensityOperator::from_diagonal(&w).unwrap();
    (w, rho)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
