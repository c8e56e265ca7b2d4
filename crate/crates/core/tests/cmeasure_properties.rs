mod common;

use common::*;
use infodyn::cmeasure::{apply_markov, conditional_expectation, expectation, RandomVariable};
use rand::Rng;

fn random_variable(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> RandomVariable {
    RandomVariable::new((0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
}

/// A conditioning variable with at most `levels` distinct values.
fn coarse_variable(rng: &mut rand_chacha::ChaCha8Rng, n: usize, levels: usize) -> RandomVariable {
    RandomVariable::new((0..n).map(|_| rng.random_range(0..levels) as f64).collect())
}

#[test]
fn conditional_expectation_is_orthogonal_to_measurable_functions() {
    let mut r = rng(11);
    for _ in 0..40 {
        let n = r.random_range(2..=8);
        let omega = simplex(&mut r, n);
        let f = random_variable(&mut r, n);
        let g = coarse_variable(&mut r, n, 3);
        let e = conditional_expectation(&omega, &f, &g).unwrap();
        for _ in 0..50 {
            let (a, b, c) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            let hg = g.map(|v| a + b * v + c * v * v * v);
            let prod: Vec<f64> = (0..n).map(|i| (f.as_slice()[i] - e.as_slice()[i]) * hg.as_slice()[i]).collect();
            assert!(expectation(&omega, &RandomVariable::new(prod)).unwrap().abs() < 1e-10);
        }
    }
}

#[test]
fn conditional_expectation_minimizes_squared_error() {
    let mut r = rng(12);
    let n = 7;
    let omega = simplex(&mut r, n);
    let f = random_variable(&mut r, n);
    let g = coarse_variable(&mut r, n, 3);
    let e = conditional_expectation(&omega, &f, &g).unwrap();
    let sq = |h: &RandomVariable| {
        let v: Vec<f64> = (0..n).map(|i| (f.as_slice()[i] - h.as_slice()[i]).powi(2)).collect();
        expectation(&omega, &RandomVariable::new(v)).unwrap()
    };
    let best = sq(&e);
    for _ in 0..200 {
        let shift: Vec<f64> = (0..3).map(|_| r.random_range(-0.5..0.5)).collect();
        let fe = RandomVariable::new((0..n).map(|i| e.as_slice()[i] + shift[g.as_slice()[i] as usize]).collect());
        let moved = (0..n).any(|i| fe.as_slice()[i] != e.as_slice()[i]);
        let value = sq(&fe);
        assert!(value >= best - 1e-14);
        if moved {
            assert!(value > best);
        }
    }
}

#[test]
fn conditional_expectation_is_idempotent_exactly() {
    let mut r = rng(13);
    for _ in 0..100 {
        let n = r.random_range(1..=8);
        let omega = simplex(&mut r, n);
        let f = random_variable(&mut r, n);
        let g = coarse_variable(&mut r, n, 4);
        let e = conditional_expectation(&omega, &f, &g).unwrap();
        let ee = conditional_expectation(&omega, &e, &g).unwrap();
        assert_eq!(e, ee);
    }
}

#[test]
fn markov_maps_preserve_mass_and_positivity() {
    let mut r = rng(14);
    for _ in 0..200 {
        let n = r.random_range(1..=8);
        let m = r.random_range(1..=8);
        let mu = simplex(&mut r, n);
        let t = markov(&mut r, n, m);
        let out = apply_markov(&mu, &t).unwrap();
        assert!((out.total_mass() - mu.total_mass()).abs() < 1e-12);
        assert!(out.as_slice().iter().all(|v| *v >= 0.0));
    }
}
