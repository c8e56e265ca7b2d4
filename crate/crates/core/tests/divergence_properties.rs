mod common;

use common::*;
use infodyn::cmeasure::{apply_markov, ClassicalWeights};
use infodyn::divergence::{
    bregman, cosine_defect, csiszar, d_gamma, CsiszarGenerator, GammaGenerator, GammaParam, QuadraticGenerator,
};
use proptest::prelude::*;
use rand::Rng;

fn gamma_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

fn weights(v: Vec<f64>) -> ClassicalWeights {
    ClassicalWeights::new(v).unwrap()
}

#[test]
fn nonnegativity_and_identity_of_indiscernibles() {
    let mut r = rng(21);
    for k in 0..1000 {
        let n = r.random_range(1..=8);
        let mu = positive(&mut r, n, 0.01);
        // every fourth pair is a genuine coincidence
        let nu = if k % 4 == 0 { mu.clone() } else { positive(&mut r, n, 0.01) };
        let same = max_diff(&mu, &nu) < 1e-9;
        let (mu, nu) = (weights(mu), weights(nu));
        for g in gamma_grid() {
            let d = d_gamma(&mu, &nu, GammaParam::new(g).unwrap()).unwrap();
            assert!(d >= 0.0);
            assert_eq!(d < 1e-12, same, "γ={g} d={d}");
        }
    }
}

#[test]
fn duality_swaps_arguments() {
    let mut r = rng(22);
    for _ in 0..500 {
        let n = r.random_range(1..=8);
        let mu = weights(positive(&mut r, n, 0.01));
        let nu = weights(positive(&mut r, n, 0.01));
        for g in gamma_grid() {
            let a = d_gamma(&mu, &nu, GammaParam::new(g).unwrap()).unwrap();
            let b = d_gamma(&nu, &mu, GammaParam::new(1.0 - g).unwrap()).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn gamma_deviation_is_csiszar_and_bregman() {
    let mut r = rng(23);
    for _ in 0..500 {
        let n = r.random_range(1..=8);
        let mu = positive(&mut r, n, 0.05);
        let nu = positive(&mut r, n, 0.05);
        let p3 = positive(&mut r, n, 0.05);
        for g in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let gp = GammaParam::new(g).unwrap();
            let d = d_gamma(&weights(mu.clone()), &weights(nu.clone()), gp).unwrap();
            let c = csiszar(&weights(mu.clone()), &weights(nu.clone()), &CsiszarGenerator::gamma(gp)).unwrap();
            let gen = GammaGenerator::new(gp).unwrap();
            let b = bregman(&mu, &nu, &gen).unwrap();
            assert!((d - c).abs() < 1e-12, "csiszar γ={g}");
            assert!((d - b).abs() < 1e-12, "bregman γ={g}");
            assert!(cosine_defect(&mu, &nu, &p3, &gen).unwrap().abs() < 1e-10);
        }
    }
}

#[test]
fn csiszar_deviations_are_markov_monotone() {
    let mut r = rng(24);
    let mut gens: Vec<CsiszarGenerator> =
        [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|g| CsiszarGenerator::gamma(GammaParam::new(*g).unwrap())).collect();
    gens.push(CsiszarGenerator::kl());
    gens.push(CsiszarGenerator::smoothed_abs(0.05));
    for _ in 0..500 {
        let n = r.random_range(2..=8);
        let m = r.random_range(1..=8);
        let mu = weights(positive(&mut r, n, 0.01));
        let nu = weights(positive(&mut r, n, 0.01));
        let t = markov(&mut r, n, m);
        let (mt, nt) = (apply_markov(&mu, &t).unwrap(), apply_markov(&nu, &t).unwrap());
        for f in &gens {
            assert!(csiszar(&mt, &nt, f).unwrap() <= csiszar(&mu, &nu, f).unwrap() + 1e-10, "{}", f.name());
        }
    }
}

#[test]
fn quadratic_bregman_violates_markov_monotonicity() {
    let mut r = rng(25);
    let mut found = None;
    for attempt in 0..500 {
        let n = r.random_range(2..=6);
        let m = r.random_range(1..=6);
        let mu = weights(positive(&mut r, n, 0.01));
        let nu = weights(positive(&mut r, n, 0.01));
        let t = markov(&mut r, n, m);
        let before = bregman(mu.as_slice(), nu.as_slice(), &QuadraticGenerator).unwrap();
        let (mt, nt) = (apply_markov(&mu, &t).unwrap(), apply_markov(&nu, &t).unwrap());
        let after = bregman(mt.as_slice(), nt.as_slice(), &QuadraticGenerator).unwrap();
        if after > before + 1e-10 {
            found = Some(attempt);
            break;
        }
    }
    assert!(found.is_some(), "no counterexample found");
}

proptest! {
    #[test]
    fn d_gamma_vanishes_on_the_diagonal(v in prop::collection::vec(1e-3f64..10.0, 1..8), g in 0.0f64..=1.0) {
        let mu = weights(v);
        prop_assert_eq!(d_gamma(&mu, &mu, GammaParam::new(g).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn d_gamma_is_nonnegative(
        pairs in prop::collection::vec((1e-3f64..10.0, 1e-3f64..10.0), 1..8),
        g in 0.0f64..=1.0,
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert!(d_gamma(&weights(a), &weights(b), GammaParam::new(g).unwrap()).unwrap() >= 0.0);
    }
}
