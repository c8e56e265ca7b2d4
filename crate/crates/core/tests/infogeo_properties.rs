mod common;

use common::*;
use infodyn::divergence::d_gamma_raw;
use infodyn::infogeo::{eguchi_connection, eguchi_metric, fisher_rao_metric, Chart, StepSize};
use rand::Rng;

#[test]
fn every_gamma_deviation_induces_the_fisher_rao_metric() {
    let mut r = rng(31);
    for _ in 0..50 {
        let n = r.random_range(1..=6);
        let mu = positive(&mut r, n, 0.1);
        let fr = fisher_rao_metric(&mu).unwrap();
        for gamma in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let d = move |a: &[f64], b: &[f64]| d_gamma_raw(a, b, gamma);
            let g = eguchi_metric(&d, &mu, Chart::Raw, StepSize::default()).unwrap();
            assert!(g.max_abs_diff(&fr) < 1e-5, "γ={gamma} diff={}", g.max_abs_diff(&fr));
            assert!(g.symmetry_defect() < 1e-10);
            assert!(g.min_eigenvalue() > 0.0);
        }
    }
}

#[test]
fn gamma_charts_are_dually_flat() {
    let mut r = rng(32);
    for _ in 0..10 {
        let n = r.random_range(1..=4);
        let mu = positive(&mut r, n, 0.2);
        for gamma in [0.25, 0.5, 0.75] {
            let d = move |a: &[f64], b: &[f64]| d_gamma_raw(a, b, gamma);
            let primal = eguchi_connection(&d, &mu, Chart::Gamma(gamma), StepSize::default()).unwrap();
            let dual = eguchi_connection(&d, &mu, Chart::Gamma(1.0 - gamma), StepSize::default()).unwrap();
            assert!(primal.primal.max_abs() < 1e-4, "primal γ={gamma}: {}", primal.primal.max_abs());
            assert!(dual.dual.max_abs() < 1e-4, "dual γ={gamma}: {}", dual.dual.max_abs());
            assert!(primal.torsion_defect() < 1e-8);
        }
    }
}
