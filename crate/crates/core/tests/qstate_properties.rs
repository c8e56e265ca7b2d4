mod common;

use common::*;
use infodyn::cmeasure::gamma_embed;
use infodyn::divergence::d_gamma_raw;
use infodyn::infogeo::fisher_rao_metric;
use infodyn::qstate::{
    connes_cocycle, l2_embed, modular_flow, partial_trace, petz_limit_entropy, q_d_gamma, q_gamma_embed,
    schatten_norm, trace_product, wyd_metric, CMatrix, DensityOperator, ObservableOperator, Subsystem, PETZ_STEPS,
};
use num_complex::Complex64;
use rand::Rng;

/// Independent spectral power for the identity checks.
fn power(m: &CMatrix, a: f64) -> CMatrix {
    let eig = m.clone().symmetric_eigen();
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).powf(a), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

#[test]
fn half_deviation_is_half_squared_hilbert_distance() {
    let mut r = rng(51);
    for _ in 0..200 {
        let n = r.random_range(2..=4);
        let (a, b) = (density(&mut r, n), density(&mut r, n));
        let hs = 0.5 * schatten_norm(&(l2_embed(&a) - l2_embed(&b)), 2.0).unwrap().powi(2);
        assert!((q_d_gamma(&a, &b, 0.5).unwrap() - hs).abs() < 1e-10);
    }
}

#[test]
fn hasegawa_form_on_normalized_pairs() {
    let mut r = rng(52);
    for _ in 0..100 {
        let n = r.random_range(2..=4);
        let (w, f) = (density(&mut r, n), density(&mut r, n));
        for g in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let cross = trace_product(&power(w.matrix(), g), &power(f.matrix(), 1.0 - g)).re;
            let hasegawa = (f.trace() - cross) / (g - g * g);
            assert!((q_d_gamma(&w, &f, g).unwrap() - hasegawa).abs() < 1e-10);
        }
    }
}

#[test]
fn duality_and_axioms() {
    let mut r = rng(53);
    for k in 0..500 {
        let n = r.random_range(2..=4);
        let a = density(&mut r, n);
        let b = if k % 5 == 0 { a.clone() } else { density(&mut r, n) };
        let same = max_abs(&(a.matrix() - b.matrix())) < 1e-9;
        for g in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let d = q_d_gamma(&a, &b, g).unwrap();
            assert!(d >= 0.0);
            assert_eq!(d < 1e-12, same);
            assert!((d - q_d_gamma(&b, &a, 1.0 - g).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn commuting_states_reduce_to_the_classical_module() {
    let mut r = rng(54);
    for _ in 0..100 {
        let n = r.random_range(2..=6);
        let (wa, a) = diagonal_density(&mut r, n);
        let (wb, b) = diagonal_density(&mut r, n);
        for g in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert!((q_d_gamma(&a, &b, g).unwrap() - d_gamma_raw(&wa, &wb, g)).abs() < 1e-12);
            if g > 0.0 {
                let e = q_gamma_embed(&a, g).unwrap();
                let c = gamma_embed(&wa, g).unwrap();
                for (i, ci) in c.iter().enumerate() {
                    assert!((e.matrix[(i, i)].re - ci).abs() < 1e-12);
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let fr = fisher_rao_metric(&wa).unwrap();
        let u: Vec<f64> = (0..n).map(|i| wa[i] * x[i]).collect();
        let v: Vec<f64> = (0..n).map(|i| wa[i] * y[i]).collect();
        let classical = fr.inner(&u, &v);
        for g in [0.2, 0.5, 0.8] {
            let q = wyd_metric(&a, &ObservableOperator::from_diagonal(&x), &ObservableOperator::from_diagonal(&y), g).unwrap();
            assert!((q - classical).abs() < 1e-12);
        }
    }
}

#[test]
fn partial_trace_does_not_increase_deviation() {
    let mut r = rng(55);
    for _ in 0..100 {
        let (a, b) = (density(&mut r, 4), density(&mut r, 4));
        for side in [Subsystem::First, Subsystem::Second] {
            let ra = DensityOperator::new(partial_trace(a.matrix(), 2, 2, side).unwrap()).unwrap();
            let rb = DensityOperator::new(partial_trace(b.matrix(), 2, 2, side).unwrap()).unwrap();
            for g in [0.0, 0.25, 0.5, 0.75, 1.0] {
                assert!(q_d_gamma(&ra, &rb, g).unwrap() <= q_d_gamma(&a, &b, g).unwrap() + 1e-10);
            }
        }
    }
}

#[test]
fn second_order_expansion_is_a_metric() {
    let mut r = rng(56);
    let n = 3;
    let omega = density(&mut r, n);
    // traceless Hermitian directions
    let dirs: Vec<CMatrix> = (0..4)
        .map(|_| {
            let h = hermitian(&mut r, n);
            let t = h.trace() / Complex64::new(n as f64, 0.0);
            h - CMatrix::identity(n, n) * t
        })
        .collect();
    for g in [0.25, 0.5, 0.75] {
        let d = |s: f64, x: &CMatrix, t: f64, y: &CMatrix| {
            let a = DensityOperator::new(omega.matrix() + x.scale(s)).unwrap();
            let b = DensityOperator::new(omega.matrix() + y.scale(t)).unwrap();
            q_d_gamma(&a, &b, g).unwrap()
        };
        let k = dirs.len();
        let stencil = |h: f64| {
            nalgebra::DMatrix::<f64>::from_fn(k, k, |i, j| {
                let (x, y) = (&dirs[i], &dirs[j]);
                -(d(h, x, h, y) - d(h, x, -h, y) - d(-h, x, h, y) + d(-h, x, -h, y)) / (4.0 * h * h)
            })
        };
        // Richardson over {h, h/2} removes the asymmetric O(h²) stencil error
        let m = (stencil(1e-3) * 4.0 - stencil(2e-3)) / 3.0;
        let asym = (&m - m.transpose()).amax();
        assert!(asym < 1e-5 * m.amax(), "γ={g} asymmetry {asym}");
        let sym = (&m + m.transpose()) * 0.5;
        assert!(sym.symmetric_eigenvalues().min() > 0.0);
    }
}

#[test]
fn modular_flow_group_law_and_invariance() {
    let mut r = rng(57);
    for _ in 0..50 {
        let n = r.random_range(2..=4);
        let rho = density(&mut r, n);
        let x = observable(&mut r, n);
        let (s, t) = (r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
        let composed = modular_flow(&rho, &modular_flow(&rho, &x, s).unwrap(), t).unwrap();
        let direct = modular_flow(&rho, &x, s + t).unwrap();
        assert!(max_abs(&(composed.matrix() - direct.matrix())) < 1e-10);
        let moved = modular_flow(&rho, &x, t).unwrap();
        assert!((rho.expectation(&moved) - rho.expectation(&x)).abs() < 1e-10);
    }
}

#[test]
fn cocycle_chain_rule_and_entropy_limit() {
    let mut r = rng(58);
    for k in 0..100 {
        let n = if k % 2 == 0 { 2 } else { 3 };
        let (w, f, p) = (density(&mut r, n), density(&mut r, n), density(&mut r, n));
        let t = r.random_range(-2.0..2.0);
        let chain = connes_cocycle(&w, &f, t).unwrap() * connes_cocycle(&f, &p, t).unwrap();
        assert!(max_abs(&(chain - connes_cocycle(&w, &p, t).unwrap())) < 1e-10);
        let limit = petz_limit_entropy(&w, &f, &PETZ_STEPS).unwrap();
        assert!((limit - q_d_gamma(&f, &w, 1.0).unwrap()).abs() < 1e-6);
    }
}
