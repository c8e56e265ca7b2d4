mod common;

use common::*;
use infodyn::cmeasure::ClassicalWeights;
use infodyn::entproj::{project, trajectory, weighted_project, ConstraintSet, Penalty, PriorMixture, Schedule, TrajectoryMode};
use infodyn::qproj::{
    luders_experiment, q_objective, q_project, q_project_with, q_trajectory, q_weighted_project, trace_distance,
    QProjectOptions, QuantumConstraintSet, QuantumPenalty, QuantumPriorMixture, QuantumSchedule, QuantumSolver,
};
use infodyn::qstate::{CMatrix, DensityOperator, ObservableOperator};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Closed-form qubit oracle on Bloch vectors, independent of the crate's spectral code.

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `ρ^a = α I + β r̂·σ` for `ρ = (I + r·σ)/2`.
fn bloch_power(r: [f64; 3], a: f64) -> (f64, f64, [f64; 3]) {
    let n = norm3(r);
    let (lp, lm) = ((1.0 + n) / 2.0, (1.0 - n) / 2.0);
    let pw = |l: f64| if l > 0.0 { l.powf(a) } else { 0.0 };
    let dir = if n > 0.0 { [r[0] / n, r[1] / n, r[2] / n] } else { [0.0; 3] };
    ((pw(lp) + pw(lm)) / 2.0, (pw(lp) - pw(lm)) / 2.0, dir)
}

fn bloch_log(r: [f64; 3]) -> (f64, f64, [f64; 3]) {
    let n = norm3(r);
    let (lp, lm) = ((1.0 + n) / 2.0, (1.0 - n) / 2.0);
    let dir = if n > 0.0 { [r[0] / n, r[1] / n, r[2] / n] } else { [0.0; 3] };
    ((lp.ln() + lm.ln()) / 2.0, (lp.ln() - lm.ln()) / 2.0, dir)
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `D_1(ρ_s, ρ_r)` on normalized qubit states.
fn qubit_kl(s: [f64; 3], r: [f64; 3]) -> f64 {
    let (a1, b1, d1) = bloch_log(s);
    let (a2, b2, d2) = bloch_log(r);
    // tr(ρ_s log X) = a + b (s·d) for log X = a I + b d·σ
    (a1 + b1 * dot3(s, d1)) - (a2 + b2 * dot3(s, d2))
}

/// `D_γ(ρ_s, ρ_r)` on normalized qubit states.
fn qubit_d(s: [f64; 3], r: [f64; 3], g: f64) -> f64 {
    if g == 1.0 {
        return qubit_kl(s, r);
    }
    if g == 0.0 {
        return qubit_kl(r, s);
    }
    let (a1, b1, d1) = bloch_power(s, g);
    let (a2, b2, d2) = bloch_power(r, 1.0 - g);
    let cross = 2.0 * (a1 * a2 + b1 * b2 * dot3(d1, d2));
    (1.0 - cross) / (g * (1.0 - g))
}

fn bloch_of(rho: &DensityOperator) -> [f64; 3] {
    let m = rho.matrix();
    [2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, (m[(0, 0)] - m[(1, 1)]).re]
}

/// Minimizes `f` over a box by repeated 21-point-per-axis grids, shrinking
/// tenfold around the best point down to a spacing of 1e−8.
fn zoom_grid(f: &dyn Fn(&[f64]) -> f64, center: Vec<f64>, mut half: f64) -> Vec<f64> {
    let dims = center.len();
    let mut best = center;
    while half > 1e-7 {
        let step = half / 10.0;
        let mut best_val = f64::INFINITY;
        let mut best_pt = best.clone();
        let total = 21usize.pow(dims as u32);
        for idx in 0..total {
            let mut k = idx;
            let p: Vec<f64> = (0..dims)
                .map(|d| {
                    let i = k % 21;
                    k /= 21;
                    best[d] + (i as f64 - 10.0) * step
                })
                .collect();
            let v = f(&p);
            if v < best_val {
                best_val = v;
                best_pt = p;
            }
        }
        best = best_pt;
        half /= 10.0;
    }
    best
}

fn inside(s: [f64; 3]) -> bool {
    norm3(s) < 1.0 - 1e-9
}

#[test]
fn qubit_magnetization_matches_closed_form_and_grid() {
    let sz = ObservableOperator::pauli_z();
    let q = QuantumConstraintSet::new().with_moment(sz, 0.5).with_normalization(1.0);
    // symmetric prior: diag(0.75, 0.25) for every γ
    let mixed = DensityOperator::maximally_mixed(2).unwrap();
    for g in [0.0, 0.3, 0.5, 1.0] {
        let out = q_project(&mixed, g, &q, &QuantumPenalty::None).unwrap();
        let target = CMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(0.75, 0.0), Complex64::new(0.25, 0.0)]));
        assert!(max_abs(&(out.state.matrix() - target)) < 1e-10, "γ={g}");
        assert!(out.kkt_residual < 1e-8);
    }
    // tilted prior against the grid oracle
    let r = [0.3, 0.2, -0.1];
    let omega = DensityOperator::from_bloch(r).unwrap();
    for g in [0.0, 0.5, 1.0] {
        let out = q_project(&omega, g, &q, &QuantumPenalty::None).unwrap();
        let f = |p: &[f64]| {
            let s = [p[0], p[1], 0.5];
            if inside(s) { qubit_d(s, r, g) } else { f64::INFINITY }
        };
        let best = zoom_grid(&f, vec![0.0, 0.0], 0.8);
        let s = bloch_of(&out.state);
        assert!((s[0] - best[0]).abs() < 1e-6 && (s[1] - best[1]).abs() < 1e-6, "γ={g} {s:?} vs {best:?}");
        assert!((s[2] - 0.5).abs() < 1e-10);
        // the crate's deviation agrees with the closed form
        assert!((q_objective(&QuantumPriorMixture::dirac(omega.clone()), g, &QuantumPenalty::None, &out.state).unwrap()
            - qubit_d(s, r, g))
        .abs()
            < 1e-10);
    }
}

#[test]
fn gamma_one_solution_is_a_matrix_exponential_family() {
    let mut r = rng(61);
    for _ in 0..10 {
        let n = r.random_range(2..=4);
        let omega = density(&mut r, n);
        let anchor = density(&mut r, n);
        let a = observable(&mut r, n);
        let c = anchor.expectation(&a);
        let q = QuantumConstraintSet::new().with_moment(a.clone(), c).with_normalization(1.0);
        let out = q_project(&omega, 1.0, &q, &QuantumPenalty::None).unwrap();
        // ρ′ = exp(log ω + λ A + κ I)
        let log_omega = omega.spectral().apply_real(f64::ln);
        let h = log_omega + a.matrix().scale(out.multipliers[0]) + CMatrix::identity(n, n).scale(out.multipliers[1]);
        let eig = h.symmetric_eigen();
        let e = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.exp(), 0.0)));
        let family = &eig.eigenvectors * e * eig.eigenvectors.adjoint();
        assert!(max_abs(&(family - out.state.matrix())) < 1e-9);
        // the primal solver reaches the same state
        let primal = q_project_with(&omega, 1.0, &q, &QuantumPenalty::None, &QProjectOptions {
            solver: QuantumSolver::PrimalNewton,
            ..Default::default()
        })
        .unwrap();
        assert!(trace_distance(primal.state.matrix(), out.state.matrix()).unwrap() < 1e-8);
    }
}

#[test]
fn two_atom_mixture_matches_grid() {
    let r1 = [0.4, -0.2, 0.1];
    let r2 = [-0.1, 0.3, 0.5];
    let prior = QuantumPriorMixture::new(vec![
        (0.3, DensityOperator::from_bloch(r1).unwrap()),
        (0.7, DensityOperator::from_bloch(r2).unwrap()),
    ])
    .unwrap();
    let q = QuantumConstraintSet::new().with_normalization(1.0);
    for g in [0.0, 0.5, 1.0] {
        let out = q_weighted_project(&prior, g, &q, &QuantumPenalty::None).unwrap();
        let f = |p: &[f64]| {
            let s = [p[0], p[1], p[2]];
            if inside(s) { 0.3 * qubit_d(s, r1, g) + 0.7 * qubit_d(s, r2, g) } else { f64::INFINITY }
        };
        let best = zoom_grid(&f, vec![0.0, 0.0, 0.0], 0.9);
        let s = bloch_of(&out.state);
        for k in 0..3 {
            assert!((s[k] - best[k]).abs() < 1e-6, "γ={g} {s:?} vs {best:?}");
        }
    }
    // equal atoms behave like a single atom
    let omega = DensityOperator::from_bloch(r1).unwrap();
    let twin = QuantumPriorMixture::new(vec![(0.5, omega.clone()), (0.5, omega.clone())]).unwrap();
    let qm = QuantumConstraintSet::new().with_moment(ObservableOperator::pauli_x(), 0.1).with_normalization(1.0);
    let a = q_weighted_project(&twin, 0.5, &qm, &QuantumPenalty::None).unwrap();
    let b = q_project(&omega, 0.5, &qm, &QuantumPenalty::None).unwrap();
    assert!(max_abs(&(a.state.matrix() - b.state.matrix())) < 1e-9);
}

fn diagonal_instance(r: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let p = simplex(r, n).into_vec();
    let a: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let anchor = simplex(r, n).into_vec();
    let c = a.iter().zip(&anchor).map(|(x, y)| x * y).sum();
    (p, a, c)
}

#[test]
fn commuting_sector_reproduces_classical_projections() {
    let mut r = rng(62);
    for _ in 0..20 {
        let n = r.random_range(2..=5);
        let (p, a, c) = diagonal_instance(&mut r, n);
        let (p2, _, _) = diagonal_instance(&mut r, n);
        for g in [0.0, 0.25, 0.5, 1.0] {
            let cq = ConstraintSet::new().with_moment(a.clone(), c).with_normalization(1.0);
            let qq = QuantumConstraintSet::new().with_moment(ObservableOperator::from_diagonal(&a), c).with_normalization(1.0);
            let classical = project(&ClassicalWeights::new(p.clone()).unwrap(), g, &cq, &Penalty::None).unwrap();
            let quantum = q_project(&DensityOperator::from_diagonal(&p).unwrap(), g, &qq, &QuantumPenalty::None).unwrap();
            let diag: Vec<f64> = (0..n).map(|i| quantum.state.matrix()[(i, i)].re).collect();
            assert!(max_diff(&diag, classical.state.as_slice()) < 1e-10, "γ={g}");

            let cm = PriorMixture::new(vec![(0.4, ClassicalWeights::new(p.clone()).unwrap()), (0.6, ClassicalWeights::new(p2.clone()).unwrap())]).unwrap();
            let qm = QuantumPriorMixture::new(vec![
                (0.4, DensityOperator::from_diagonal(&p).unwrap()),
                (0.6, DensityOperator::from_diagonal(&p2).unwrap()),
            ])
            .unwrap();
            let cw = weighted_project(&cm, g, &cq, &Penalty::None).unwrap();
            let qw = q_weighted_project(&qm, g, &qq, &QuantumPenalty::None).unwrap();
            let diag: Vec<f64> = (0..n).map(|i| qw.state.matrix()[(i, i)].re).collect();
            assert!(max_diff(&diag, cw.state.as_slice()) < 1e-10, "mixture γ={g}");

            // support constraint on the first n−1 coordinates
            let keep: Vec<usize> = (0..n - 1).collect();
            let mut proj = vec![1.0; n];
            proj[n - 1] = 0.0;
            let cs = ConstraintSet::new().with_support(keep).with_normalization(1.0);
            let qs = QuantumConstraintSet::new()
                .with_support(CMatrix::from_diagonal(&DVector::from_iterator(n, proj.iter().map(|v| Complex64::new(*v, 0.0)))))
                .with_normalization(1.0);
            if g > 0.0 {
                let cs_out = project(&ClassicalWeights::new(p.clone()).unwrap(), g, &cs, &Penalty::None).unwrap();
                let qs_out = q_project(&DensityOperator::from_diagonal(&p).unwrap(), g, &qs, &QuantumPenalty::None).unwrap();
                let diag: Vec<f64> = (0..n).map(|i| qs_out.state.matrix()[(i, i)].re).collect();
                assert!(max_diff(&diag, cs_out.state.as_slice()) < 1e-10, "support γ={g}");
            }
        }
        // trajectories
        let schedule_c = Schedule::new(0.0)
            .then(1.0, ConstraintSet::new().with_moment(a.clone(), c).with_normalization(1.0), Penalty::None)
            .unwrap();
        let schedule_q = QuantumSchedule::new(0.0)
            .then(
                1.0,
                QuantumConstraintSet::new().with_moment(ObservableOperator::from_diagonal(&a), c).with_normalization(1.0),
                QuantumPenalty::None,
            )
            .unwrap();
        for mode in [TrajectoryMode::Literal, TrajectoryMode::Chained] {
            let tc = trajectory(&ClassicalWeights::new(p.clone()).unwrap(), 0.5, &schedule_c, mode).unwrap();
            let tq = q_trajectory(&DensityOperator::from_diagonal(&p).unwrap(), 0.5, &schedule_q, mode).unwrap();
            for (x, y) in tc.iter().zip(&tq) {
                let diag: Vec<f64> = (0..n).map(|i| y.result.state.matrix()[(i, i)].re).collect();
                assert!(max_diff(&diag, x.result.state.as_slice()) < 1e-10);
            }
        }
    }
}

fn random_problem(r: &mut ChaCha8Rng, n: usize) -> (DensityOperator, QuantumConstraintSet, ObservableOperator) {
    let omega = density(r, n);
    let anchor = density(r, n);
    let a = observable(r, n);
    let c = anchor.expectation(&a);
    (omega, QuantumConstraintSet::new().with_moment(a.clone(), c).with_normalization(1.0), a)
}

fn assert_state_invariants(rho: &DensityOperator) {
    let m = rho.matrix();
    assert!(max_abs(&(m - m.adjoint())) < 1e-12);
    assert!(rho.min_eigenvalue() >= -1e-12);
    assert!((rho.trace() - 1.0).abs() < 1e-9);
}

#[test]
fn idempotence_and_two_start_uniqueness() {
    let mut r = rng(63);
    for _ in 0..10 {
        let n = r.random_range(2..=4);
        let (omega, q, _) = random_problem(&mut r, n);
        for g in [0.0, 0.5, 1.0] {
            let once = q_project(&omega, g, &q, &QuantumPenalty::None).unwrap();
            assert_state_invariants(&once.state);
            let twice = q_project(&once.state, g, &q, &QuantumPenalty::None).unwrap();
            assert!(max_abs(&(once.state.matrix() - twice.state.matrix())) < 1e-8, "γ={g}");
            let start = |s: DensityOperator| QProjectOptions { solver: QuantumSolver::PrimalNewton, start: Some(s), ..Default::default() };
            let a = q_project_with(&omega, g, &q, &QuantumPenalty::None, &start(DensityOperator::maximally_mixed(n).unwrap())).unwrap();
            let b = q_project_with(&omega, g, &q, &QuantumPenalty::None, &start(density(&mut r, n))).unwrap();
            assert!(trace_distance(a.state.matrix(), b.state.matrix()).unwrap() < 1e-6, "γ={g}");
        }
    }
}

/// Random feasible perturbation: a Hermitian direction HS-orthogonal to `A`
/// and `I`, scaled to keep the state positive.
fn feasible_state(r: &mut ChaCha8Rng, star: &DensityOperator, a: &ObservableOperator) -> DensityOperator {
    let n = star.dim();
    let basis = {
        let e0 = CMatrix::identity(n, n).unscale((n as f64).sqrt());
        let a0 = a.matrix() - &e0 * (e0.dotc(a.matrix()));
        let a0 = a0.unscale(a0.norm());
        [e0, a0]
    };
    let mut h = hermitian(r, n);
    for b in &basis {
        h -= b * b.dotc(&h);
    }
    let mut t = r.random_range(0.0..1.0);
    loop {
        let cand = star.matrix() + h.scale(t);
        if let Ok(rho) = DensityOperator::new(cand) {
            if rho.min_eigenvalue() > 0.0 {
                return rho;
            }
        }
        t *= 0.5;
    }
}

#[test]
fn no_feasible_state_beats_the_projection() {
    let mut r = rng(64);
    for _ in 0..5 {
        let n = r.random_range(2..=3);
        let (omega, q, a) = random_problem(&mut r, n);
        let prior = QuantumPriorMixture::dirac(omega.clone());
        for g in [0.0, 0.5, 1.0] {
            let star = q_project(&omega, g, &q, &QuantumPenalty::None).unwrap().state;
            let best = q_objective(&prior, g, &QuantumPenalty::None, &star).unwrap();
            for _ in 0..100 {
                let x = feasible_state(&mut r, &star, &a);
                assert!(q.violation(x.matrix()).unwrap() < 1e-9);
                assert!(q_objective(&prior, g, &QuantumPenalty::None, &x).unwrap() >= best - 1e-8);
            }
        }
    }
}

#[test]
fn magnetization_ramp_trajectory() {
    let omega = DensityOperator::maximally_mixed(2).unwrap();
    let mut schedule = QuantumSchedule::new(0.0);
    let ramp: Vec<f64> = (1..=8).map(|k| 0.1 * k as f64).collect();
    for (k, m) in ramp.iter().enumerate() {
        let q = QuantumConstraintSet::new().with_moment(ObservableOperator::pauli_z(), *m).with_normalization(1.0);
        schedule = schedule.then(k as f64 + 1.0, q, QuantumPenalty::None).unwrap();
    }
    let traj = q_trajectory(&omega, 1.0, &schedule, TrajectoryMode::Literal).unwrap();
    assert_eq!(traj[0].result.state, omega);
    let mut last = f64::NEG_INFINITY;
    for (point, m) in traj[1..].iter().zip(&ramp) {
        let lambda = point.result.multipliers[0];
        assert!((lambda - m.atanh()).abs() < 1e-10);
        assert!(lambda > last);
        last = lambda;
        let rho = point.result.state.matrix();
        assert!((rho[(0, 0)].re - (1.0 + m) / 2.0).abs() < 1e-12);
        assert_state_invariants(&point.result.state);
    }
}

#[test]
fn luders_agreement_in_commuting_cases() {
    let mut r = rng(65);
    for k in 0..30 {
        let n = r.random_range(2..=4);
        let mut d = simplex(&mut r, n).into_vec();
        if k % 3 == 0 {
            // non-faithful state
            d[0] = 0.0;
            let s: f64 = d.iter().sum();
            d.iter_mut().for_each(|v| *v /= s);
        }
        let mut pd: Vec<f64> = (0..n).map(|_| if r.random_range(0.0..1.0) < 0.6 { 1.0 } else { 0.0 }).collect();
        pd[n - 1] = 1.0;
        // common random unitary frame
        let u = complex_matrix(&mut r, n).qr().q();
        let rho = DensityOperator::new(&u * CMatrix::from_diagonal(&DVector::from_iterator(n, d.iter().map(|v| Complex64::new(*v, 0.0)))) * u.adjoint()).unwrap();
        let p = &u * CMatrix::from_diagonal(&DVector::from_iterator(n, pd.iter().map(|v| Complex64::new(*v, 0.0)))) * u.adjoint();
        let p = (&p + p.adjoint()).scale(0.5);
        for g in [0.0, 0.3, 0.5, 1.0] {
            let report = luders_experiment(&rho, &p, g).unwrap();
            assert!(report.commuting);
            assert!(report.candidates.iter().any(|c| c.state.is_some()));
            assert!(report.max_trace_distance() < 1e-10, "γ={g}: {}", report.max_trace_distance());
        }
    }
    // a non-commuting case yields a descriptive report
    let rho = DensityOperator::from_bloch([0.5, 0.0, 0.3]).unwrap();
    let v = [Complex64::new(0.8, 0.0), Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.0)];
    let rho3 = DensityOperator::new({
        let mut m = CMatrix::zeros(3, 3);
        m.view_mut((0, 0), (2, 2)).copy_from(&rho.matrix().scale(0.8));
        m[(2, 2)] = Complex64::new(0.2, 0.0);
        m
    })
    .unwrap();
    let vv = DVector::from_row_slice(&v);
    let p = &vv * vv.adjoint() + CMatrix::from_fn(3, 3, |i, j| Complex64::new(if i == 2 && j == 2 { 1.0 } else { 0.0 }, 0.0));
    let report = luders_experiment(&rho3, &p, 0.3).unwrap();
    assert!(!report.commuting);
    assert_eq!(report.candidates.len(), 2);
}
