//! Constrained maximum relative γ-entropy updating on density operators.
//!
//! `q_project(ω, γ, Q, F) = argmin_{ρ ∈ Q} D_γ(ρ, ω) + F(ρ)`, the quantum
//! counterpart of [`crate::entproj::project`] with the same argument-order
//! convention. At γ = 1 with moment constraints the minimizer is the matrix
//! exponential family `ρ = exp(log ω + Σ λ_k A_k + κ I)`.
//!
//! The problem is solved in a compressed space: a support constraint `P` and
//! the supports of the prior restrict states to a subspace `range V` and the
//! unknown becomes an `r × r` positive definite matrix `Y` with `ρ = V Y V†`.
//! A strictly feasible start comes from a maximum-entropy dual Newton run;
//! γ = 1 without quadratic penalty is solved by Newton on the dual of the
//! exponential-family ansatz, everything else by primal Newton on Hermitian
//! coordinates. Gradients of `tr K f(Y)` use the Daleckii–Krein formula
//! `U (Γ_f ∘ U†KU) U†` with first divided differences `Γ_f` of `f`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::reduce_constraints;
use crate::newton::{equality_newton, NewtonSettings, SmoothObjective};
use crate::qstate::{
    l2_embed, q_d_gamma, schatten_norm, trace_product, CMatrix, DensityOperator, ObservableOperator, Spectral,
    FAITHFUL_TOL,
};
use crate::{Error, Result};

/// KKT residual accepted as converged.
pub const Q_KKT_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 500;

fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Feasible set: `tr(ρ A_k) = c_k`, an optional support projector `P`
/// (`ρ = PρP`) and an optional trace target.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuantumConstraintSet {
    moments: Vec<(ObservableOperator, f64)>,
    support: Option<CMatrix>,
    normalization: Option<f64>,
}

impl QuantumConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_moment(mut self, a: ObservableOperator, c: f64) -> Self {
        self.moments.push((a, c));
        self
    }

    /// `p` must be an orthogonal projector (checked when solving).
    pub fn with_support(mut self, p: CMatrix) -> Self {
        self.support = Some(p);
        self
    }

    pub fn with_normalization(mut self, trace: f64) -> Self {
        self.normalization = Some(trace);
        self
    }

    pub fn moments(&self) -> &[(ObservableOperator, f64)] {
        &self.moments
    }

    pub fn support(&self) -> Option<&CMatrix> {
        self.support.as_ref()
    }

    pub fn normalization(&self) -> Option<f64> {
        self.normalization
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty() && self.support.is_none() && self.normalization.is_none()
    }

    fn validate(&self, n: usize) -> Result<()> {
        for (a, c) in &self.moments {
            if a.dim() != n {
                return Err(Error::LengthMismatch(a.dim(), n));
            }
            if !c.is_finite() {
                return Err(Error::OutOfRange("moment target must be finite".into()));
            }
        }
        if let Some(p) = &self.support {
            if p.shape() != (n, n) {
                return Err(Error::ShapeMismatch { expected: format!("{n}×{n}"), got: format!("{:?}", p.shape()) });
            }
            let herm = max_abs(&(p - p.adjoint()));
            let idem = max_abs(&(p * p - p));
            if herm > 1e-10 || idem > 1e-10 {
                return Err(Error::InvalidOperator("support constraint is not an orthogonal projector".into()));
            }
        }
        if self.normalization.is_some_and(|m| !m.is_finite()) {
            return Err(Error::OutOfRange("trace target must be finite".into()));
        }
        Ok(())
    }

    /// Observables of the linear rows: moments first, then the identity.
    fn rows(&self, n: usize) -> (Vec<CMatrix>, DVector<f64>) {
        let mut rows: Vec<CMatrix> = self.moments.iter().map(|(a, _)| a.matrix().clone()).collect();
        let mut c: Vec<f64> = self.moments.iter().map(|(_, c)| *c).collect();
        if let Some(m) = self.normalization {
            rows.push(CMatrix::identity(n, n));
            c.push(m);
        }
        (rows, DVector::from_vec(c))
    }

    /// Largest violation of any constraint by `rho`.
    pub fn violation(&self, rho: &CMatrix) -> Result<f64> {
        self.validate(rho.nrows())?;
        let (rows, c) = self.rows(rho.nrows());
        let mut v: f64 = 0.0;
        for (a, target) in rows.iter().zip(c.iter()) {
            v = v.max((trace_product(rho, a).re - target).abs());
        }
        if let Some(p) = &self.support {
            let n = rho.nrows();
            let q = CMatrix::identity(n, n) - p;
            v = v.max(max_abs(&(&q * rho)));
        }
        Ok(v)
    }
}

/// Convex penalty on density operators.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumPenalty {
    None,
    /// `tr(ρ S)`.
    Linear { slope: ObservableOperator },
    /// `½ w ‖ρ − C‖²₂` with `w ≥ 0` and Hermitian `C`.
    Quadratic { weight: f64, center: CMatrix },
}

impl QuantumPenalty {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            QuantumPenalty::None => Ok(()),
            QuantumPenalty::Linear { slope } => {
                if slope.dim() != n {
                    return Err(Error::LengthMismatch(slope.dim(), n));
                }
                Ok(())
            }
            QuantumPenalty::Quadratic { weight, center } => {
                if !(*weight >= 0.0) || !weight.is_finite() {
                    return Err(Error::OutOfRange(format!("penalty weight {weight} must be nonnegative")));
                }
                if center.shape() != (n, n) {
                    return Err(Error::ShapeMismatch { expected: format!("{n}×{n}"), got: format!("{:?}", center.shape()) });
                }
                ObservableOperator::new(center.clone()).map(|_| ())
            }
        }
    }

    pub fn eval(&self, rho: &CMatrix) -> f64 {
        match self {
            QuantumPenalty::None => 0.0,
            QuantumPenalty::Linear { slope } => trace_product(rho, slope.matrix()).re,
            QuantumPenalty::Quadratic { weight, center } => {
                0.5 * weight * schatten_norm(&(rho - center), 2.0).expect("p = 2").powi(2)
            }
        }
    }

    fn gradient(&self, rho: &CMatrix) -> CMatrix {
        match self {
            QuantumPenalty::None => CMatrix::zeros(rho.nrows(), rho.ncols()),
            QuantumPenalty::Linear { slope } => slope.matrix().clone(),
            QuantumPenalty::Quadratic { weight, center } => (rho - center).scale(*weight),
        }
    }
}

/// Finite prior measure on density operators.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPriorMixture {
    atoms: Vec<(f64, DensityOperator)>,
}

impl QuantumPriorMixture {
    pub fn new(atoms: Vec<(f64, DensityOperator)>) -> Result<Self> {
        let Some((_, first)) = atoms.first() else {
            return Err(Error::InvalidWeights("prior mixture needs at least one atom".into()));
        };
        let n = first.dim();
        for (w, rho) in &atoms {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidWeights(format!("mixture weight {w} must be positive")));
            }
            if rho.dim() != n {
                return Err(Error::LengthMismatch(rho.dim(), n));
            }
        }
        Ok(Self { atoms })
    }

    pub fn dirac(rho: DensityOperator) -> Self {
        Self { atoms: vec![(1.0, rho)] }
    }

    pub fn atoms(&self) -> &[(f64, DensityOperator)] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].1.dim()
    }

    fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|(w, _)| w).sum()
    }
}

/// `Σ_j w_j D_γ(ρ, ω_j) + F(ρ)`.
pub fn q_objective(prior: &QuantumPriorMixture, gamma: f64, penalty: &QuantumPenalty, rho: &DensityOperator) -> Result<f64> {
    let mut s = 0.0;
    for (w, omega) in &prior.atoms {
        s += w * q_d_gamma(rho, omega, gamma)?;
    }
    Ok(s + penalty.eval(rho.matrix()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuantumSolver {
    /// Dual Newton at γ = 1 without quadratic penalty, primal Newton otherwise.
    #[default]
    Auto,
    DualNewton,
    PrimalNewton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QProjectOptions {
    pub solver: QuantumSolver,
    /// Start for the primal solver; must be positive definite on the solution
    /// subspace. Defaults to the maximum-entropy feasible state.
    pub start: Option<DensityOperator>,
    pub max_iterations: usize,
}

impl Default for QProjectOptions {
    fn default() -> Self {
        Self { solver: QuantumSolver::Auto, start: None, max_iterations: MAX_ITERATIONS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QProjectionResult {
    pub state: DensityOperator,
    /// Multipliers of the linear rows (moments, then trace) with
    /// `∇(objective) = Σ λ_k A_k` on the solution subspace.
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub solver: QuantumSolver,
}

pub fn q_project(omega: &DensityOperator, gamma: f64, q: &QuantumConstraintSet, penalty: &QuantumPenalty) -> Result<QProjectionResult> {
    q_project_with(omega, gamma, q, penalty, &QProjectOptions::default())
}

pub fn q_project_with(
    omega: &DensityOperator,
    gamma: f64,
    q: &QuantumConstraintSet,
    penalty: &QuantumPenalty,
    options: &QProjectOptions,
) -> Result<QProjectionResult> {
    q_weighted_project_with(&QuantumPriorMixture::dirac(omega.clone()), gamma, q, penalty, options)
}

pub fn q_weighted_project(
    prior: &QuantumPriorMixture,
    gamma: f64,
    q: &QuantumConstraintSet,
    penalty: &QuantumPenalty,
) -> Result<QProjectionResult> {
    q_weighted_project_with(prior, gamma, q, penalty, &QProjectOptions::default())
}

// ---------------------------------------------------------------------------
// Hermitian coordinates and spectral helpers

/// Real coordinates of a Hermitian `r × r` matrix: diagonal, then `√2 re` and
/// `√2 im` of the upper triangle, so that `re tr(AB) = ⟨vec A, vec B⟩`.
fn herm_to_vec(m: &CMatrix) -> DVector<f64> {
    let r = m.nrows();
    let mut v = Vec::with_capacity(r * r);
    for i in 0..r {
        v.push(m[(i, i)].re);
    }
    let s = std::f64::consts::SQRT_2;
    for i in 0..r {
        for j in i + 1..r {
            v.push(s * m[(i, j)].re);
            v.push(s * m[(i, j)].im);
        }
    }
    DVector::from_vec(v)
}

fn vec_to_herm(v: &DVector<f64>, r: usize) -> CMatrix {
    let mut m = CMatrix::zeros(r, r);
    for i in 0..r {
        m[(i, i)] = cplx(v[i]);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = r;
    for i in 0..r {
        for j in i + 1..r {
            let z = Complex64::new(s * v[k], s * v[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// First divided differences of the functions used by the solvers, computed
/// without cancellation for close arguments.
#[derive(Clone, Copy)]
enum Divided {
    Exp,
    Log,
    Power(f64),
}

impl Divided {
    fn eval(self, a: f64, b: f64) -> f64 {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        match self {
            Divided::Exp => {
                if hi == lo {
                    hi.exp()
                } else {
                    lo.exp() * (hi - lo).exp_m1() / (hi - lo)
                }
            }
            Divided::Log => {
                if hi == lo {
                    1.0 / hi
                } else {
                    ((hi - lo) / lo).ln_1p() / (hi - lo)
                }
            }
            Divided::Power(g) => {
                if lo <= 0.0 {
                    if hi <= 0.0 {
                        0.0
                    } else {
                        hi.powf(g - 1.0)
                    }
                } else if hi == lo {
                    g * hi.powf(g - 1.0)
                } else {
                    lo.powf(g) * (g * ((hi - lo) / lo).ln_1p()).exp_m1() / (hi - lo)
                }
            }
        }
    }
}

/// `U (Γ ∘ U† K U) U†`: the gradient of `Y ↦ re tr(K f(Y))`, equivalently the
/// Fréchet derivative of `f` at `Y` applied to `K`.
fn daleckii_krein(sp: &Spectral, k: &CMatrix, f: Divided) -> CMatrix {
    let u = &sp.vectors;
    let kp = u.adjoint() * k * u;
    let r = sp.dim();
    let g = CMatrix::from_fn(r, r, |i, j| kp[(i, j)] * f.eval(sp.values[i], sp.values[j]));
    u * g * u.adjoint()
}

/// Orthonormal basis (columns) of the eigenvectors of a Hermitian matrix
/// whose eigenvalues satisfy `keep`.
fn eigen_basis(m: &CMatrix, keep: impl Fn(f64) -> bool) -> (CMatrix, CMatrix) {
    let sp = Spectral::of(m);
    let n = m.nrows();
    let inside: Vec<usize> = (0..n).filter(|&i| keep(sp.values[i])).collect();
    let outside: Vec<usize> = (0..n).filter(|&i| !keep(sp.values[i])).collect();
    let pick = |idx: &[usize]| CMatrix::from_fn(n, idx.len(), |r, c| sp.vectors[(r, idx[c])]);
    (pick(&inside), pick(&outside))
}

fn hermitian(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

// ---------------------------------------------------------------------------
// Solver

/// The compressed problem on `Y` (`ρ = V Y V†`).
struct Compressed {
    gamma: f64,
    r: usize,
    weight: f64,
    /// γ ∈ (0,1): `Σ w_j V† ω_j^{1−γ} V`; γ = 0: `Σ w_j V† ω_j V`;
    /// γ = 1: `Σ w_j V† log(ω_j) V`.
    prior_term: CMatrix,
    /// Compressed linear penalty slope.
    slope: CMatrix,
    /// Quadratic penalty weight and compressed center.
    quadratic: Option<(f64, CMatrix)>,
}

impl Compressed {
    fn gradient_matrix(&self, y: &CMatrix) -> CMatrix {
        let sp = Spectral::of(y);
        let id = CMatrix::identity(self.r, self.r);
        let dev = if self.gamma == 1.0 {
            sp.apply_real(|l| l.ln()).scale(self.weight) - &self.prior_term
        } else if self.gamma == 0.0 {
            id.scale(self.weight) - daleckii_krein(&sp, &self.prior_term, Divided::Log)
        } else {
            (id.scale(self.weight) - daleckii_krein(&sp, &self.prior_term, Divided::Power(self.gamma)))
                .unscale(1.0 - self.gamma)
        };
        let mut g = dev + &self.slope;
        if let Some((w, center)) = &self.quadratic {
            g += (y - center).scale(*w);
        }
        hermitian(&g)
    }
}

impl SmoothObjective for Compressed {
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|v| v.is_finite()) && Spectral::of(&vec_to_herm(x, self.r)).values.min() > 0.0
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        herm_to_vec(&self.gradient_matrix(&vec_to_herm(x, self.r)))
    }

    /// Central differences of the exact gradient.
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = x.len();
        let lmin = Spectral::of(&vec_to_herm(x, self.r)).values.min();
        let h = 1e-5 * lmin;
        let mut hess = DMatrix::zeros(m, m);
        for i in 0..m {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let col = (self.gradient(&xp) - self.gradient(&xm)) / (2.0 * h);
            hess.set_column(i, &col);
        }
        (&hess + hess.transpose()) * 0.5
    }
}

/// Newton on the dual of `min W tr(Y log Y − Y) − W tr(Y B)` subject to
/// `tr(Y A_k) = c_k`: `Y(λ) = exp(B + Σ λ_k A_k / W)`.
fn exponential_family_dual(
    b: &CMatrix,
    w: f64,
    rows: &[CMatrix],
    c: &DVector<f64>,
    max_iterations: usize,
) -> Result<(CMatrix, DVector<f64>, usize)> {
    let k = rows.len();
    let state = |lambda: &DVector<f64>| -> (Spectral, CMatrix) {
        let mut h = b.clone();
        for (a, l) in rows.iter().zip(lambda.iter()) {
            h += a.scale(*l / w);
        }
        let sp = Spectral::of(&hermitian(&h));
        let y = sp.apply_real(f64::exp);
        (sp, y)
    };
    let moments = |y: &CMatrix| DVector::from_iterator(k, rows.iter().map(|a| trace_product(y, a).re));
    let dual = |lambda: &DVector<f64>, y: &CMatrix| lambda.dot(c) - w * y.trace().re;
    let scale = c.amax().max(1.0);
    let mut lambda = DVector::zeros(k);
    let (mut sp, mut y) = state(&lambda);
    for it in 0..max_iterations {
        let resid = c - moments(&y);
        if resid.amax() <= 1e-14 * scale {
            return Ok((y, lambda, it));
        }
        // J_kl = tr(A_k Dexp[H](A_l)); the dual Hessian is −J/W².
        let rotated: Vec<CMatrix> = rows.iter().map(|a| sp.vectors.adjoint() * a * &sp.vectors).collect();
        let r = sp.dim();
        let gamma = DMatrix::from_fn(r, r, |i, j| Divided::Exp.eval(sp.values[i], sp.values[j]));
        let jac = DMatrix::from_fn(k, k, |p, q| {
            let mut s = 0.0;
            for i in 0..r {
                for j in 0..r {
                    s += (rotated[p][(i, j)].conj() * rotated[q][(i, j)]).re * gamma[(i, j)];
                }
            }
            s
        });
        let Some(step) = jac.clone().cholesky().map(|ch| ch.solve(&resid)).or_else(|| jac.lu().solve(&resid)) else {
            return Err(Error::NonConvergence { iterations: it, residual: resid.amax() });
        };
        let step = step * w;
        let current = dual(&lambda, &y);
        let ascent = resid.dot(&step);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-14 {
            let ln = &lambda + &step * t;
            let (spn, yn) = state(&ln);
            let value = dual(&ln, &yn);
            // near the optimum the dual value is flat to roundoff; a shrinking residual decides instead
            let shrinks = || (c - moments(&yn)).norm() <= (1.0 - 0.5 * t) * resid.norm();
            if value.is_finite() && (value >= current + 1e-4 * t * ascent || shrinks()) {
                lambda = ln;
                sp = spn;
                y = yn;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved || lambda.amax() > 1e8 {
            let res = resid.amax();
            if moved || res > Q_KKT_TOL * scale {
                return Err(Error::NonConvergence { iterations: it, residual: res });
            }
            return Ok((y, lambda, it));
        }
    }
    let res = (c - moments(&y)).amax();
    if res <= Q_KKT_TOL * scale {
        Ok((y, lambda, max_iterations))
    } else {
        Err(Error::NonConvergence { iterations: max_iterations, residual: res })
    }
}

pub fn q_weighted_project_with(
    prior: &QuantumPriorMixture,
    gamma: f64,
    constraints: &QuantumConstraintSet,
    penalty: &QuantumPenalty,
    options: &QProjectOptions,
) -> Result<QProjectionResult> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::OutOfRange(format!("γ = {gamma} outside [0, 1]")));
    }
    let n = prior.dim();
    constraints.validate(n)?;
    penalty.validate(n)?;
    if constraints.is_empty() && matches!(penalty, QuantumPenalty::None) && prior.atoms.len() == 1 {
        return Ok(QProjectionResult {
            state: prior.atoms[0].1.clone(),
            multipliers: vec![],
            kkt_residual: 0.0,
            iterations: 0,
            solver: QuantumSolver::Auto,
        });
    }

    let id = CMatrix::identity(n, n);
    let p = constraints.support.clone().unwrap_or_else(|| id.clone());
    let (range_p, _) = eigen_basis(&p, |l| l > 0.5);
    if range_p.ncols() == 0 {
        return Err(Error::Infeasible("support projector is zero".into()));
    }

    // Solution subspace V and, for γ < 1, the uncharged part U of range P.
    let (v, uncharged) = if gamma == 1.0 {
        let mut m = id.clone() - &p;
        for (_, omega) in &prior.atoms {
            m += &id - omega.support_projector();
        }
        let (v, _) = eigen_basis(&hermitian(&m), |l| l < 1e-8);
        (v, CMatrix::zeros(n, 0))
    } else {
        if gamma == 0.0 {
            for (_, omega) in &prior.atoms {
                let outside = (&id - &p) * omega.matrix() * (&id - &p);
                if outside.trace().re > FAITHFUL_TOL * omega.trace().max(1.0) {
                    return Err(Error::InfiniteInfimum("prior support is not contained in the support constraint".into()));
                }
            }
        }
        let mut k = CMatrix::zeros(range_p.ncols(), range_p.ncols());
        for (w, omega) in &prior.atoms {
            k += (range_p.adjoint() * omega.matrix() * &range_p).scale(*w);
        }
        let kmax = max_abs(&k).max(1e-300);
        let (inside, outside) = eigen_basis(&hermitian(&k), |l| l > FAITHFUL_TOL * kmax.max(1.0));
        (&range_p * inside, &range_p * outside)
    };
    let r = v.ncols();
    if r == 0 {
        return Err(Error::Infeasible("no state is supported where the deviation is finite".into()));
    }
    let w_total = prior.total_weight();

    let (rows_full, c_full) = constraints.rows(n);
    let compressed_rows: Vec<CMatrix> = rows_full.iter().map(|a| hermitian(&(v.adjoint() * a * &v))).collect();
    let a_vec = DMatrix::from_fn(compressed_rows.len(), r * r, |i, j| herm_to_vec(&compressed_rows[i])[j]);
    let reduced = reduce_constraints(&a_vec, &c_full, RANK_TOL)?;
    let reduced_rows: Vec<CMatrix> =
        (0..reduced.a.nrows()).map(|i| vec_to_herm(&reduced.a.row(i).transpose(), r)).collect();

    // Phase 1: maximum-entropy feasible state on the compressed space.
    let zero = CMatrix::zeros(r, r);
    let (y_start, _, _) = exponential_family_dual(&zero, 1.0, &reduced_rows, &reduced.c, options.max_iterations)
        .map_err(|e| match e {
            Error::NonConvergence { residual, .. } => Error::Infeasible(format!(
                "no positive definite state on the solution subspace satisfies the constraints (residual {residual:e})"
            )),
            other => other,
        })?;

    let prior_term = {
        let mut t = CMatrix::zeros(r, r);
        for (w, omega) in &prior.atoms {
            let sp = omega.spectral();
            let f = if gamma == 1.0 {
                sp.apply_real(|l| if l > FAITHFUL_TOL { l.ln() } else { 0.0 })
            } else if gamma == 0.0 {
                omega.matrix().clone()
            } else {
                sp.apply_real(|l| if l > 0.0 { l.powf(1.0 - gamma) } else { 0.0 })
            };
            t += (v.adjoint() * f * &v).scale(*w);
        }
        hermitian(&t)
    };
    let (slope, quadratic) = match penalty {
        QuantumPenalty::None => (zero.clone(), None),
        QuantumPenalty::Linear { slope } => (hermitian(&(v.adjoint() * slope.matrix() * &v)), None),
        QuantumPenalty::Quadratic { weight, center } => (zero.clone(), Some((*weight, hermitian(&(v.adjoint() * center * &v))))),
    };
    let problem = Compressed { gamma, r, weight: w_total, prior_term, slope, quadratic };

    let use_dual = match options.solver {
        QuantumSolver::Auto => gamma == 1.0 && !matches!(penalty, QuantumPenalty::Quadratic { .. }),
        QuantumSolver::DualNewton => {
            if gamma != 1.0 || matches!(penalty, QuantumPenalty::Quadratic { .. }) {
                return Err(Error::OutOfRange("dual Newton needs γ = 1 and no quadratic penalty".into()));
            }
            true
        }
        QuantumSolver::PrimalNewton => false,
    };

    let (y, lambda_red, iterations) = if use_dual {
        let b = (&problem.prior_term - &problem.slope).unscale(w_total);
        exponential_family_dual(&b, w_total, &reduced_rows, &reduced.c, options.max_iterations)?
    } else {
        let y0 = match &options.start {
            Some(s) => {
                if s.dim() != n {
                    return Err(Error::LengthMismatch(s.dim(), n));
                }
                hermitian(&(v.adjoint() * s.matrix() * &v))
            }
            None => y_start,
        };
        let settings = NewtonSettings { target: 1e-11, accept: Q_KKT_TOL, max_iterations: options.max_iterations };
        let sol = equality_newton(&problem, &reduced.a, &reduced.c, herm_to_vec(&y0), settings)?;
        (vec_to_herm(&sol.x, r), sol.lambda, sol.iterations)
    };

    let rho = hermitian(&(&v * &y * v.adjoint()));
    let lambda_full = &reduced.back * &lambda_red;

    // KKT residual: stationarity on the subspace, feasibility on the original rows.
    let mut lam_mat = CMatrix::zeros(r, r);
    for (a, l) in reduced_rows.iter().zip(lambda_red.iter()) {
        lam_mat += a.scale(*l);
    }
    let stationarity = herm_to_vec(&(problem.gradient_matrix(&y) - &lam_mat)).amax();
    let feasibility = constraints.violation(&rho)?;
    let mut support_violation: f64 = 0.0;
    if uncharged.ncols() > 0 {
        // Gradient of the Lagrangian on the uncharged block and its coupling to the solution block.
        let mut g = penalty.gradient(&rho);
        for (a, l) in rows_full.iter().zip(lambda_full.iter()) {
            g -= a.scale(*l);
        }
        let slope_dev = if gamma == 0.0 { w_total } else { w_total / (1.0 - gamma) };
        let guu = hermitian(&(uncharged.adjoint() * &g * &uncharged)) + CMatrix::identity(uncharged.ncols(), uncharged.ncols()).scale(slope_dev);
        let gcu = v.adjoint() * &g * &uncharged;
        support_violation = max_abs(&gcu).max(-Spectral::of(&guu).values.min()).max(0.0);
        if support_violation > Q_KKT_TOL {
            return Err(Error::PriorSupport(format!("optimality fails off the prior support (violation {support_violation:e})")));
        }
    }
    let kkt_residual = stationarity.max(feasibility).max(support_violation);
    if kkt_residual > Q_KKT_TOL {
        return Err(Error::NonConvergence { iterations, residual: kkt_residual });
    }
    Ok(QProjectionResult {
        state: DensityOperator::new(rho)?,
        multipliers: lambda_full.iter().copied().collect(),
        kkt_residual,
        iterations,
        solver: if use_dual { QuantumSolver::DualNewton } else { QuantumSolver::PrimalNewton },
    })
}

// ---------------------------------------------------------------------------
// Trajectories

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumScheduleStep {
    pub t: f64,
    pub constraints: QuantumConstraintSet,
    pub penalty: QuantumPenalty,
}

/// Time-indexed quantum constraints; the initial time is unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSchedule {
    t0: f64,
    steps: Vec<QuantumScheduleStep>,
}

impl QuantumSchedule {
    pub fn new(t0: f64) -> Self {
        Self { t0, steps: Vec::new() }
    }

    pub fn then(mut self, t: f64, constraints: QuantumConstraintSet, penalty: QuantumPenalty) -> Result<Self> {
        let last = self.steps.last().map_or(self.t0, |s| s.t);
        if !(t > last) {
            return Err(Error::OutOfRange(format!("schedule time {t} does not exceed {last}")));
        }
        self.steps.push(QuantumScheduleStep { t, constraints, penalty });
        Ok(self)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn steps(&self) -> &[QuantumScheduleStep] {
        &self.steps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumTrajectoryPoint {
    pub t: f64,
    pub result: QProjectionResult,
}

/// Quantum entropic evolution; element 0 is `ω_0`. Chained mode is inherently
/// sequential, literal mode projects `ω_0` at every step.
pub fn q_trajectory(
    omega0: &DensityOperator,
    gamma: f64,
    schedule: &QuantumSchedule,
    mode: crate::entproj::TrajectoryMode,
) -> Result<Vec<QuantumTrajectoryPoint>> {
    let initial = QProjectionResult {
        state: omega0.clone(),
        multipliers: vec![],
        kkt_residual: 0.0,
        iterations: 0,
        solver: QuantumSolver::Auto,
    };
    let mut out = vec![QuantumTrajectoryPoint { t: schedule.t0, result: initial }];
    for (k, step) in schedule.steps.iter().enumerate() {
        let source = match mode {
            crate::entproj::TrajectoryMode::Literal => omega0,
            crate::entproj::TrajectoryMode::Chained => &out[k].result.state,
        };
        let result = q_project(source, gamma, &step.constraints, &step.penalty)
            .map_err(|e| Error::AtStep { step: k + 1, source: Box::new(e) })?;
        out.push(QuantumTrajectoryPoint { t: step.t, result });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Lüders comparison

/// `½ ‖A − B‖₁`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    Ok(0.5 * schatten_norm(&(a - b), 1.0)?)
}

/// One entropic update in the Lüders comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct LudersCandidate {
    /// The γ passed to [`q_project`]: either γ itself or the swapped order 1 − γ.
    pub order_gamma: f64,
    /// `None` when the infimum is infinite for this order.
    pub state: Option<DensityOperator>,
    pub trace_distance: Option<f64>,
    /// `D_{1/2}(candidate, Lüders state)`.
    pub d_half: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LudersReport {
    pub gamma: f64,
    pub luders_state: DensityOperator,
    pub commuting: bool,
    pub candidates: Vec<LudersCandidate>,
}

impl LudersReport {
    /// Largest trace distance of a finite candidate from the Lüders state.
    pub fn max_trace_distance(&self) -> f64 {
        self.candidates.iter().filter_map(|c| c.trace_distance).fold(0.0, f64::max)
    }
}

/// Compares `PρP / tr(PρP)` with the entropic updates under "supported in
/// range P, unit trace", for both argument orders. Descriptive only.
pub fn luders_experiment(rho: &DensityOperator, p: &CMatrix, gamma: f64) -> Result<LudersReport> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::OutOfRange(format!("γ = {gamma} outside [0, 1]")));
    }
    let q = QuantumConstraintSet::new().with_support(p.clone()).with_normalization(1.0);
    q.validate(rho.dim())?;
    let prp = p * rho.matrix() * p;
    let mass = prp.trace().re;
    if !(mass > FAITHFUL_TOL) {
        return Err(Error::DegenerateConditioning { level: mass });
    }
    let luders = DensityOperator::new(prp.unscale(mass))?;
    let commuting = rho.commutes_with(p, 1e-12);
    let mut orders = vec![gamma];
    if 1.0 - gamma != gamma {
        orders.push(1.0 - gamma);
    }
    let mut candidates = Vec::new();
    for g in orders {
        let state = match q_project(rho, g, &q, &QuantumPenalty::None) {
            Ok(res) => Some(res.state),
            Err(Error::InfiniteInfimum(_)) => None,
            Err(e) => return Err(e),
        };
        let trace_distance = state.as_ref().map(|s| trace_distance(s.matrix(), luders.matrix())).transpose()?;
        let d_half = state.as_ref().map(|s| q_d_gamma(s, &luders, 0.5)).transpose()?;
        candidates.push(LudersCandidate { order_gamma: g, state, trace_distance, d_half });
    }
    Ok(LudersReport { gamma, luders_state: luders, commuting, candidates })
}

/// `½ ‖2ω^{1/2} − 2φ^{1/2}‖²₂`, the Hilbert-space form of `D_{1/2}`.
pub fn hilbert_half_deviation(omega: &DensityOperator, phi: &DensityOperator) -> Result<f64> {
    if omega.dim() != phi.dim() {
        return Err(Error::LengthMismatch(omega.dim(), phi.dim()));
    }
    Ok(0.5 * schatten_norm(&(l2_embed(omega) - l2_embed(phi)), 2.0)?.powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> DensityOperator {
        DensityOperator::from_diagonal(d).unwrap()
    }

    #[test]
    fn hermitian_coordinates_round_trip() {
        let m = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let h = hermitian(&m);
        let back = vec_to_herm(&herm_to_vec(&h), 3);
        assert!(max_abs(&(back - &h)) < 1e-14);
        let g = hermitian(&CMatrix::from_fn(3, 3, |i, j| Complex64::new(1.0 / (1 + i + j) as f64, (i * j) as f64)));
        assert!((herm_to_vec(&h).dot(&herm_to_vec(&g)) - trace_product(&h, &g).re).abs() < 1e-12);
    }

    #[test]
    fn divided_differences_are_accurate() {
        for f in [Divided::Exp, Divided::Log, Divided::Power(0.3)] {
            let (a, b) = (0.7, 0.7 + 1e-9);
            let near = f.eval(a, b);
            let at = f.eval(a, a);
            assert!((near - at).abs() < 1e-8 * at.abs());
        }
        assert!((Divided::Exp.eval(1.0, 0.0) - (1f64.exp() - 1.0)).abs() < 1e-15);
        assert!((Divided::Log.eval(2.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!((Divided::Power(0.5).eval(4.0, 1.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn daleckii_krein_matches_finite_differences() {
        let y = hermitian(&CMatrix::from_fn(3, 3, |i, j| {
            if i == j { cplx(1.0 + i as f64) } else { Complex64::new(0.2, 0.1 * (i as f64 - j as f64)) }
        }));
        let k = hermitian(&CMatrix::from_fn(3, 3, |i, j| Complex64::new((i + j) as f64 * 0.3, (i as f64) * 0.2)));
        let e = hermitian(&CMatrix::from_fn(3, 3, |i, j| Complex64::new(0.5 - (i * j) as f64 * 0.1, j as f64 * 0.05)));
        let sp = Spectral::of(&y);
        for (f, df) in [
            (Divided::Log, (|l: f64| l.ln()) as fn(f64) -> f64),
            (Divided::Exp, f64::exp as fn(f64) -> f64),
            (Divided::Power(0.4), (|l: f64| l.powf(0.4)) as fn(f64) -> f64),
        ] {
            let grad = daleckii_krein(&sp, &k, f);
            let h = 1e-5;
            let plus = Spectral::of(&(&y + e.scale(h))).apply_real(df);
            let minus = Spectral::of(&(&y - e.scale(h))).apply_real(df);
            let fd = (trace_product(&k, &plus).re - trace_product(&k, &minus).re) / (2.0 * h);
            assert!((trace_product(&grad, &e).re - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_constraints_return_prior() {
        let omega = DensityOperator::from_bloch([0.1, 0.2, 0.3]).unwrap();
        let out = q_project(&omega, 0.4, &QuantumConstraintSet::new(), &QuantumPenalty::None).unwrap();
        assert_eq!(out.state, omega);
    }

    #[test]
    fn qubit_magnetization() {
        let omega = DensityOperator::maximally_mixed(2).unwrap();
        let q = QuantumConstraintSet::new().with_moment(ObservableOperator::pauli_z(), 0.5).with_normalization(1.0);
        let out = q_project(&omega, 1.0, &q, &QuantumPenalty::None).unwrap();
        let m = out.state.matrix();
        assert!((m[(0, 0)].re - 0.75).abs() < 1e-12 && (m[(1, 1)].re - 0.25).abs() < 1e-12);
        assert!(m[(0, 1)].norm() < 1e-12);
        assert!(out.kkt_residual < 1e-8);
        assert!((out.multipliers[0] - 0.5f64.atanh()).abs() < 1e-10);
        let primal = q_project_with(&omega, 1.0, &q, &QuantumPenalty::None, &QProjectOptions {
            solver: QuantumSolver::PrimalNewton,
            ..Default::default()
        })
        .unwrap();
        assert!(max_abs(&(primal.state.matrix() - out.state.matrix())) < 1e-9);
    }

    #[test]
    fn infeasible_and_infinite_cases() {
        let omega = DensityOperator::maximally_mixed(2).unwrap();
        let q = QuantumConstraintSet::new().with_moment(ObservableOperator::pauli_z(), 2.0).with_normalization(1.0);
        assert!(matches!(q_project(&omega, 1.0, &q, &QuantumPenalty::None), Err(Error::Infeasible(_))));
        let p = CMatrix::from_diagonal(&DVector::from_vec(vec![cplx(1.0), cplx(0.0)]));
        let q = QuantumConstraintSet::new().with_support(p).with_normalization(1.0);
        assert!(matches!(q_project(&omega, 0.0, &q, &QuantumPenalty::None), Err(Error::InfiniteInfimum(_))));
        let bad = QuantumConstraintSet::new().with_support(CMatrix::identity(2, 2).scale(0.5));
        assert!(q_project(&omega, 0.5, &bad, &QuantumPenalty::None).is_err());
    }

    #[test]
    fn general_gamma_commuting_reduces_to_classical() {
        use crate::cmeasure::ClassicalWeights;
        use crate::entproj::{project, ConstraintSet, Penalty};
        let p = [0.2, 0.5, 0.3];
        let a = [1.0, -1.0, 2.0];
        for gamma in [0.0, 0.3, 0.7, 1.0] {
            let classical = project(
                &ClassicalWeights::new(p.to_vec()).unwrap(),
                gamma,
                &ConstraintSet::new().with_moment(a.to_vec(), 0.6).with_normalization(1.0),
                &Penalty::None,
            )
            .unwrap();
            let quantum = q_project(
                &diag(&p),
                gamma,
                &QuantumConstraintSet::new().with_moment(ObservableOperator::from_diagonal(&a), 0.6).with_normalization(1.0),
                &QuantumPenalty::None,
            )
            .unwrap();
            for i in 0..3 {
                assert!((quantum.state.matrix()[(i, i)].re - classical.state.as_slice()[i]).abs() < 1e-10, "γ={gamma}");
            }
        }
    }

    #[test]
    fn luders_rank_one_and_identity() {
        let rho = DensityOperator::from_bloch([0.3, 0.1, -0.4]).unwrap();
        let report = luders_experiment(&rho, &CMatrix::identity(2, 2), 0.5).unwrap();
        assert!(report.max_trace_distance() < 1e-10);
        let v = DVector::from_vec(vec![cplx(0.6), Complex64::new(0.0, 0.8)]);
        let p = &v * v.adjoint();
        for gamma in [0.0, 0.5, 1.0] {
            let report = luders_experiment(&rho, &p, gamma).unwrap();
            assert!(report.candidates.iter().any(|c| c.state.is_some()));
            for c in report.candidates.iter().filter_map(|c| c.state.as_ref()) {
                assert!(max_abs(&(c.matrix() - &p)) < 1e-10);
            }
        }
    }

    #[test]
    fn hilbert_half_identity() {
        let a = DensityOperator::from_bloch([0.1, 0.5, 0.2]).unwrap();
        let b = DensityOperator::from_bloch([-0.3, 0.0, 0.6]).unwrap();
        assert!((q_d_gamma(&a, &b, 0.5).unwrap() - hilbert_half_deviation(&a, &b).unwrap()).abs() < 1e-12);
    }
}
