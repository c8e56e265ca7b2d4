//! Constrained maximum relative γ-entropy updating on classical weights.
//!
//! The γ-projection of a prior `p` onto a constraint set `Q` with penalty `F` is
//!
//! ```text
//! P(p) = argmin_{q ∈ Q} D_γ(q, p) + F(q)
//! ```
//!
//! which, by the duality `D_γ(q, p) = D_{1−γ}(p, q)`, is the minimizer of
//! `D_{1−γ}(p, ·)` over its second slot. At γ = 1 moment constraints yield
//! exponential-family (Gibbs) weights `q ∝ p · exp(Σ λ_k a_k)` and support
//! constraints yield conditioning, hence Bayes' rule. A finite prior mixture
//! `E = {(w_j, μ_j)}` replaces `D_γ(q, p)` by `Σ_j w_j D_γ(q, μ_j)`.
//!
//! Solvers:
//! * γ = 1 with no penalty or a linear one: Newton on the Lagrangian dual of the
//!   exponential-family ansatz;
//! * otherwise: infeasible-start Newton on the primal with positivity-preserving
//!   backtracking.
//!
//! Feasibility is decided beforehand by linear programming, which also finds
//! coordinates that every feasible point forces to zero.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::cmeasure::{ClassicalWeights, RandomVariable};
use crate::divergence::{d_gamma_raw, GammaParam};
use crate::linalg::{reduce_constraints, ReducedConstraints};
use crate::newton::{equality_newton, NewtonSettings, SmoothObjective};
use crate::{Error, Result};

/// Relative tolerance for dropping redundant constraint rows.
const RANK_TOL: f64 = 1e-10;
/// KKT residual accepted as converged.
pub const KKT_TOL: f64 = 1e-9;
const MAX_ITERATIONS: usize = 500;

/// Feasible set: moment equalities `Σ q_i a_i = c`, an optional support
/// restriction (`q_i = 0` off `S`) and an optional total-mass target.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintSet {
    moments: Vec<(RandomVariable, f64)>,
    support: Option<Vec<usize>>,
    normalization: Option<f64>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_moment(mut self, a: impl Into<RandomVariable>, c: f64) -> Self {
        self.moments.push((a.into(), c));
        self
    }

    pub fn with_support(mut self, support: Vec<usize>) -> Self {
        self.support = Some(support);
        self
    }

    pub fn with_normalization(mut self, mass: f64) -> Self {
        self.normalization = Some(mass);
        self
    }

    pub fn moments(&self) -> &[(RandomVariable, f64)] {
        &self.moments
    }

    pub fn support(&self) -> Option<&[usize]> {
        self.support.as_deref()
    }

    pub fn normalization(&self) -> Option<f64> {
        self.normalization
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty() && self.support.is_none() && self.normalization.is_none()
    }

    /// Number of linear rows: moments first, then normalization.
    pub fn num_rows(&self) -> usize {
        self.moments.len() + usize::from(self.normalization.is_some())
    }

    fn validate(&self, n: usize) -> Result<()> {
        for (a, _) in &self.moments {
            if a.len() != n {
                return Err(Error::LengthMismatch(a.len(), n));
            }
        }
        if let Some(s) = &self.support {
            if let Some(i) = s.iter().find(|i| **i >= n) {
                return Err(Error::OutOfRange(format!("support index {i} ≥ dimension {n}")));
            }
        }
        let finite = self.moments.iter().all(|(a, c)| c.is_finite() && a.as_slice().iter().all(|v| v.is_finite()));
        if !finite || self.normalization.is_some_and(|m| !m.is_finite()) {
            return Err(Error::OutOfRange("constraint data must be finite".into()));
        }
        Ok(())
    }

    fn in_support(&self, i: usize) -> bool {
        self.support.as_ref().is_none_or(|s| s.contains(&i))
    }

    /// Rows `A` and targets `c`, moments first, then normalization.
    fn rows(&self, n: usize) -> (DMatrix<f64>, DVector<f64>) {
        let k = self.num_rows();
        let mut a = DMatrix::zeros(k, n);
        let mut c = DVector::zeros(k);
        for (r, (f, target)) in self.moments.iter().enumerate() {
            a.row_mut(r).copy_from_slice(f.as_slice());
            c[r] = *target;
        }
        if let Some(m) = self.normalization {
            a.row_mut(k - 1).fill(1.0);
            c[k - 1] = m;
        }
        (a, c)
    }

    /// Largest violation of any constraint by `q` (support included).
    pub fn violation(&self, q: &[f64]) -> Result<f64> {
        self.validate(q.len())?;
        let (a, c) = self.rows(q.len());
        let lin = (a * DVector::from_column_slice(q) - c).amax();
        let off = (0..q.len()).filter(|i| !self.in_support(*i)).map(|i| q[i].abs()).fold(0.0, f64::max);
        Ok(lin.max(off))
    }
}

/// Convex penalty `F(q)` added to the deviation.
#[derive(Debug, Clone, PartialEq)]
pub enum Penalty {
    None,
    /// `⟨s, q⟩`.
    Linear { slope: Vec<f64> },
    /// `½ (q − c)ᵀ W (q − c)` with `W` symmetric positive semi-definite.
    Quadratic { weight: DMatrix<f64>, center: Vec<f64> },
}

impl Penalty {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            Penalty::None => Ok(()),
            Penalty::Linear { slope } => {
                if slope.len() != n {
                    return Err(Error::LengthMismatch(slope.len(), n));
                }
                Ok(())
            }
            Penalty::Quadratic { weight, center } => {
                if center.len() != n {
                    return Err(Error::LengthMismatch(center.len(), n));
                }
                if weight.shape() != (n, n) {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{n}×{n}"),
                        got: format!("{}×{}", weight.nrows(), weight.ncols()),
                    });
                }
                if (weight - weight.transpose()).amax() > 1e-12 * weight.amax().max(1.0) {
                    return Err(Error::OutOfRange("quadratic penalty weight must be symmetric".into()));
                }
                if weight.clone().symmetric_eigenvalues().min() < -1e-12 * weight.amax().max(1.0) {
                    return Err(Error::OutOfRange("quadratic penalty weight must be positive semi-definite".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, q: &[f64]) -> f64 {
        match self {
            Penalty::None => 0.0,
            Penalty::Linear { slope } => slope.iter().zip(q).map(|(s, x)| s * x).sum(),
            Penalty::Quadratic { weight, center } => {
                let d = DVector::from_iterator(q.len(), q.iter().zip(center).map(|(x, c)| x - c));
                0.5 * d.dot(&(weight * &d))
            }
        }
    }

    fn gradient(&self, q: &[f64]) -> DVector<f64> {
        match self {
            Penalty::None => DVector::zeros(q.len()),
            Penalty::Linear { slope } => DVector::from_column_slice(slope),
            Penalty::Quadratic { weight, center } => {
                weight * DVector::from_iterator(q.len(), q.iter().zip(center).map(|(x, c)| x - c))
            }
        }
    }
}

/// Finite prior measure `E = Σ_j w_j δ_{μ_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMixture {
    atoms: Vec<(f64, ClassicalWeights)>,
}

impl PriorMixture {
    pub fn new(atoms: Vec<(f64, ClassicalWeights)>) -> Result<Self> {
        let Some((_, first)) = atoms.first() else {
            return Err(Error::InvalidWeights("prior mixture needs at least one atom".into()));
        };
        let n = first.len();
        for (w, mu) in &atoms {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidWeights(format!("mixture weight {w} must be positive")));
            }
            if mu.len() != n {
                return Err(Error::LengthMismatch(mu.len(), n));
            }
        }
        Ok(Self { atoms })
    }

    pub fn dirac(p: ClassicalWeights) -> Self {
        Self { atoms: vec![(1.0, p)] }
    }

    pub fn atoms(&self) -> &[(f64, ClassicalWeights)] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].1.len()
    }

    fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|(w, _)| w).sum()
    }
}

/// `Σ_j w_j D_γ(q, μ_j) + F(q)`, the quantity a projection minimizes.
pub fn objective(prior: &PriorMixture, gamma: f64, penalty: &Penalty, q: &[f64]) -> f64 {
    let dev: f64 = prior.atoms.iter().map(|(w, mu)| w * d_gamma_raw(q, mu.as_slice(), gamma)).sum();
    dev + penalty.eval(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Dual Newton where applicable (γ = 1, no or linear penalty), primal otherwise.
    #[default]
    Auto,
    DualNewton,
    PrimalNewton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectOptions {
    pub solver: Solver,
    /// Start for the primal solver (full length; positive where the solution
    /// may be positive). Defaults to a strictly feasible phase-1 point.
    pub start: Option<Vec<f64>>,
    pub max_iterations: usize,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        Self { solver: Solver::Auto, start: None, max_iterations: MAX_ITERATIONS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub state: ClassicalWeights,
    /// Lagrange multipliers of the linear rows (moments, then normalization)
    /// in the convention `∇(objective) = Σ λ_k a_k` on the free coordinates.
    pub multipliers: Vec<f64>,
    /// Max of stationarity, primal infeasibility and reduced-cost violation.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub solver: Solver,
}

/// γ-projection of `p` onto `Q` with penalty `F`.
pub fn project(p: &ClassicalWeights, gamma: f64, q: &ConstraintSet, penalty: &Penalty) -> Result<ProjectionResult> {
    project_with(p, gamma, q, penalty, &ProjectOptions::default())
}

pub fn project_with(
    p: &ClassicalWeights,
    gamma: f64,
    q: &ConstraintSet,
    penalty: &Penalty,
    options: &ProjectOptions,
) -> Result<ProjectionResult> {
    weighted_project_with(&PriorMixture::dirac(p.clone()), gamma, q, penalty, options)
}

/// The (D, E)-optimal estimate `argmin_{q ∈ Q} Σ_j w_j D_γ(q, μ_j) + F(q)`.
pub fn weighted_project(prior: &PriorMixture, gamma: f64, q: &ConstraintSet, penalty: &Penalty) -> Result<ProjectionResult> {
    weighted_project_with(prior, gamma, q, penalty, &ProjectOptions::default())
}

pub fn weighted_project_with(
    prior: &PriorMixture,
    gamma: f64,
    constraints: &ConstraintSet,
    penalty: &Penalty,
    options: &ProjectOptions,
) -> Result<ProjectionResult> {
    let gamma = GammaParam::new(gamma)?.value();
    let n = prior.dim();
    constraints.validate(n)?;
    penalty.validate(n)?;

    if constraints.is_empty() && matches!(penalty, Penalty::None) && prior.atoms.len() == 1 {
        return Ok(ProjectionResult {
            state: prior.atoms[0].1.clone(),
            multipliers: vec![],
            kkt_residual: 0.0,
            iterations: 0,
            solver: Solver::Auto,
        });
    }

    let charged = |i: usize| prior.atoms.iter().any(|(_, mu)| mu.as_slice()[i] > 0.0);
    let everywhere = |i: usize| prior.atoms.iter().all(|(_, mu)| mu.as_slice()[i] > 0.0);

    // Coordinates allowed to be positive, before feasibility analysis.
    let mut candidate: Vec<usize> = Vec::new();
    for i in 0..n {
        let allowed = constraints.in_support(i);
        if gamma == 0.0 && charged(i) && !allowed {
            return Err(Error::InfiniteInfimum(format!("support constraint removes prior mass at index {i}")));
        }
        let finite = if gamma == 1.0 { everywhere(i) } else { true };
        if allowed && finite {
            candidate.push(i);
        }
    }
    // For γ < 1, uncharged coordinates are held at zero and checked afterwards.
    let uncharged_allowed: Vec<usize> = candidate.iter().copied().filter(|&i| gamma < 1.0 && !charged(i)).collect();
    candidate.retain(|i| !uncharged_allowed.contains(i));

    let (a_full, c_full) = constraints.rows(n);
    let restrict = |cols: &[usize]| {
        let mut a = DMatrix::zeros(a_full.nrows(), cols.len());
        for (j, &i) in cols.iter().enumerate() {
            a.set_column(j, &a_full.column(i));
        }
        a
    };

    let reduced = reduce_constraints(&restrict(&candidate), &c_full, RANK_TOL)?;
    let (positive, interior) = relative_interior(&reduced, candidate.len())?;
    let free: Vec<usize> = candidate.iter().zip(&positive).filter(|(_, p)| **p).map(|(i, _)| *i).collect();
    if gamma == 0.0 {
        if let Some(i) = candidate.iter().zip(&positive).find(|(i, p)| !**p && charged(**i)).map(|(i, _)| *i) {
            return Err(Error::InfiniteInfimum(format!("feasible set forces zero mass at charged index {i}")));
        }
    }
    if free.is_empty() {
        return Err(Error::Infeasible("only the zero measure satisfies the constraints".into()));
    }
    let reduced = reduce_constraints(&restrict(&free), &c_full, RANK_TOL)?;
    let interior: Vec<f64> = candidate.iter().zip(&positive).zip(&interior).filter(|((_, p), _)| **p).map(|(_, x)| *x).collect();

    let problem = Restricted { prior, gamma, penalty, n, free: free.clone() };
    let use_dual = match options.solver {
        Solver::Auto => gamma == 1.0 && !matches!(penalty, Penalty::Quadratic { .. }),
        Solver::DualNewton => {
            if gamma != 1.0 || matches!(penalty, Penalty::Quadratic { .. }) {
                return Err(Error::OutOfRange("dual Newton needs γ = 1 and no quadratic penalty".into()));
            }
            true
        }
        Solver::PrimalNewton => false,
    };

    let (x, lambda_red, iterations) = if use_dual {
        problem.dual_newton(&reduced, options.max_iterations)?
    } else {
        let x0 = match &options.start {
            Some(s) => {
                if s.len() != n {
                    return Err(Error::LengthMismatch(s.len(), n));
                }
                DVector::from_iterator(free.len(), free.iter().map(|&i| s[i]))
            }
            None => DVector::from_vec(interior),
        };
        let settings = NewtonSettings { target: 1e-12, accept: KKT_TOL, max_iterations: options.max_iterations };
        let sol = equality_newton(&problem, &reduced.a, &reduced.c, x0, settings)?;
        (sol.x, sol.lambda, sol.iterations)
    };

    let state = problem.embed(&x);
    let lambda_full = &reduced.back * &lambda_red;
    let lam_free = &reduced.a.transpose() * &lambda_red;

    // KKT residual on the original rows.
    let grad = problem.gradient(&x);
    let stationarity = (&grad - &lam_free).amax();
    let feas = (&a_full * DVector::from_column_slice(&state) - &c_full).amax();
    let mut reduced_cost_violation: f64 = 0.0;
    if !uncharged_allowed.is_empty() {
        let full_lam = a_full.transpose() * &lambda_full;
        let pen = penalty.gradient(&state);
        let w = prior.total_weight();
        let dev_slope = if gamma == 0.0 { w } else { w / (1.0 - gamma) };
        for &i in &uncharged_allowed {
            let rc = dev_slope + pen[i] - full_lam[i];
            reduced_cost_violation = reduced_cost_violation.max(-rc);
        }
        if reduced_cost_violation > KKT_TOL {
            return Err(Error::PriorSupport(format!(
                "reduced cost {:e} is negative at a coordinate without prior mass",
                -reduced_cost_violation
            )));
        }
    }
    let kkt_residual = stationarity.max(feas).max(reduced_cost_violation);
    if kkt_residual > KKT_TOL {
        return Err(Error::NonConvergence { iterations, residual: kkt_residual });
    }
    Ok(ProjectionResult {
        state: ClassicalWeights::new(state)?,
        multipliers: lambda_full.iter().copied().collect(),
        kkt_residual,
        iterations,
        solver: if use_dual { Solver::DualNewton } else { Solver::PrimalNewton },
    })
}

/// Which coordinates can be positive on `{x ≥ 0 : A x = c}` and a point that is
/// positive on all of them, from one LP per coordinate.
fn relative_interior(red: &ReducedConstraints, m: usize) -> Result<(Vec<bool>, Vec<f64>)> {
    let scale = red.c.amax().max(1.0);
    let cap = 1e6 * scale;
    let tol = 1e-9 * scale;
    let mut positive = vec![false; m];
    let mut decided = vec![false; m];
    let mut sum = vec![0.0; m];
    let mut count = 0usize;
    for target in 0..m {
        if decided[target] {
            continue;
        }
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = (0..m).map(|i| lp.add_var(if i == target { 1.0 } else { 0.0 }, (0.0, cap))).collect();
        for r in 0..red.a.nrows() {
            let expr: Vec<_> = (0..m).map(|i| (vars[i], red.a[(r, i)])).collect();
            lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, red.c[r]);
        }
        let solution = match lp.solve().map(|o| o.into_solution()) {
            Ok(Ok(solution)) => solution,
            Ok(Err(_)) => return Err(Error::Infeasible("feasibility LP was interrupted".into())),
            Err(microlp::Error::Infeasible) => {
                return Err(Error::Infeasible("no nonnegative weights satisfy the constraints".into()))
            }
            Err(e) => return Err(Error::Infeasible(format!("feasibility LP failed: {e}"))),
        };
        let x: Vec<f64> = vars.iter().map(|v| solution.var_value(*v).max(0.0)).collect();
        decided[target] = true;
        for i in 0..m {
            if x[i] > tol {
                positive[i] = true;
                decided[i] = true;
            }
            sum[i] += x[i];
        }
        count += 1;
    }
    let point = sum.iter().map(|s| s / count.max(1) as f64).collect();
    Ok((positive, point))
}

/// The projection problem restricted to its free coordinates.
struct Restricted<'a> {
    prior: &'a PriorMixture,
    gamma: f64,
    penalty: &'a Penalty,
    n: usize,
    free: Vec<usize>,
}

impl Restricted<'_> {
    fn embed(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut q = vec![0.0; self.n];
        for (j, &i) in self.free.iter().enumerate() {
            q[i] = x[j];
        }
        q
    }

    /// First and second derivative of `D_γ(a, b)` in `a`.
    fn scalar_derivatives(&self, a: f64, b: f64) -> (f64, f64) {
        let g = self.gamma;
        if g == 1.0 {
            ((a / b).ln(), 1.0 / a)
        } else if g == 0.0 {
            (1.0 - b / a, b / (a * a))
        } else if b == 0.0 {
            (1.0 / (1.0 - g), 0.0)
        } else {
            let cross = a.powf(g - 1.0) * b.powf(1.0 - g);
            ((1.0 - cross) / (1.0 - g), cross / a)
        }
    }

    /// Dual Newton for γ = 1: `q_i = base_i exp((Aᵀλ − s)_i / W)` with `base`
    /// the weighted geometric mean of the atoms.
    fn dual_newton(&self, red: &ReducedConstraints, max_iterations: usize) -> Result<(DVector<f64>, DVector<f64>, usize)> {
        let w = self.prior.total_weight();
        let m = self.free.len();
        let log_base = DVector::from_iterator(
            m,
            self.free.iter().map(|&i| self.prior.atoms.iter().map(|(wj, mu)| wj * mu.as_slice()[i].ln()).sum::<f64>() / w),
        );
        let slope = match self.penalty {
            Penalty::Linear { slope } => DVector::from_iterator(m, self.free.iter().map(|&i| slope[i])),
            _ => DVector::zeros(m),
        };
        let at = |lambda: &DVector<f64>| -> DVector<f64> {
            let e = &log_base + (red.a.transpose() * lambda - &slope) / w;
            e.map(f64::exp)
        };
        let dual_value = |lambda: &DVector<f64>, q: &DVector<f64>| lambda.dot(&red.c) - w * q.sum();
        let scale = red.c.amax().max(1.0);
        let k = red.a.nrows();
        let mut lambda = DVector::zeros(k);
        let mut q = at(&lambda);
        for it in 0..max_iterations {
            let resid = &red.c - &red.a * &q;
            if resid.amax() <= 1e-14 * scale {
                return Ok((q, lambda, it));
            }
            let hess = &red.a * DMatrix::from_diagonal(&q) * red.a.transpose() / w;
            let Some(step) = hess.clone().cholesky().map(|ch| ch.solve(&resid)).or_else(|| hess.lu().solve(&resid)) else {
                return Err(Error::NonConvergence { iterations: it, residual: resid.amax() });
            };
            let current = dual_value(&lambda, &q);
            let slope_dir = resid.dot(&step);
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-14 {
                let ln = &lambda + &step * t;
                let qn = at(&ln);
                // near the optimum the dual value is flat to roundoff; a shrinking residual decides instead
                let shrinks = || (&red.c - &red.a * &qn).norm() <= (1.0 - 0.5 * t) * resid.norm();
                if qn.iter().all(|v| v.is_finite()) && (dual_value(&ln, &qn) >= current + 1e-4 * t * slope_dir || shrinks()) {
                    lambda = ln;
                    q = qn;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                let r = resid.amax();
                if r <= KKT_TOL {
                    return Ok((q, lambda, it));
                }
                return Err(Error::NonConvergence { iterations: it, residual: r });
            }
            if lambda.amax() > 1e12 {
                return Err(Error::Unbounded);
            }
        }
        let r = (&red.c - &red.a * &q).amax();
        if r <= KKT_TOL {
            Ok((q, lambda, max_iterations))
        } else {
            Err(Error::NonConvergence { iterations: max_iterations, residual: r })
        }
    }
}

impl SmoothObjective for Restricted<'_> {
    fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|v| *v > 0.0 && v.is_finite())
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let q = self.embed(x);
        let pen = self.penalty.gradient(&q);
        DVector::from_iterator(
            self.free.len(),
            self.free.iter().enumerate().map(|(j, &i)| {
                let dev: f64 =
                    self.prior.atoms.iter().map(|(w, mu)| w * self.scalar_derivatives(x[j], mu.as_slice()[i]).0).sum();
                dev + pen[i]
            }),
        )
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = self.free.len();
        let mut h = match self.penalty {
            Penalty::Quadratic { weight, .. } => {
                DMatrix::from_fn(m, m, |r, c| weight[(self.free[r], self.free[c])])
            }
            _ => DMatrix::zeros(m, m),
        };
        for (j, &i) in self.free.iter().enumerate() {
            h[(j, j)] += self.prior.atoms.iter().map(|(w, mu)| w * self.scalar_derivatives(x[j], mu.as_slice()[i]).1).sum::<f64>();
        }
        h
    }
}

/// Bayes' rule as an entropic projection: the joint prior on `X × Θ` (row-major,
/// `n_x` rows) is projected at γ = 1 onto the states supported on the observed
/// row `x = b` with unit mass, then marginalized to `Θ`.
pub fn bayes_update(joint: &ClassicalWeights, n_x: usize, observed: usize) -> Result<ClassicalWeights> {
    if n_x == 0 || !joint.len().is_multiple_of(n_x) {
        return Err(Error::ShapeMismatch { expected: format!("a multiple of {n_x}"), got: joint.len().to_string() });
    }
    if observed >= n_x {
        return Err(Error::OutOfRange(format!("observation {observed} ≥ {n_x}")));
    }
    let n_theta = joint.len() / n_x;
    let row = observed * n_theta..(observed + 1) * n_theta;
    let marginal: f64 = joint.as_slice()[row.clone()].iter().sum();
    if !(marginal > 0.0) {
        return Err(Error::DegenerateConditioning { level: observed as f64 });
    }
    let q = ConstraintSet::new().with_support(row.collect()).with_normalization(1.0);
    let post = project(joint, 1.0, &q, &Penalty::None)?;
    let mut theta = vec![0.0; n_theta];
    for (k, v) in post.state.as_slice().iter().enumerate() {
        theta[k % n_theta] += v;
    }
    ClassicalWeights::new(theta)
}

/// `D_γ(q, p) − D_γ(p*, p) − D_γ(q, p*)` with `p* = project(p, γ, Q, none)`.
///
/// Zero when `Q` is affine in the ℓ_γ chart (moment constraints at γ = 1) and
/// nonnegative for any `q` in a chart-convex set whose projection is `p*`.
pub fn pythagorean_defect(p: &ClassicalWeights, q: &ClassicalWeights, gamma: f64, constraints: &ConstraintSet) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    let foot = project(p, gamma, constraints, &Penalty::None)?.state;
    Ok(pythagorean_defect_at(p, &foot, q, gamma))
}

/// The Pythagorean defect for a given projection foot.
pub fn pythagorean_defect_at(p: &ClassicalWeights, foot: &ClassicalWeights, q: &ClassicalWeights, gamma: f64) -> f64 {
    let (p, f, q) = (p.as_slice(), foot.as_slice(), q.as_slice());
    d_gamma_raw(q, p, gamma) - d_gamma_raw(f, p, gamma) - d_gamma_raw(q, f, gamma)
}

/// How successive trajectory steps are seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrajectoryMode {
    /// `p(t_k) = P_{F(t_k)}(p_0)`: every step projects the initial state.
    #[default]
    Literal,
    /// `p(t_k) = P_{F(t_k)}(p(t_{k−1}))`.
    Chained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleStep {
    pub t: f64,
    pub constraints: ConstraintSet,
    pub penalty: Penalty,
}

/// Time-indexed constraints. The initial time carries no constraint, so the
/// trajectory starts at the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    t0: f64,
    steps: Vec<ScheduleStep>,
}

impl Schedule {
    pub fn new(t0: f64) -> Self {
        Self { t0, steps: Vec::new() }
    }

    /// Appends a step; times must increase strictly.
    pub fn then(mut self, t: f64, constraints: ConstraintSet, penalty: Penalty) -> Result<Self> {
        let last = self.steps.last().map_or(self.t0, |s| s.t);
        if !(t > last) {
            return Err(Error::OutOfRange(format!("schedule time {t} does not exceed {last}")));
        }
        self.steps.push(ScheduleStep { t, constraints, penalty });
        Ok(self)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn steps(&self) -> &[ScheduleStep] {
        &self.steps
    }

    pub fn times(&self) -> Vec<f64> {
        std::iter::once(self.t0).chain(self.steps.iter().map(|s| s.t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub result: ProjectionResult,
}

/// Entropic evolution `p(t)` along a schedule; element 0 is `p_0` at `t_0`.
/// Errors carry the index of the failing step.
pub fn trajectory(p0: &ClassicalWeights, gamma: f64, schedule: &Schedule, mode: TrajectoryMode) -> Result<Vec<TrajectoryPoint>> {
    let initial = ProjectionResult {
        state: p0.clone(),
        multipliers: vec![],
        kkt_residual: 0.0,
        iterations: 0,
        solver: Solver::Auto,
    };
    let mut out = vec![TrajectoryPoint { t: schedule.t0, result: initial }];
    for (k, step) in schedule.steps.iter().enumerate() {
        let source = match mode {
            TrajectoryMode::Literal => p0,
            TrajectoryMode::Chained => &out[k].result.state,
        };
        let result = project(source, gamma, &step.constraints, &step.penalty)
            .map_err(|e| Error::AtStep { step: k + 1, source: Box::new(e) })?;
        out.push(TrajectoryPoint { t: step.t, result });
    }
    Ok(out)
}
