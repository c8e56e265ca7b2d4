//! Infeasible-start Newton method for smooth convex problems with linear
//! equality constraints, shared by the classical and quantum projections.
//!
//! The iteration drives the residual `r(x, λ) = (∇f(x) − Aᵀλ, Ax − c)` to zero,
//! backtracking so that iterates stay inside the open domain of `f` and the
//! residual norm decreases monotonically.

use nalgebra::{DMatrix, DVector};

use crate::linalg::solve_kkt;
use crate::{Error, Result};

pub(crate) trait SmoothObjective {
    /// Whether `x` lies in the open domain where `f` is smooth and finite.
    fn in_domain(&self, x: &DVector<f64>) -> bool;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonSolution {
    pub x: DVector<f64>,
    /// Multipliers in the convention `∇f = Aᵀλ`.
    pub lambda: DVector<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonSettings {
    /// Residual at which the iteration stops early.
    pub target: f64,
    /// Largest residual accepted when the line search stalls at roundoff.
    pub accept: f64,
    pub max_iterations: usize,
}

fn residual(obj: &dyn SmoothObjective, a: &DMatrix<f64>, c: &DVector<f64>, x: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
    let dual = obj.gradient(x) - a.transpose() * lambda;
    let primal = a * x - c;
    let mut r = DVector::zeros(dual.len() + primal.len());
    r.rows_mut(0, dual.len()).copy_from(&dual);
    r.rows_mut(dual.len(), primal.len()).copy_from(&primal);
    r
}

/// Least-squares multipliers for `Aᵀλ ≈ g` (A has full row rank).
fn initial_multipliers(a: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    if a.nrows() == 0 {
        return DVector::zeros(0);
    }
    (a * a.transpose()).lu().solve(&(a * g)).unwrap_or_else(|| DVector::zeros(a.nrows()))
}

pub(crate) fn equality_newton(
    obj: &dyn SmoothObjective,
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    x0: DVector<f64>,
    settings: NewtonSettings,
) -> Result<NewtonSolution> {
    if !obj.in_domain(&x0) {
        return Err(Error::OutOfRange("solver start lies outside the objective's domain".into()));
    }
    let mut x = x0;
    let mut lambda = initial_multipliers(a, &obj.gradient(&x));
    let mut r = residual(obj, a, c, &x, &lambda);
    for it in 0..settings.max_iterations {
        let norm = r.amax();
        if norm <= settings.target {
            return Ok(NewtonSolution { x, lambda, iterations: it });
        }
        let g = obj.gradient(&x);
        let h = obj.hessian(&x);
        let primal = a * &x - c;
        let Some((dx, w)) = solve_kkt(&h, a, &g, &primal) else {
            return Err(Error::NonConvergence { iterations: it, residual: norm });
        };
        let dlambda = -w - &lambda;
        let norm2 = r.norm();
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-14 {
            let xn = &x + &dx * t;
            if obj.in_domain(&xn) {
                let ln = &lambda + &dlambda * t;
                let rn = residual(obj, a, c, &xn, &ln);
                if rn.iter().all(|v| v.is_finite()) && rn.norm() <= (1.0 - 0.01 * t) * norm2 {
                    accepted = Some((xn, ln, rn));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((xn, ln, rn)) => {
                x = xn;
                lambda = ln;
                r = rn;
                if x.amax() > 1e15 {
                    return Err(Error::Unbounded);
                }
            }
            None if norm <= settings.accept => {
                return Ok(NewtonSolution { x, lambda, iterations: it });
            }
            None => return Err(Error::NonConvergence { iterations: it, residual: norm }),
        }
    }
    let norm = r.amax();
    if norm <= settings.accept {
        Ok(NewtonSolution { x, lambda, iterations: settings.max_iterations })
    } else {
        Err(Error::NonConvergence { iterations: settings.max_iterations, residual: norm })
    }
}
