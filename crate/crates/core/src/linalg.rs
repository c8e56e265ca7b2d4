//! Dense helpers shared by the projection solvers.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Linear equality constraints `A x = c` with redundant rows removed.
///
/// Rows are replaced by an orthonormal basis of the row space scaled by the
/// singular values (`Σ_r V_rᵀ x = U_rᵀ c`). `back` maps reduced multipliers to
/// multipliers on the original rows: `λ = back · ν`.
#[derive(Debug, Clone)]
pub(crate) struct ReducedConstraints {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    pub back: DMatrix<f64>,
}

/// Rank-revealing reduction with relative tolerance `tol`. Inconsistent
/// systems are reported as infeasible.
pub(crate) fn reduce_constraints(a: &DMatrix<f64>, c: &DVector<f64>, tol: f64) -> Result<ReducedConstraints> {
    let (k, m) = a.shape();
    if k == 0 {
        return Ok(ReducedConstraints { a: DMatrix::zeros(0, m), c: DVector::zeros(0), back: DMatrix::zeros(0, 0) });
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > tol * smax.max(1.0))
        .collect();
    let r = keep.len();
    let mut ra = DMatrix::zeros(r, m);
    let mut rc = DVector::zeros(r);
    let mut back = DMatrix::zeros(k, r);
    for (row, &i) in keep.iter().enumerate() {
        let s = svd.singular_values[i];
        for j in 0..m {
            ra[(row, j)] = s * vt[(i, j)];
        }
        rc[row] = u.column(i).dot(c);
        back.set_column(row, &u.column(i));
    }
    // consistency: c must lie in the range of A
    let resid = c - &back * &rc;
    let scale = c.amax().max(1.0);
    if resid.amax() > 1e-9 * scale {
        return Err(Error::Infeasible(format!(
            "linear constraints are inconsistent (residual {:e})",
            resid.amax()
        )));
    }
    Ok(ReducedConstraints { a: ra, c: rc, back })
}

/// Solves the equality-constrained Newton system
/// `[H Aᵀ; A 0] [dx; w] = [−g; −r]`.
pub(crate) fn solve_kkt(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    g: &DVector<f64>,
    r: &DVector<f64>,
) -> Option<(DVector<f64>, DVector<f64>)> {
    let m = h.nrows();
    let k = a.nrows();
    let mut kkt = DMatrix::zeros(m + k, m + k);
    kkt.view_mut((0, 0), (m, m)).copy_from(h);
    kkt.view_mut((m, 0), (k, m)).copy_from(a);
    kkt.view_mut((0, m), (m, k)).copy_from(&a.transpose());
    let mut rhs = DVector::zeros(m + k);
    rhs.rows_mut(0, m).copy_from(&(-g));
    rhs.rows_mut(m, k).copy_from(&(-r));
    let sol = kkt.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((sol.rows(0, m).into_owned(), sol.rows(m, k).into_owned()))
}
