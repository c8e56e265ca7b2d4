//! Finite-dimensional quantum information states.
//!
//! Density operators are Hermitian positive semi-definite complex matrices;
//! functions of them are formed through the spectral decomposition
//! `ρ = U diag(λ) U†` as `f(ρ) = U diag(f(λ)) U†`, which depends only on the
//! spectral projectors and not on the choice of eigenvectors inside a
//! degenerate eigenspace.
//!
//! The quantum γ-deviation is
//!
//! ```text
//! D_γ(ω, φ) = [γ tr ω + (1−γ) tr φ − re tr(ω^γ φ^{1−γ})] / (γ(1−γ)),   γ ∈ (0,1)
//! D_1(ω, φ) = tr φ − tr ω + tr ω (log ω − log φ),   D_0(ω, φ) = D_1(φ, ω)
//! ```
//!
//! and `D_{1/2}(ω, φ) = ½ ‖2ω^{1/2} − 2φ^{1/2}‖²₂` in the Hilbert–Schmidt space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalues at or below this are treated as zero for faithfulness and supports.
pub const FAITHFUL_TOL: f64 = 1e-10;
/// Tolerance for Hermiticity, PSD drift and normalization.
pub const OPERATOR_TOL: f64 = 1e-12;

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Spectral {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl Spectral {
    pub fn of(m: &CMatrix) -> Self {
        let eig = m.clone().symmetric_eigen();
        Spectral { values: eig.eigenvalues, vectors: eig.eigenvectors }
    }

    /// `U diag(f(λ)) U†`.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let d = DVector::from_iterator(self.values.len(), self.values.iter().map(|l| f(*l)));
        let scaled = CMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| self.vectors[(i, j)] * d[j]);
        &scaled * self.vectors.adjoint()
    }

    /// `U diag(f(λ)) U†` for a real function.
    pub fn apply_real(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.apply(|l| Complex64::new(f(l), 0.0))
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch { expected: "square matrix".into(), got: format!("{}×{}", m.nrows(), m.ncols()) });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidOperator("empty matrix".into()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidOperator("non-finite entry".into()));
    }
    let skew = max_abs(&(m - m.adjoint()));
    if skew >= OPERATOR_TOL * max_abs(m).max(1.0) {
        return Err(Error::InvalidOperator(format!("not Hermitian (‖M − M†‖ = {skew:e})")));
    }
    Ok(())
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

/// A positive semi-definite Hermitian matrix with positive trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity and positivity; eigenvalues in `[−1e−12, 0)` are
    /// clipped to zero.
    pub fn new(m: CMatrix) -> Result<Self> {
        check_hermitian(&m)?;
        let m = hermitian_part(&m);
        let scale = max_abs(&m).max(1.0);
        let sp = Spectral::of(&m);
        let min = sp.values.min();
        if min < -OPERATOR_TOL * scale {
            return Err(Error::InvalidOperator(format!("not positive semi-definite (eigenvalue {min:e})")));
        }
        let m = if min < 0.0 { hermitian_part(&sp.apply_real(|l| l.max(0.0))) } else { m };
        let trace = m.trace().re;
        if !(trace > 0.0) {
            return Err(Error::InvalidOperator(format!("trace {trace} must be positive")));
        }
        Ok(Self { matrix: m })
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        let v = DVector::from_iterator(d.len(), d.iter().map(|x| Complex64::new(*x, 0.0)));
        Self::new(CMatrix::from_diagonal(&v))
    }

    /// `I/n`.
    pub fn maximally_mixed(n: usize) -> Result<Self> {
        Self::new(CMatrix::identity(n, n).scale(1.0 / n as f64))
    }

    /// `|v⟩⟨v| / ⟨v|v⟩`.
    pub fn pure(v: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(v);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidOperator("zero state vector".into()));
        }
        let v = v.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    /// Qubit state `(I + r·σ)/2` for a Bloch vector with `|r| ≤ 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let m = pauli_i() + pauli_x().scale(r[0]) + pauli_y().scale(r[1]) + pauli_z().scale(r[2]);
        Self::new(m.scale(0.5))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= OPERATOR_TOL
    }

    pub fn normalized(&self) -> Self {
        Self { matrix: self.matrix.unscale(self.trace()) }
    }

    pub fn spectral(&self) -> Spectral {
        let mut sp = Spectral::of(&self.matrix);
        sp.values.apply(|l| *l = l.max(0.0));
        sp
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.spectral().values.iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectral().values.min()
    }

    pub fn is_faithful(&self) -> bool {
        self.min_eigenvalue() > FAITHFUL_TOL
    }

    /// `tr(ρ A)`; real for Hermitian `A`.
    pub fn expectation(&self, a: &ObservableOperator) -> f64 {
        trace_product(&self.matrix, a.matrix()).re
    }

    /// Orthogonal projector onto the support (eigenvalues above [`FAITHFUL_TOL`]).
    pub fn support_projector(&self) -> CMatrix {
        self.spectral().apply_real(|l| if l > FAITHFUL_TOL { 1.0 } else { 0.0 })
    }

    /// Whether `ρ` commutes with `other` to within `tol` (entrywise).
    pub fn commutes_with(&self, other: &CMatrix, tol: f64) -> bool {
        max_abs(&(&self.matrix * other - other * &self.matrix)) <= tol
    }

    fn require_faithful(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        if min <= FAITHFUL_TOL {
            return Err(Error::NotFaithful(min));
        }
        Ok(())
    }
}

/// A Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableOperator {
    matrix: CMatrix,
}

impl ObservableOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_hermitian(&m)?;
        Ok(Self { matrix: hermitian_part(&m) })
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let v = DVector::from_iterator(d.len(), d.iter().map(|x| Complex64::new(*x, 0.0)));
        Self { matrix: CMatrix::from_diagonal(&v) }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: CMatrix::identity(n, n) }
    }

    pub fn pauli_x() -> Self {
        Self { matrix: pauli_x() }
    }

    pub fn pauli_y() -> Self {
        Self { matrix: pauli_y() }
    }

    pub fn pauli_z() -> Self {
        Self { matrix: pauli_z() }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)].norm() <= tol))
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli_i() -> CMatrix {
    CMatrix::identity(2, 2)
}

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// An element `T` of the non-commutative `L_p` space, tagged with `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElementLp {
    pub matrix: CMatrix,
    pub p: f64,
}

impl AlgebraElementLp {
    pub fn norm(&self) -> f64 {
        schatten_norm(&self.matrix, self.p).expect("exponent validated on construction")
    }
}

/// `ρ^α` by spectral calculus with `0^α = 0` for `re α > 0`. Purely imaginary
/// powers need a faithful state; `re α < 0` is rejected.
pub fn matrix_power(rho: &DensityOperator, alpha: Complex64) -> Result<CMatrix> {
    if alpha.re < 0.0 || !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::OutOfRange(format!("exponent {alpha} must have nonnegative real part")));
    }
    if alpha == c(0.0, 0.0) {
        return Ok(CMatrix::identity(rho.dim(), rho.dim()));
    }
    if alpha.re == 0.0 {
        rho.require_faithful()?;
    }
    Ok(powers(&rho.spectral(), alpha))
}

fn powers(sp: &Spectral, alpha: Complex64) -> CMatrix {
    sp.apply(|l| if l <= 0.0 { c(0.0, 0.0) } else { (alpha * l.ln()).exp() })
}

fn real_power(sp: &Spectral, a: f64) -> CMatrix {
    if a == 1.0 {
        return sp.apply_real(|l| l);
    }
    sp.apply_real(|l| if l <= 0.0 { 0.0 } else { l.powf(a) })
}

/// Schatten `p`-norm `(Σ σ_i^p)^{1/p}`; `p = ∞` gives the largest singular value.
pub fn schatten_norm(t: &CMatrix, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::OutOfRange(format!("Schatten exponent {p} < 1")));
    }
    if t.is_empty() {
        return Ok(0.0);
    }
    let sv = t.clone().svd(false, false).singular_values;
    if p.is_infinite() {
        return Ok(sv.max());
    }
    if p == 2.0 {
        return Ok(t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    }
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

fn check_gamma_open_closed(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::OutOfRange(format!("γ = {gamma} outside (0, 1]")));
    }
    Ok(())
}

/// `ℓ_γ(ρ) = ρ^γ / γ` as an element of `L_{1/γ}`.
pub fn q_gamma_embed(rho: &DensityOperator, gamma: f64) -> Result<AlgebraElementLp> {
    check_gamma_open_closed(gamma)?;
    Ok(AlgebraElementLp { matrix: real_power(&rho.spectral(), gamma).unscale(gamma), p: 1.0 / gamma })
}

/// Inverse of [`q_gamma_embed`]: `(γ T)^{1/γ}`.
pub fn q_gamma_unembed(t: &AlgebraElementLp, gamma: f64) -> Result<DensityOperator> {
    check_gamma_open_closed(gamma)?;
    let x = DensityOperator::new(t.matrix.scale(gamma))?;
    DensityOperator::new(real_power(&x.spectral(), 1.0 / gamma))
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(a, b));
    }
    Ok(())
}

/// The quantum γ-deviation `D_γ(ω, φ)`; `+∞` at γ = 1 when `supp ω ⊄ supp φ`
/// (and at γ = 0 with the roles swapped).
pub fn q_d_gamma(omega: &DensityOperator, phi: &DensityOperator, gamma: f64) -> Result<f64> {
    check_dims(omega.dim(), phi.dim())?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::OutOfRange(format!("γ = {gamma} outside [0, 1]")));
    }
    if omega.matrix == phi.matrix {
        return Ok(0.0);
    }
    if gamma == 1.0 {
        return Ok(umegaki(omega, phi));
    }
    if gamma == 0.0 {
        return Ok(umegaki(phi, omega));
    }
    let cross = trace_product(&real_power(&omega.spectral(), gamma), &real_power(&phi.spectral(), 1.0 - gamma)).re;
    let v = (gamma * omega.trace() + (1.0 - gamma) * phi.trace() - cross) / (gamma * (1.0 - gamma));
    Ok(v.max(0.0))
}

/// `tr φ − tr ω + tr ω (log ω − log φ)`.
fn umegaki(omega: &DensityOperator, phi: &DensityOperator) -> f64 {
    let so = omega.spectral();
    let sp = phi.spectral();
    let mut cross = 0.0;
    let mut off_support = 0.0;
    for k in 0..sp.dim() {
        let v = sp.vectors.column(k);
        let weight = (v.adjoint() * omega.matrix() * v)[(0, 0)].re;
        if sp.values[k] > FAITHFUL_TOL {
            cross += weight * sp.values[k].ln();
        } else {
            off_support += weight;
        }
    }
    if off_support > FAITHFUL_TOL * omega.trace().max(1.0) {
        return f64::INFINITY;
    }
    let entropy: f64 = so.values.iter().filter(|l| **l > 0.0).map(|l| l * l.ln()).sum();
    (phi.trace() - omega.trace() + entropy - cross).max(0.0)
}

/// Generalized Wigner–Yanase–Dyson metric `re tr(ω^{1−γ} x ω^γ y)` at a faithful state.
pub fn wyd_metric(omega: &DensityOperator, x: &ObservableOperator, y: &ObservableOperator, gamma: f64) -> Result<f64> {
    check_dims(omega.dim(), x.dim())?;
    check_dims(omega.dim(), y.dim())?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::OutOfRange(format!("γ = {gamma} outside [0, 1]")));
    }
    omega.require_faithful()?;
    let sp = omega.spectral();
    let left = real_power(&sp, 1.0 - gamma) * x.matrix();
    let right = real_power(&sp, gamma) * y.matrix();
    Ok(trace_product(&left, &right).re)
}

/// Modular automorphism `σ_t(x) = ρ^{it} x ρ^{−it}` of a faithful state.
pub fn modular_flow(rho: &DensityOperator, x: &ObservableOperator, t: f64) -> Result<ObservableOperator> {
    check_dims(rho.dim(), x.dim())?;
    rho.require_faithful()?;
    let u = powers(&rho.spectral(), c(0.0, t));
    let m = &u * x.matrix() * u.adjoint();
    Ok(ObservableOperator { matrix: hermitian_part(&m) })
}

/// Connes cocycle `[Dω : Dφ]_t = ω^{it} φ^{−it}` of two faithful states.
pub fn connes_cocycle(omega: &DensityOperator, phi: &DensityOperator, t: f64) -> Result<CMatrix> {
    check_dims(omega.dim(), phi.dim())?;
    omega.require_faithful()?;
    phi.require_faithful()?;
    Ok(powers(&omega.spectral(), c(0.0, t)) * powers(&phi.spectral(), c(0.0, -t)))
}

/// Default parameters for [`petz_limit_entropy`].
pub const PETZ_STEPS: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

/// `lim_{t→0+} re (i/t) tr(ρ_φ([Dω:Dφ]_t − I))`, extrapolated from the given
/// decreasing parameters. The quotient is even in `t`, so the extrapolation
/// is polynomial in `t²` (Neville's scheme). The limit equals the relative
/// entropy `S(φ‖ω) = q_d_gamma(φ, ω, 1)`.
pub fn petz_limit_entropy(omega: &DensityOperator, phi: &DensityOperator, t_steps: &[f64]) -> Result<f64> {
    check_dims(omega.dim(), phi.dim())?;
    for s in [omega, phi] {
        if !s.is_normalized() {
            return Err(Error::NotNormalized(s.trace()));
        }
        s.require_faithful()?;
    }
    if t_steps.len() < 2 {
        return Err(Error::OutOfRange("at least two parameters are needed".into()));
    }
    if t_steps.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || t_steps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::OutOfRange("parameters must be positive and strictly decreasing".into()));
    }
    let (so, sp) = (omega.spectral(), phi.spectral());
    let samples: Vec<(f64, f64)> = t_steps
        .iter()
        .map(|&t| {
            // tr(φ [Dω:Dφ]_t) = tr(φ^{1−it} ω^{it})
            let f = trace_product(&powers(&sp, c(1.0, -t)), &powers(&so, c(0.0, t)));
            (t * t, -f.im / t)
        })
        .collect();
    Ok(neville_at_zero(&samples))
}

/// Value at 0 of the interpolating polynomial through `(x_i, y_i)`.
fn neville_at_zero(points: &[(f64, f64)]) -> f64 {
    let mut p: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
    let x: Vec<f64> = points.iter().map(|(x, _)| *x).collect();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (x[i], x[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

/// The Hilbert–Schmidt embedding `ℓ_{1/2}(ρ) = 2 ρ^{1/2}`.
pub fn l2_embed(rho: &DensityOperator) -> CMatrix {
    real_power(&rho.spectral(), 0.5).scale(2.0)
}

/// Hilbert–Schmidt inner product `⟨S, T⟩ = tr(T† S)`.
pub fn hs_inner(s: &CMatrix, t: &CMatrix) -> Result<Complex64> {
    if s.shape() != t.shape() {
        return Err(Error::ShapeMismatch { expected: format!("{:?}", s.shape()), got: format!("{:?}", t.shape()) });
    }
    Ok(s.iter().zip(t.iter()).map(|(a, b)| b.conj() * a).sum())
}

/// Which tensor factor of `C^{d_a} ⊗ C^{d_b}` to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace over one factor of a bipartite operator.
pub fn partial_trace(m: &CMatrix, da: usize, db: usize, trace_out: Subsystem) -> Result<CMatrix> {
    if m.shape() != (da * db, da * db) {
        return Err(Error::ShapeMismatch { expected: format!("{0}×{0}", da * db), got: format!("{:?}", m.shape()) });
    }
    Ok(match trace_out {
        Subsystem::Second => CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Subsystem::First => CMatrix::from_fn(db, db, |i, j| (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()),
    })
}

/// Kronecker product of two states.
pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    DensityOperator::new(a.matrix.kronecker(&b.matrix))
}

/// Both sides of the tangent-sphere condition for a direction `x`: the
/// integral form `re tr(ω^{1−γ} x φ^γ)` and the analytically continued
/// cocycle form `re tr(ω · ω^{−γ} φ^γ · x)`. They agree when ω and φ commute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentSphereDiagnostic {
    pub integral_form: f64,
    pub cocycle_form: f64,
}

pub fn tangent_sphere_residuals(
    omega: &DensityOperator,
    phi: &DensityOperator,
    x: &ObservableOperator,
    gamma: f64,
) -> Result<TangentSphereDiagnostic> {
    check_dims(omega.dim(), phi.dim())?;
    check_dims(omega.dim(), x.dim())?;
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::OutOfRange(format!("γ = {gamma} outside (0, 1)")));
    }
    omega.require_faithful()?;
    let so = omega.spectral();
    let phi_g = real_power(&phi.spectral(), gamma);
    let integral = trace_product(&(real_power(&so, 1.0 - gamma) * x.matrix()), &phi_g).re;
    let continued = so.apply_real(|l| l.powf(-gamma)) * &phi_g;
    let cocycle = trace_product(&(omega.matrix() * continued), x.matrix()).re;
    Ok(TangentSphereDiagnostic { integral_form: integral, cocycle_form: cocycle })
}
