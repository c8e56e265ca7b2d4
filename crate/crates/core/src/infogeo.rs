//! Riemannian metric and dual affine connections of a deviation.
//!
//! For a deviation `D(p, q)` written in chart coordinates `θ` (first slot) and
//! `θ'` (second slot), the Eguchi relations at the diagonal `θ = θ'` are
//!
//! ```text
//! g_ij     = −∂_i ∂'_j D
//! Γ_ij,k   = −∂_i ∂_j ∂'_k D
//! Γ*_ij,k  = −∂'_i ∂'_j ∂_k D
//! ```
//!
//! Derivatives are central differences, Richardson-extrapolated over the steps
//! `h` and `h/2`, so any deviation evaluator can be used. For `D_γ` the primal
//! connection vanishes in the ℓ_γ chart and the dual one in the ℓ_{1−γ} chart.

use nalgebra::DMatrix;

use crate::cmeasure::{gamma_embed, gamma_unembed};
use crate::{Error, Result};

/// A deviation evaluator on raw weight vectors.
pub type Deviation<'a> = &'a dyn Fn(&[f64], &[f64]) -> f64;

/// Coordinate chart on the positive orthant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Chart {
    /// The weights themselves.
    Raw,
    /// `μ ↦ μ^γ/γ`; γ = 0 is the logarithmic chart and γ = 1 coincides with `Raw`.
    Gamma(f64),
}

impl Chart {
    pub fn forward(&self, mu: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Chart::Raw => Ok(mu.to_vec()),
            Chart::Gamma(g) => gamma_embed(mu, g),
        }
    }

    pub fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Chart::Raw => Ok(x.to_vec()),
            Chart::Gamma(g) => gamma_unembed(x, g),
        }
    }

    /// `μ · dθ/dμ` at a single component: the chart displacement caused by a
    /// unit relative change of μ.
    fn relative_scale(&self, mu: f64) -> f64 {
        match *self {
            Chart::Raw => mu,
            Chart::Gamma(0.0) => 1.0,
            Chart::Gamma(g) => mu.powf(g),
        }
    }
}

/// Relative finite-difference step, in `[1e−6, 1e−2]`. The absolute chart step
/// is `rel · min_i μ_i |dθ_i/dμ_i|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSize(f64);

impl StepSize {
    pub fn new(rel: f64) -> Result<Self> {
        if !(1e-6..=1e-2).contains(&rel) {
            return Err(Error::OutOfRange(format!("relative step {rel} outside [1e-6, 1e-2]")));
        }
        Ok(Self(rel))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for StepSize {
    fn default() -> Self {
        Self(1e-2)
    }
}

/// Metric components in a chart at a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    pub base: Vec<f64>,
    pub entries: DMatrix<f64>,
    /// Estimated truncation error (difference between the two step levels).
    pub error_estimate: f64,
}

impl MetricMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.entries - self.entries.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.entries + self.entries.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    /// `g(u, v)`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += u[i] * self.entries[(i, j)] * v[j];
            }
        }
        s
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &MetricMatrix) -> f64 {
        (&self.entries - &other.entries).amax()
    }
}

/// Dense `n × n × n` array indexed `[i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.n + j) * self.n + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn combine(a: &Tensor3, b: &Tensor3, f: impl Fn(f64, f64) -> f64) -> Tensor3 {
        Tensor3 { n: a.n, data: a.data.iter().zip(&b.data).map(|(x, y)| f(*x, *y)).collect() }
    }
}

/// Covariant connection coefficients `Γ_ij,k` (primal) and `Γ*_ij,k` (dual).
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoefficients {
    pub base: Vec<f64>,
    pub primal: Tensor3,
    pub dual: Tensor3,
    pub error_estimate: f64,
}

impl ConnectionCoefficients {
    /// Max `|Γ_ij,k − Γ_ji,k|` over both connections.
    pub fn torsion_defect(&self) -> f64 {
        let n = self.primal.dim();
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    m = m.max((self.primal.get(i, j, k) - self.primal.get(j, i, k)).abs());
                    m = m.max((self.dual.get(i, j, k) - self.dual.get(j, i, k)).abs());
                }
            }
        }
        m
    }
}

/// Evaluates the deviation with chart displacements in either slot.
struct Stencil<'a> {
    d: Deviation<'a>,
    chart: Chart,
    theta: Vec<f64>,
}

impl Stencil<'_> {
    fn new<'a>(d: Deviation<'a>, mu: &[f64], chart: Chart) -> Result<Stencil<'a>> {
        if mu.is_empty() {
            return Err(Error::InvalidWeights("empty base point".into()));
        }
        if let Some(m) = mu.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidWeights(format!("base point must be strictly positive, found {m}")));
        }
        Ok(Stencil { d, chart, theta: chart.forward(mu)? })
    }

    fn step(&self, mu: &[f64], rel: StepSize) -> f64 {
        rel.value() * mu.iter().map(|m| self.chart.relative_scale(*m)).fold(f64::INFINITY, f64::min)
    }

    fn eval(&self, first: &[(usize, f64)], second: &[(usize, f64)]) -> Result<f64> {
        let shifted = |disp: &[(usize, f64)]| -> Result<Vec<f64>> {
            let mut x = self.theta.clone();
            for (i, h) in disp {
                x[*i] += h;
            }
            self.chart.inverse(&x).map_err(|_| Error::StencilFailure(format!("{disp:?}")))
        };
        let v = (self.d)(&shifted(first)?, &shifted(second)?);
        if !v.is_finite() {
            return Err(Error::StencilFailure(format!("first {first:?}, second {second:?}")));
        }
        Ok(v)
    }

    /// −∂_i ∂'_j D at step h.
    fn metric(&self, h: f64) -> Result<DMatrix<f64>> {
        let n = self.theta.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    s += si * sj * self.eval(&[(i, si * h)], &[(j, sj * h)])?;
                }
                g[(i, j)] = -s / (4.0 * h * h);
            }
        }
        Ok(g)
    }

    /// −∂_i ∂_j ∂'_k D (primal) or −∂'_i ∂'_j ∂_k D (dual) at step h.
    fn third(&self, h: f64, dual: bool) -> Result<Tensor3> {
        let n = self.theta.len();
        let mut t = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        let pair = [(i, si * h), (j, sj * h)];
                        for sk in [1.0, -1.0] {
                            let single = [(k, sk * h)];
                            let v = if dual { self.eval(&single, &pair)? } else { self.eval(&pair, &single)? };
                            s += si * sj * sk * v;
                        }
                    }
                    t.set(i, j, k, -s / (8.0 * h * h * h));
                }
            }
        }
        Ok(t)
    }
}

fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Metric `g_ij = −∂_i ∂'_j D` at `mu` in `chart`.
pub fn eguchi_metric(d: Deviation<'_>, mu: &[f64], chart: Chart, step: StepSize) -> Result<MetricMatrix> {
    let st = Stencil::new(d, mu, chart)?;
    let h = st.step(mu, step);
    let coarse = st.metric(h)?;
    let fine = st.metric(0.5 * h)?;
    let err = (&fine - &coarse).amax() / 3.0;
    let mut g = coarse.zip_map(&fine, richardson);
    g = (&g + g.transpose()) * 0.5;
    Ok(MetricMatrix { base: mu.to_vec(), entries: g, error_estimate: err })
}

/// Fisher–Rao metric `δ_ij / μ_i` in the raw chart.
pub fn fisher_rao_metric(mu: &[f64]) -> Result<MetricMatrix> {
    if let Some(m) = mu.iter().find(|m| !(**m > 0.0)) {
        return Err(Error::InvalidWeights(format!("Fisher–Rao metric needs positive weights, found {m}")));
    }
    let n = mu.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = 1.0 / mu[i];
    }
    Ok(MetricMatrix { base: mu.to_vec(), entries: g, error_estimate: 0.0 })
}

/// Primal and dual connection coefficients at `mu` in `chart`.
pub fn eguchi_connection(d: Deviation<'_>, mu: &[f64], chart: Chart, step: StepSize) -> Result<ConnectionCoefficients> {
    let st = Stencil::new(d, mu, chart)?;
    let h = st.step(mu, step);
    let mut out = Vec::with_capacity(2);
    let mut err: f64 = 0.0;
    for dual in [false, true] {
        let coarse = st.third(h, dual)?;
        let fine = st.third(0.5 * h, dual)?;
        err = err.max(Tensor3::combine(&coarse, &fine, |a, b| (b - a) / 3.0).max_abs());
        out.push(Tensor3::combine(&coarse, &fine, richardson));
    }
    let dual = out.pop().expect("two tensors");
    let primal = out.pop().expect("two tensors");
    Ok(ConnectionCoefficients { base: mu.to_vec(), primal, dual, error_estimate: err })
}

/// Chart derivative of the Eguchi metric, `[k][i][j] = ∂_k g_ij`, by central
/// differences of [`eguchi_metric`] at displaced base points.
pub fn metric_derivative(d: Deviation<'_>, mu: &[f64], chart: Chart, step: StepSize) -> Result<Tensor3> {
    let st = Stencil::new(d, mu, chart)?;
    let h = st.step(mu, step);
    let n = mu.len();
    let at = |k: usize, dk: f64| -> Result<DMatrix<f64>> {
        let mut x = st.theta.clone();
        x[k] += dk;
        let base = chart.inverse(&x).map_err(|_| Error::StencilFailure(format!("metric base shift {k}")))?;
        Ok(eguchi_metric(d, &base, chart, step)?.entries)
    };
    let mut out = Tensor3::zeros(n);
    for k in 0..n {
        let coarse = (at(k, h)? - at(k, -h)?) / (2.0 * h);
        let fine = (at(k, 0.5 * h)? - at(k, -0.5 * h)?) / h;
        for i in 0..n {
            for j in 0..n {
                out.set(k, i, j, richardson(coarse[(i, j)], fine[(i, j)]));
            }
        }
    }
    Ok(out)
}

/// Max over direction triples `(u, v, w)` of
/// `|∂_u g(v, w) − g(∇_u v, w) − g(v, ∇*_u w)|`, i.e. of the contraction of
/// `∂_k g_ij − Γ_ki,j − Γ*_kj,i`.
pub fn duality_defect(dg: &Tensor3, conn: &ConnectionCoefficients, directions: &[(Vec<f64>, Vec<f64>, Vec<f64>)]) -> f64 {
    let n = dg.dim();
    let mut worst: f64 = 0.0;
    for (u, v, w) in directions {
        let mut s = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let r = dg.get(k, i, j) - conn.primal.get(k, i, j) - conn.dual.get(k, j, i);
                    s += u[k] * v[i] * w[j] * r;
                }
            }
        }
        worst = worst.max(s.abs());
    }
    worst
}

/// Closed-form connections of `D_1(μ, ν) = Σ ν − μ + μ ln(μ/ν)` in the raw
/// chart: the primal (mixture) connection vanishes and the dual (exponential)
/// one is `Γ*_ij,k = −δ_ijk / μ_k²`. The matching metric derivative is
/// `∂_k g_ij = −δ_ijk / μ_k²`.
pub fn mixture_exponential_pair(mu: &[f64]) -> (ConnectionCoefficients, Tensor3) {
    let n = mu.len();
    let primal = Tensor3::zeros(n);
    let mut dual = Tensor3::zeros(n);
    let mut dg = Tensor3::zeros(n);
    for k in 0..n {
        dual.set(k, k, k, -1.0 / (mu[k] * mu[k]));
        dg.set(k, k, k, -1.0 / (mu[k] * mu[k]));
    }
    (ConnectionCoefficients { base: mu.to_vec(), primal, dual, error_estimate: 0.0 }, dg)
}
