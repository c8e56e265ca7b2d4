//! Deviation functionals on classical weights.
//!
//! Three families are provided: the γ-deviations [`d_gamma`], Csiszár
//! f-deviations [`csiszar`] and Bregman deviations [`bregman`]. The
//! γ-deviations belong to both of the other families; the tests check this
//! numerically.
//!
//! All deviations return extended reals: `f64::INFINITY` is an ordinary value.

use std::fmt;
use std::sync::Arc;

use crate::cmeasure::{gamma_embed, gamma_unembed, ClassicalWeights, NORMALIZATION_TOL};
use crate::{Error, Result};

/// γ ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GammaParam(f64);

impl GammaParam {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::OutOfRange(format!("gamma = {gamma} outside [0, 1]")));
        }
        Ok(Self(gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The dual parameter 1 − γ.
    pub fn dual(self) -> Self {
        Self(1.0 - self.0)
    }
}

/// Per-component γ-deviation `d_γ(a, b)` for scalars `a, b ≥ 0`.
///
/// γ ∈ (0,1): `[γa + (1−γ)b − a^γ b^{1−γ}] / (γ(1−γ))`.
/// γ = 1: `b − a + a ln(a/b)`; γ = 0: `a − b + b ln(b/a)`.
#[inline]
pub fn d_gamma_scalar(a: f64, b: f64, gamma: f64) -> f64 {
    if a == b && a.is_finite() {
        0.0
    } else if gamma == 1.0 {
        kl_term(a, b)
    } else if gamma == 0.0 {
        kl_term(b, a)
    } else {
        let cross = if a == 0.0 || b == 0.0 { 0.0 } else { a.powf(gamma) * b.powf(1.0 - gamma) };
        ((gamma * a + (1.0 - gamma) * b - cross) / (gamma * (1.0 - gamma))).max(0.0)
    }
}

/// `b − a + a ln(a/b)` with `0 ln 0 = 0` and `a ln(a/0) = +∞` for `a > 0`.
#[inline]
fn kl_term(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        b
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        // with r = (a − b)/b: a ln(a/b) − (a − b) = a ln(1 + r) − b r
        let r = (a - b) / b;
        let v = if r.abs() < 0.5 { a * r.ln_1p() - b * r } else { a * (a / b).ln() - (a - b) };
        v.max(0.0)
    }
}

fn check_pair(mu: &ClassicalWeights, nu: &ClassicalWeights) -> Result<()> {
    if mu.len() != nu.len() {
        return Err(Error::LengthMismatch(mu.len(), nu.len()));
    }
    Ok(())
}

/// The γ-deviation `D_γ(μ, ν)`. Nonnegative, zero iff `μ = ν`, `+∞` possible
/// at γ ∈ {0, 1} when the supports are not nested.
pub fn d_gamma(mu: &ClassicalWeights, nu: &ClassicalWeights, gamma: GammaParam) -> Result<f64> {
    check_pair(mu, nu)?;
    Ok(d_gamma_raw(mu.as_slice(), nu.as_slice(), gamma.value()))
}

/// [`d_gamma`] on raw slices, no validation. Negative entries give NaN.
pub fn d_gamma_raw(mu: &[f64], nu: &[f64], gamma: f64) -> f64 {
    mu.iter().zip(nu).map(|(a, b)| d_gamma_scalar(*a, *b, gamma)).sum()
}

/// Kullback–Leibler divergence `Σ μ ln(μ/ν)` of two probability vectors.
pub fn kl(mu: &ClassicalWeights, nu: &ClassicalWeights) -> Result<f64> {
    check_pair(mu, nu)?;
    for m in [mu, nu] {
        if (m.total_mass() - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(m.total_mass()));
        }
    }
    let mut s = 0.0;
    for (a, b) in mu.as_slice().iter().zip(nu.as_slice()) {
        if *a == 0.0 {
            continue;
        }
        if *b == 0.0 {
            return Ok(f64::INFINITY);
        }
        s += a * (a / b).ln();
    }
    Ok(s.max(0.0))
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A convex function `f` on (0, ∞) with `f(1) = 0`, plus the two boundary
/// limits needed for zero masses: `f(0+)` and `lim f(t)/t` as `t → ∞`.
#[derive(Clone)]
pub struct CsiszarGenerator {
    name: String,
    f: ScalarFn,
    at_zero: Option<f64>,
    slope_at_infinity: Option<f64>,
}

impl fmt::Debug for CsiszarGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CsiszarGenerator")
            .field("name", &self.name)
            .field("at_zero", &self.at_zero)
            .field("slope_at_infinity", &self.slope_at_infinity)
            .finish()
    }
}

/// Points of the log-spaced convexity grid.
const CONVEXITY_GRID: usize = 64;
const CONVEXITY_TOL: f64 = -1e-9;

impl CsiszarGenerator {
    /// Validates `f(1) = 0` and sampled convexity on a 64-point log grid over
    /// [1e−3, 1e3]. A boundary limit left as `None` makes any input that needs
    /// it an [`Error::UndefinedBoundary`].
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        at_zero: Option<f64>,
        slope_at_infinity: Option<f64>,
    ) -> Result<Self> {
        let name = name.into();
        let f1 = f(1.0);
        if !(f1.abs() <= 1e-12) {
            return Err(Error::InvalidGenerator(format!("{name}: f(1) = {f1}, expected 0")));
        }
        let ts: Vec<f64> = (0..CONVEXITY_GRID)
            .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (CONVEXITY_GRID - 1) as f64))
            .collect();
        let vs: Vec<f64> = ts.iter().map(|t| f(*t)).collect();
        if vs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGenerator(format!("{name}: non-finite value on (0, ∞)")));
        }
        for k in 1..CONVEXITY_GRID - 1 {
            let left = (vs[k] - vs[k - 1]) / (ts[k] - ts[k - 1]);
            let right = (vs[k + 1] - vs[k]) / (ts[k + 1] - ts[k]);
            if right - left < CONVEXITY_TOL {
                return Err(Error::InvalidGenerator(format!("{name}: not convex near t = {}", ts[k])));
            }
        }
        Ok(Self { name, f: Arc::new(f), at_zero, slope_at_infinity })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    /// `f_γ(t) = 1/(1−γ) + t/γ − t^{1−γ}/(γ(1−γ))`, generating `D_γ`.
    pub fn gamma(gamma: GammaParam) -> Self {
        let g = gamma.value();
        if g == 1.0 {
            return Self::reverse_kl();
        }
        if g == 0.0 {
            return Self::kl();
        }
        Self::new(
            format!("gamma({g})"),
            move |t| (g + (1.0 - g) * t - t.powf(1.0 - g)) / (g * (1.0 - g)),
            Some(1.0 / (1.0 - g)),
            Some(1.0 / g),
        )
        .expect("f_γ is convex with f(1) = 0")
    }

    /// `t ln t − t + 1`: `D_f(μ, ν) = D_0(μ, ν) = D_1(ν, μ)`.
    pub fn kl() -> Self {
        Self::new(
            "t ln t - t + 1",
            |t| if t == 0.0 { 1.0 } else { t * t.ln() - t + 1.0 },
            Some(1.0),
            Some(f64::INFINITY),
        )
        .expect("valid generator")
    }

    /// `t − 1 − ln t`: `D_f(μ, ν) = D_1(μ, ν)`.
    pub fn reverse_kl() -> Self {
        Self::new("t - 1 - ln t", |t| t - 1.0 - t.ln(), Some(f64::INFINITY), Some(1.0)).expect("valid generator")
    }

    /// `sqrt((t−1)² + ε²) − ε`, a smoothed total-variation generator.
    pub fn smoothed_abs(eps: f64) -> Self {
        Self::new(
            format!("smoothed |t-1| ({eps})"),
            move |t| ((t - 1.0).powi(2) + eps * eps).sqrt() - eps,
            Some((1.0 + eps * eps).sqrt() - eps),
            Some(1.0),
        )
        .expect("valid generator")
    }
}

/// Csiszár–Morimoto deviation `Σ μ_i f(ν_i / μ_i)`.
///
/// Zero masses: `0·f(0/0) = 0`; `μ_i > 0, ν_i = 0` contributes `μ_i f(0+)`;
/// `μ_i = 0, ν_i > 0` contributes `ν_i lim f(t)/t`.
pub fn csiszar(mu: &ClassicalWeights, nu: &ClassicalWeights, f: &CsiszarGenerator) -> Result<f64> {
    check_pair(mu, nu)?;
    let mut s = 0.0;
    for (a, b) in mu.as_slice().iter().zip(nu.as_slice()) {
        s += match (*a > 0.0, *b > 0.0) {
            (false, false) => 0.0,
            (true, true) => a * f.eval(b / a),
            (true, false) => match f.at_zero {
                Some(v) => a * v,
                None => return Err(Error::UndefinedBoundary(format!("{}: f(0+) unknown", f.name))),
            },
            (false, true) => match f.slope_at_infinity {
                Some(v) => b * v,
                None => return Err(Error::UndefinedBoundary(format!("{}: slope at infinity unknown", f.name))),
            },
        };
    }
    Ok(s)
}

/// A convex potential with a coordinate chart and its dual chart.
///
/// `dual_chart(q)` must equal `gradient(chart(q))`, and `conjugate` is the
/// Legendre–Fenchel dual of `potential`.
pub trait BregmanGenerator {
    /// ℓ(q). Errors outside the chart's domain.
    fn chart(&self, q: &[f64]) -> Result<Vec<f64>>;
    /// ℓ*(q).
    fn dual_chart(&self, q: &[f64]) -> Result<Vec<f64>>;
    /// Ψ(x).
    fn potential(&self, x: &[f64]) -> f64;
    /// ∇Ψ(x).
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Ψ*(y).
    fn conjugate(&self, y: &[f64]) -> f64;

    /// Max over samples of `|ℓ*(q) − ∇Ψ(ℓ(q))|`, and the minimum
    /// Young–Fenchel gap `Ψ(x) + Ψ*(y) − ⟨x, y⟩` over all sample pairs.
    fn consistency(&self, samples: &[Vec<f64>]) -> Result<(f64, f64)> {
        let mut chart_err: f64 = 0.0;
        let mut min_gap = f64::INFINITY;
        for q in samples {
            let x = self.chart(q)?;
            let y = self.dual_chart(q)?;
            for (a, b) in y.iter().zip(self.gradient(&x)) {
                chart_err = chart_err.max((a - b).abs());
            }
            for r in samples {
                let yr = self.dual_chart(r)?;
                let gap = self.potential(&x) + self.conjugate(&yr) - dot(&x, &yr);
                min_gap = min_gap.min(gap);
            }
        }
        Ok((chart_err, min_gap))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ψ(x) = ½‖x‖² in the identity chart.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadraticGenerator;

impl BregmanGenerator for QuadraticGenerator {
    fn chart(&self, q: &[f64]) -> Result<Vec<f64>> {
        Ok(q.to_vec())
    }
    fn dual_chart(&self, q: &[f64]) -> Result<Vec<f64>> {
        Ok(q.to_vec())
    }
    fn potential(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn conjugate(&self, y: &[f64]) -> f64 {
        0.5 * dot(y, y)
    }
}

/// The γ-generator: chart ℓ_γ, dual chart ℓ_{1−γ}, and
/// `Ψ_γ(x) = Σ (γx)^{1/γ} / (1−γ)` so that `Ψ_γ(ℓ_γ(μ)) = Σ μ / (1−γ)`.
/// Its Bregman deviation is `D_γ`. Requires γ ∈ (0, 1).
#[derive(Debug, Clone, Copy)]
pub struct GammaGenerator {
    gamma: f64,
}

impl GammaGenerator {
    pub fn new(gamma: GammaParam) -> Result<Self> {
        let g = gamma.value();
        if g <= 0.0 || g >= 1.0 {
            return Err(Error::OutOfRange(format!("γ-generator needs γ in (0,1), got {g}")));
        }
        Ok(Self { gamma: g })
    }
}

fn check_nonneg(q: &[f64]) -> Result<()> {
    match q.iter().find(|v| !(**v >= 0.0)) {
        Some(v) => Err(Error::ChartDomain(format!("component {v} is negative"))),
        None => Ok(()),
    }
}

impl BregmanGenerator for GammaGenerator {
    fn chart(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_nonneg(q)?;
        gamma_embed(q, self.gamma)
    }
    fn dual_chart(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_nonneg(q)?;
        gamma_embed(q, 1.0 - self.gamma)
    }
    fn potential(&self, x: &[f64]) -> f64 {
        let g = self.gamma;
        x.iter().map(|v| if *v < 0.0 { f64::INFINITY } else { (g * v).powf(1.0 / g) / (1.0 - g) }).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let g = self.gamma;
        x.iter().map(|v| (g * v).powf((1.0 - g) / g) / (1.0 - g)).collect()
    }
    fn conjugate(&self, y: &[f64]) -> f64 {
        let g = self.gamma;
        // sup_x xy − Ψ(x) over x ≥ 0 is 0 when y ≤ 0
        y.iter().map(|v| if *v <= 0.0 { 0.0 } else { ((1.0 - g) * v).powf(1.0 / (1.0 - g)) / g }).sum()
    }
}

impl GammaGenerator {
    /// Inverse of the primal chart.
    pub fn point_from_chart(&self, x: &[f64]) -> Result<Vec<f64>> {
        gamma_unembed(x, self.gamma)
    }
}

/// Bregman deviation `Ψ(ℓ(p1)) + Ψ*(ℓ*(p2)) − ⟨ℓ(p1), ℓ*(p2)⟩`.
pub fn bregman<B: BregmanGenerator + ?Sized>(p1: &[f64], p2: &[f64], gen: &B) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::LengthMismatch(p1.len(), p2.len()));
    }
    let x = gen.chart(p1)?;
    let y = gen.dual_chart(p2)?;
    Ok(gen.potential(&x) + gen.conjugate(&y) - dot(&x, &y))
}

/// `D(p1,p2) + D(p2,p3) − D(p1,p3) − ⟨ℓ(p1) − ℓ(p2), ℓ*(p3) − ℓ*(p2)⟩`,
/// which vanishes for every Bregman deviation.
pub fn cosine_defect<B: BregmanGenerator + ?Sized>(p1: &[f64], p2: &[f64], p3: &[f64], gen: &B) -> Result<f64> {
    let lhs = bregman(p1, p2, gen)? + bregman(p2, p3, gen)? - bregman(p1, p3, gen)?;
    let (x1, x2) = (gen.chart(p1)?, gen.chart(p2)?);
    let (y2, y3) = (gen.dual_chart(p2)?, gen.dual_chart(p3)?);
    let rhs: f64 = (0..x1.len()).map(|i| (x1[i] - x2[i]) * (y3[i] - y2[i])).sum();
    Ok(lhs - rhs)
}

/// An axis-aligned box `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBox {
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Self { lower: vec![lo; n], upper: vec![hi; n] }
    }

    fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

/// Numerical Legendre–Fenchel dual `Ψ*(y) = sup_x ⟨x, y⟩ − Ψ(x)` over a box.
///
/// Projected gradient ascent with Barzilai–Borwein steps and Armijo
/// backtracking on the concave objective. If the maximiser sits on the box
/// boundary with the gradient pointing outward, the supremum over the whole
/// space is not attained inside the box and [`Error::Unbounded`] is returned.
pub fn legendre_dual(
    psi: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    y: &[f64],
    search_box: &SearchBox,
) -> Result<f64> {
    let n = y.len();
    if search_box.lower.len() != n || search_box.upper.len() != n {
        return Err(Error::LengthMismatch(n, search_box.lower.len()));
    }
    let obj = |x: &[f64]| dot(x, y) - psi(x);
    let ascent = |x: &[f64]| -> Vec<f64> { grad(x).iter().zip(y).map(|(g, yi)| yi - g).collect() };

    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let (lo, hi) = (search_box.lower[i], search_box.upper[i]);
            if lo <= 0.0 && hi >= 0.0 { 0.0 } else { 0.5 * (lo + hi) }
        })
        .collect();
    let mut fx = obj(&x);
    let mut gx = ascent(&x);
    let mut step = 1.0;
    for _ in 0..20_000 {
        let mut t = step;
        let (xn, fxn) = loop {
            let mut cand: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a + t * g).collect();
            search_box.clamp(&mut cand);
            let fc = obj(&cand);
            let moved: f64 = cand.iter().zip(&x).zip(&gx).map(|((c, a), g)| (c - a) * g).sum();
            if fc.is_finite() && fc >= fx + 1e-4 * moved {
                break (cand, fc);
            }
            t *= 0.5;
            if t < 1e-30 {
                break (x.clone(), fx);
            }
        };
        let gn = ascent(&xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = gn.iter().zip(&gx).map(|(a, b)| b - a).collect();
        let sy = dot(&s, &yk);
        step = if sy > 0.0 { (dot(&s, &s) / sy).clamp(1e-12, 1e12) } else { 1.0 };
        let stalled = s.iter().all(|v| *v == 0.0);
        x = xn;
        fx = fxn;
        gx = gn;
        let mut proj: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a + g).collect();
        search_box.clamp(&mut proj);
        let pg = proj.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if pg < 1e-13 || stalled {
            break;
        }
    }
    for i in 0..n {
        let on_upper = x[i] >= search_box.upper[i] && gx[i] > 1e-8;
        let on_lower = x[i] <= search_box.lower[i] && gx[i] < -1e-8;
        if on_upper || on_lower {
            return Err(Error::Unbounded);
        }
    }
    Ok(fx)
}
