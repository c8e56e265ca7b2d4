//! Finite classical information models.
//!
//! A sample space is `{0, …, n−1}`; a finite positive integral is a vector of
//! nonnegative weights, and random variables are plain real vectors. Everything
//! here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance for "total mass equals one".
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Nonnegative weights on a finite sample space with positive total mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassicalWeights {
    weights: Vec<f64>,
}

impl ClassicalWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidWeights(format!("entry {w} is not a finite nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidWeights(format!("total mass {total} must be finite and positive")));
        }
        Ok(Self { weights })
    }

    /// Uniform probability weights on `n` points.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Rescaled copy with unit total mass.
    pub fn normalized(&self) -> Self {
        let m = self.total_mass();
        Self { weights: self.weights.iter().map(|w| w / m).collect() }
    }

    /// Indices carrying positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, _)| i).collect()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.weights.iter().all(|w| *w > 0.0)
    }
}

impl TryFrom<Vec<f64>> for ClassicalWeights {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ClassicalWeights> for Vec<f64> {
    fn from(w: ClassicalWeights) -> Self {
        w.weights
    }
}

/// A real function on the sample space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomVariable {
    values: Vec<f64>,
}

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise composition `h ∘ self`.
    pub fn map(&self, h: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|v| h(*v)).collect() }
    }
}

impl From<Vec<f64>> for RandomVariable {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(a, b));
    }
    Ok(())
}

/// Unnormalized expectation `Σ μ_i f_i`.
pub fn expectation(mu: &ClassicalWeights, f: &RandomVariable) -> Result<f64> {
    check_len(mu.len(), f.len())?;
    Ok(mu.as_slice().iter().zip(f.as_slice()).map(|(m, v)| m * v).sum())
}

/// Groups sample points by the exact value of `g`, preserving first-occurrence order.
fn level_sets(g: &RandomVariable) -> Vec<(f64, Vec<usize>)> {
    let mut levels: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, v) in g.as_slice().iter().enumerate() {
        // -0.0 and 0.0 are the same level
        match levels.iter_mut().find(|(lv, _)| *lv == *v) {
            Some((_, idx)) => idx.push(i),
            None => levels.push((*v, vec![i])),
        }
    }
    levels
}

/// Conditional expectation `E_ω(f | g)`: on each level set of `g`, the
/// ω-weighted average of `f`.
///
/// The result is `g`-measurable and is characterised by
/// `ω((f − E)·h(g)) = 0` for every `h`. A level set with zero ω-mass has no
/// defined value and is reported as [`Error::DegenerateConditioning`].
pub fn conditional_expectation(
    omega: &ClassicalWeights,
    f: &RandomVariable,
    g: &RandomVariable,
) -> Result<RandomVariable> {
    check_len(omega.len(), f.len())?;
    check_len(omega.len(), g.len())?;
    let w = omega.as_slice();
    let mut out = vec![0.0; f.len()];
    for (level, idx) in level_sets(g) {
        let mass: f64 = idx.iter().map(|&i| w[i]).sum();
        if mass <= 0.0 {
            return Err(Error::DegenerateConditioning { level });
        }
        // offset by the first value so constant blocks are reproduced exactly
        let base = f.as_slice()[idx[0]];
        let avg = base + idx.iter().map(|&i| w[i] * (f.as_slice()[i] - base)).sum::<f64>() / mass;
        for &i in &idx {
            out[i] = avg;
        }
    }
    Ok(RandomVariable::new(out))
}

/// The updated functional `f ↦ ω(E_φ(f | g))`.
#[derive(Debug, Clone)]
pub struct ConditionedFunctional {
    omega: ClassicalWeights,
    phi: ClassicalWeights,
    g: RandomVariable,
}

impl ConditionedFunctional {
    pub fn apply(&self, f: &RandomVariable) -> Result<f64> {
        let e = conditional_expectation(&self.phi, f, &self.g)?;
        expectation(&self.omega, &e)
    }

    /// Weights representing the functional: `ω_new = Σ_i f_i · weights_i`.
    pub fn weights(&self) -> Result<ClassicalWeights> {
        let n = self.omega.len();
        let mut w = vec![0.0; n];
        for (i, wi) in w.iter_mut().enumerate() {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            *wi = self.apply(&RandomVariable::new(e))?;
        }
        ClassicalWeights::new(w)
    }
}

/// Expectation updating `ω_new := ω ∘ E_φ(· | g)`.
pub fn update_by_conditioning(
    omega: &ClassicalWeights,
    phi: &ClassicalWeights,
    g: &RandomVariable,
) -> Result<ConditionedFunctional> {
    check_len(omega.len(), phi.len())?;
    check_len(omega.len(), g.len())?;
    // surface degenerate level sets now rather than on first use
    conditional_expectation(phi, &RandomVariable::constant(g.len(), 0.0), g)?;
    Ok(ConditionedFunctional { omega: omega.clone(), phi: phi.clone(), g: g.clone() })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::OutOfRange(format!("gamma = {gamma} outside [0, 1]")));
    }
    Ok(())
}

/// The γ-embedding `μ ↦ μ^γ / γ`, componentwise. At γ = 0 the logarithmic
/// chart `ln μ` is used.
pub fn gamma_embed(mu: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if gamma == 0.0 {
        return Ok(mu.iter().map(|m| m.ln()).collect());
    }
    if gamma == 1.0 {
        return Ok(mu.to_vec());
    }
    Ok(mu.iter().map(|m| m.powf(gamma) / gamma).collect())
}

/// Inverse of [`gamma_embed`].
pub fn gamma_unembed(x: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if gamma == 0.0 {
        return Ok(x.iter().map(|v| v.exp()).collect());
    }
    if gamma == 1.0 {
        return Ok(x.to_vec());
    }
    if let Some(v) = x.iter().find(|v| **v < 0.0) {
        return Err(Error::ChartDomain(format!("γ-coordinate {v} is negative")));
    }
    Ok(x.iter().map(|v| (gamma * v).powf(1.0 / gamma)).collect())
}

/// A Markov map stored on the function side: an `n × m` nonnegative matrix
/// sending functions on the `m`-point output space to functions on the
/// `n`-point input space, with every row summing to one (`T1 = 1`).
///
/// Weights transform by the transpose: `(μ∘T)_j = Σ_i μ_i T_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMap {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl MarkovMap {
    /// Row-major entries. Rows must be nonnegative and sum to one within 1e−12.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{cols} entries"),
                got: format!("{}", entries.len()),
            });
        }
        if entries.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::InvalidWeights("Markov map entries must be finite and nonnegative".into()));
        }
        for r in 0..rows {
            let s: f64 = entries[r * cols..(r + 1) * cols].iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidWeights(format!("row {r} sums to {s}, not 1")));
            }
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            e[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, entries: e }
    }

    /// Collapses every input point onto output point `target` of an `m`-point space.
    pub fn collapse(n: usize, m: usize, target: usize) -> Result<Self> {
        if target >= m {
            return Err(Error::OutOfRange(format!("target {target} >= {m}")));
        }
        let mut e = vec![0.0; n * m];
        for r in 0..n {
            e[r * m + target] = 1.0;
        }
        Ok(Self { rows: n, cols: m, entries: e })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols + c]
    }

    /// Function-side action `f ↦ Tf`.
    pub fn apply_to_function(&self, f: &RandomVariable) -> Result<RandomVariable> {
        check_len(self.cols, f.len())?;
        Ok(RandomVariable::new(
            (0..self.rows)
                .map(|r| (0..self.cols).map(|c| self.entry(r, c) * f.as_slice()[c]).sum())
                .collect(),
        ))
    }
}

/// Predual action `μ ↦ μ∘T` of a Markov map on weights.
pub fn apply_markov(mu: &ClassicalWeights, t: &MarkovMap) -> Result<ClassicalWeights> {
    let (rows, cols) = t.shape();
    check_len(rows, mu.len())?;
    let out: Vec<f64> = (0..cols)
        .map(|c| (0..rows).map(|r| mu.as_slice()[r] * t.entry(r, c)).sum())
        .collect();
    ClassicalWeights::new(out)
}

/// `p`-norm of a real vector; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(v: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::OutOfRange(format!("p = {p} must be >= 1")));
    }
    if p.is_infinite() {
        return Ok(v.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    Ok(v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p))
}
