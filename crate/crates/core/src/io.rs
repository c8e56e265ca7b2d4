//! JSON payloads for complex matrices: `{"n": 2, "entries": [[re, im], …]}`,
//! row-major, `n²` pairs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<Complex64>) -> Self {
        let n = m.nrows();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        Self { n, entries }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n == 0 || self.entries.len() != self.n * self.n {
            return Err(Error::Format(format!("expected {} entries for n = {}, got {}", self.n * self.n, self.n, self.entries.len())));
        }
        if self.entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite entry".into()));
        }
        Ok(DMatrix::from_row_iterator(self.n, self.n, self.entries.iter().map(|[re, im]| Complex64::new(*re, *im))))
    }

    /// Real diagonal matrix.
    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut entries = vec![[0.0, 0.0]; n * n];
        for (i, v) in d.iter().enumerate() {
            entries[i * n + i] = [*v, 0.0];
        }
        Self { n, entries }
    }
}
