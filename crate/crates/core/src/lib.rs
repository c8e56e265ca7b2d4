//! # infodyn
//!
//! Inference as entropic projection, on finite classical sample spaces and on
//! finite-dimensional matrix algebras.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`cmeasure`] | weight vectors, expectations, conditional expectations, Markov maps, γ-embeddings |
//! | [`divergence`] | γ-deviations D_γ, Csiszár f-deviations, Bregman deviations, Legendre duals |
//! | [`infogeo`] | metric and dual connections extracted from a deviation by finite differences |
//! | [`entproj`] | constrained γ-entropy projections, Bayes recovery, trajectories |
//! | [`qstate`] | density operators, spectral calculus, quantum D_γ, modular flow, Connes cocycle |
//! | [`qproj`] | quantum projections, Gibbs states, Lüders comparison |
//!
//! ## Conventions
//!
//! `D_γ(μ, ν) = Σ [γ μ + (1−γ) ν − μ^γ ν^{1−γ}] / (γ(1−γ))` for γ ∈ (0,1), with the
//! limits `D_1(μ, ν) = Σ (ν − μ + μ ln(μ/ν))` and `D_0(μ, ν) = D_1(ν, μ)`.
//! On normalized inputs `D_1` is the Kullback–Leibler divergence `KL(μ‖ν)`.
//!
//! A γ-projection of a prior `p` onto a constraint set `Q` is
//! `argmin_{q ∈ Q} D_γ(q, p) + F(q)`. At γ = 1 this is the maximum relative
//! entropy update: moment constraints give Gibbs/exponential-family states and
//! support constraints give conditioning.
//!
//! ```
//! use infodyn::cmeasure::ClassicalWeights;
//! use infodyn::entproj::{project, ConstraintSet, Penalty};
//!
//! let die = ClassicalWeights::new(vec![1.0 / 6.0; 6]).unwrap();
//! let faces: Vec<f64> = (1..=6).map(f64::from).collect();
//! let q = ConstraintSet::new()
//!     .with_moment(faces.clone(), 4.5)
//!     .with_normalization(1.0);
//! let out = project(&die, 1.0, &q, &Penalty::None).unwrap();
//! let mean: f64 = out.state.as_slice().iter().zip(&faces).map(|(p, f)| p * f).sum();
//! assert!((mean - 4.5).abs() < 1e-10);
//! ```

#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the component formulas they implement
#![allow(clippy::needless_range_loop)]

pub mod cmeasure;
pub mod divergence;
pub mod entproj;
mod error;
pub mod infogeo;
pub mod io;
mod linalg;
mod newton;
pub mod qproj;
pub mod qstate;

pub use error::{Error, Result};
