//! Spatio-temporal-textual point processes for event-linkage detection.
//!
//! The pipeline turns incident text into TF-IDF vectors ([`text`]), embeds
//! them as binary marks with a keyword-selecting Gaussian-Bernoulli RBM
//! ([`rbm`]), fits a marked multivariate Hawkes process over discrete beats
//! by EM ([`hawkes`]) and ranks event pairs by their posterior triggering
//! probability. [`simulator`] generates data with known parents for
//! validation and [`evaluation`] scores retrieval and selects
//! hyper-parameters by cross-validation.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod hawkes;
pub mod matrix;
pub mod normal;
pub mod rbm;
pub mod simulator;
pub mod text;

pub use embedding::Embedding;
pub use error::{Error, Result};
pub use matrix::Matrix;
