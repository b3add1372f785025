//! First-order perturbation of eigenvalues and eigenvectors for diagonal
//! operators with a perturbation given in the eigenbasis, plus convergence
//! certificates, a finite-dimensional Newton oracle, and file I/O for the
//! command-line tool.

pub mod builtin;
pub mod criteria;
pub mod error;
pub mod modelio;
pub mod oracle;
pub mod par;
pub mod series;
pub mod spectral;

pub use error::{Error, Result};
pub use series::{TailReport, Trend, TruncationPolicy};
pub use spectral::{
    apply_operator, coefficient, delta_derivative, lambda_derivative, residual_check,
    second_order_coefficient, second_order_term, Dimension, EigenderivativeResult, Eigensystem,
    FieldTag, PerturbationCoefficients, PerturbedModel, ResidualReport, Scalar, SeriesVector,
};
