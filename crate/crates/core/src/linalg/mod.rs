//! Dense real linear algebra and spectral predicates.
//!
//! Everything here is a pure function over immutable values. Decompositions
//! (eigen, SVD, symmetric eigen) are delegated to `faer`; the rest is plain
//! row-major arithmetic on [`DenseMatrix`].

mod backend;
mod matrix;
mod spectral;
mod subspace;
pub mod textio;

pub use matrix::{add_vec, dot, kron, norm2, sub_vec, DenseMatrix};
pub use spectral::{
    diagonalizability_report, eigen_decomposition, eigenvalues, is_semi_hurwitz, is_semi_schur,
    is_semi_schur_increment,
    semi_hurwitz_certificate, semi_schur_certificate, spectral_norm, DiagonalizabilityReport,
    EigenDecomposition,
};
pub use subspace::{
    kernel_basis, max_principal_angle, oblique_project, pseudo_inverse, psd_sqrt, range_basis,
    rank, singular_values, SubspaceBasis,
};

/// Complex scalar used for eigenvalues.
pub type ComplexScalar = num_complex::Complex64;

/// Threshold for the predicates `is_semi_hurwitz` and `is_semi_schur`.
pub const PREDICATE_TOL: f64 = 1e-8;

/// Relative residual accepted for an eigenpair, scaled by `‖a‖`.
pub const EIG_RESIDUAL_TOL: f64 = 1e-9;

/// Largest eigenvector condition number still treated as diagonalizable.
pub const DIAGONALIZABLE_COND_MAX: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("{op}: expected shape {expected:?}, found {found:?}")]
    DimensionMismatch {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{op}: matrix must be square, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("bases do not form a direct sum of the whole space: {0}")]
    NotDirectSum(String),
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error("eigenpair residual {residual:e} exceeds {bound:e}")]
    EigenResidual { residual: f64, bound: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn require_square(op: &'static str, a: &DenseMatrix) -> Result<(), LinalgError> {
    if a.is_square() {
        Ok(())
    } else {
        Err(LinalgError::NotSquare {
            op,
            rows: a.rows(),
            cols: a.cols(),
        })
    }
}
