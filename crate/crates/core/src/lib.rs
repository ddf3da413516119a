//! Numerical laboratory for random series of Schatten-class operators.

pub mod error;
pub mod experiments;
pub mod hardy;
pub mod hermitian;
pub mod decomposition;
pub mod matrix;
pub mod rng;
pub mod scalar;
pub mod schatten;
pub mod series;
pub mod spaces;
pub mod square;
pub mod svd;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, MatrixLiteral};
pub use scalar::Real;
pub use spaces::CoefficientSpace;
pub use schatten::{abs_op, lp_norm, schatten_norm, SchattenExponent};
pub use square::{
    chi_norm, column_gram, hilbert_sum_norm, hstack, lattice_square_norm, row_gram, vstack, DiscreteFunctionFamily,
    OperatorSequence,
};
pub use svd::{singular_values, svd, SingularSpectrum, Svd};

/// Double-precision complex matrix.
pub type CMatrix = ComplexMatrix<f64>;
/// Double-precision operator sequence.
pub type Sequence = OperatorSequence<f64>;
