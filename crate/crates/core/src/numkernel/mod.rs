//! Scalars, dense complex matrices and the small-dimension spectral routines
//! everything else is built on.

pub mod matrix;
pub mod poly;
pub mod scalar;
pub mod spectral;

pub use matrix::{fnorm, CMat, MatrixC};
pub use num::complex::Complex64;
pub use scalar::{fmt17, ser_f64, GaussRational, Scalar};
pub use spectral::{
    eigen_witness, eigenvalues, eigenvalues_f, expm, intersect, intersect_f, kernel_basis, matrix_exp, multiset, null_space, rationalize,
    Eigenvalue, Subspace, MAX_DIM,
};
