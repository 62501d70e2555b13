//! Two-variable (Pusz–Woronowicz) functional calculus and extended operator
//! perspectives for finite-dimensional positive semidefinite matrices.
//!
//! Values that may be unbounded are returned as [`ExtendedSelfAdjoint`]: a
//! Hermitian operator on an essential subspace and +∞ on its complement.

pub mod extended_sa;
pub mod harness;
pub mod matrix_core;
pub mod perspectives_means;
pub mod pw_calculus;
pub mod scalar_functions;
pub mod variational;

pub use extended_sa::{Classification, ExtendedReal, ExtendedSelfAdjoint};
pub use matrix_core::{CMatrix, CVector, State, Subspace, C64};
