//! Numerical study of a two-level detector coupled in sequence, through
//! non-commuting observables, to a stationary thermal (KMS) field.
//!
//! The crate provides:
//!
//! * [`algebra`] — exact 2×2 complex operator algebra (Pauli operators,
//!   density matrices, closed-form matrix functions);
//! * [`kms`] — stationary correlation functions built to satisfy detailed
//!   balance exactly, plus numerical KMS checks and discrete-mode fits;
//! * [`switching`] — compactly supported switching profiles and ordered
//!   two-leg coupling protocols;
//! * [`perturbation`] — the second-order reduced detector state and the
//!   ordering asymmetry computed three independent ways;
//! * [`oracle`] — non-perturbative evolution of the detector against a
//!   truncated-Fock field, used as ground truth for the perturbative
//!   results;
//! * [`geometry`] — relative entropy, BKM and Bures metrics on the family
//!   of effective Gibbs states.
//!
//! All numerics are generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the aliases below fix the common double-precision
//! instantiations. Every public type is an immutable value and every
//! operation is a pure function, so everything is safe to share across
//! threads.

// `!(x > y)` guards are deliberate: they reject NaN where `x <= y` would
// accept it. Index loops over small fixed-size numeric blocks stay as loops.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod cheby;
pub mod error;
pub mod geometry;
pub mod kms;
pub mod oracle;
pub mod perturbation;
pub mod quad;
pub mod scalar;
pub mod switching;

pub use error::{Error, Result};

/// Double-precision 2×2 complex matrix.
pub type Matrix2 = algebra::ComplexMatrix2<f64>;
/// Double-precision detector state.
pub type Density = algebra::DensityMatrix<f64>;
/// Double-precision Hermitian observable.
pub type Operator = algebra::Observable<f64>;
/// Double-precision spectral model.
pub type Spectrum = kms::SpectralModel<f64>;
/// Double-precision discrete mode set.
pub type ModeSet = kms::DiscreteModeSet<f64>;
/// Double-precision switching function.
pub type Switching = switching::SwitchingFunction<f64>;
/// Double-precision coupling protocol.
pub type Couplings = switching::Protocol<f64>;
