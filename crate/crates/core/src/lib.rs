//! Inflation-LP certification of genuine multipartite nonlocality under
//! local operations and shared randomness.
//!
//! The numeric core is generic over [`Scalar`]: `f32`, `f64`,
//! `BigRational` and the exact quadratic field [`QSqrt2`]. Aliases below fix
//! the common choices.

pub mod behavior;
pub mod constraints;
pub mod error;
pub mod index;
pub mod inequalities;
pub mod inflation;
pub mod io;
pub mod lp;
pub mod network;
pub mod qsqrt2;
pub mod quantum;
pub mod scalar;

use num_rational::BigRational;

pub use behavior::Behavior;
pub use constraints::ConstraintSystem;
pub use error::{Error, Result};
pub use qsqrt2::QSqrt2;
pub use scalar::Scalar;

pub type BehaviorF32 = Behavior<f32>;
pub type BehaviorF64 = Behavior<f64>;
pub type BehaviorRational = Behavior<BigRational>;
pub type BehaviorExact = Behavior<QSqrt2>;

pub type SystemF64 = ConstraintSystem<f64>;
pub type SystemRational = ConstraintSystem<BigRational>;
pub type SystemExact = ConstraintSystem<QSqrt2>;
