//! Relativistic Weyl–Wigner–Moyal calculus for charge-invariant observables.
//!
//! The crate samples phase-space functions on conjugate lattices, composes
//! them with the Moyal star product, splits Klein–Gordon states into charge
//! branches and evolves the resulting four-component Wigner functions.

pub mod error;
pub mod phasegrid;
pub mod relkin;
pub mod starcalc;
pub mod wigner;
pub mod evolution;
pub mod quantcheck;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
