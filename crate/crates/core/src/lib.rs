#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Numerical laboratory for the linear Blackstock model
//!
//! ```text
//! ψ_ttt + (δ+κ) r² ψ_tt + (1 + γ̃ r²) r² ψ_t + κ r⁴ ψ = 0   (Fourier side, r = |ξ|)
//! ```
//!
//! The crate evaluates the exact per-frequency solution, its small-frequency
//! root expansions and first/second-order large-time profiles, computes L²
//! norms through radial Plancherel quadrature and fits the measured norms
//! against the expected algebraic/logarithmic rates.

pub mod data;
pub mod error;
pub mod experiments;
pub mod modal;
pub mod params;
pub mod profiles;
pub mod quadrature;
pub mod rates;
pub mod spectrum;

pub use error::{Error, Result};
pub use params::{ParamsInput, PhysicalParams};
