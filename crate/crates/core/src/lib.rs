//! Nearly unstable INAR(1) processes `X_t = θ ∘ X_{t-1} + ε_t` under the local
//! parametrization `θ = 1 - h/n²`.
//!
//! The crate simulates paths, evaluates exact transition probabilities and
//! likelihood ratios, implements the efficient estimator and tests of `θ = 1`,
//! and drives Monte Carlo checks against the Poisson limit experiment.

// `!(x >= 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dist;
pub mod extreal;
pub mod inference;
pub mod likelihood;
pub mod limitexp;
pub mod montecarlo;
pub mod numeric;
pub mod process;

pub use dist::{InnovationSpec, Kind};
pub use extreal::ExtReal;
pub use process::{LocalParam, Path};
