//! Iterative transmit antenna selection and power control for multiuser
//! MIMO wiretap channels with MRT precoding.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which the simulator and CLI use.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod metrics;
pub mod model;
pub mod power;
pub mod scalar;
pub mod selector;
pub mod sim;
pub mod stepwise;

pub use error::{Result, TasError};
pub use scalar::Real;

pub type ComplexMatrix = model::ComplexMatrix<f64>;
pub type ChannelPair = model::ChannelPair<f64>;
pub type SystemParams = model::SystemParams<f64>;
pub type Precoder = model::Precoder<f64>;
pub type SinrTerms = metrics::SinrTerms<f64>;
pub type SecrecyReport = metrics::SecrecyReport<f64>;
pub type SelectionState = stepwise::SelectionState<f64>;
pub type GrowthEval = stepwise::GrowthEval<f64>;
pub type SelectorConfig = power::SelectorConfig<f64>;
pub type RunTrace = selector::RunTrace<f64>;

pub type ComplexMatrix32 = model::ComplexMatrix<f32>;
pub type ChannelPair32 = model::ChannelPair<f32>;
pub type SystemParams32 = model::SystemParams<f32>;
