//! Longitudinal mixed-effects modelling: frequentist LMM fits, a Gibbs
//! sampler for the conjugate random-intercept model, hinge (piecewise)
//! terms, model comparison and diagnostics.

// negated comparisons are used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod data;
pub mod design;
pub mod error;
pub mod lmm;
pub mod numerics;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix64 = numerics::Matrix<f64>;
pub type Matrix32 = numerics::Matrix<f32>;
pub type Series64 = numerics::Series<f64>;
pub type Series32 = numerics::Series<f32>;
pub type DesignMatrices64 = design::DesignMatrices<f64>;
pub type DesignMatrices32 = design::DesignMatrices<f32>;
pub type LmmFit64 = lmm::LmmFit<f64>;
pub type LmmFit32 = lmm::LmmFit<f32>;
pub type VarianceComponents64 = lmm::VarianceComponents<f64>;
pub type GibbsState64 = bayes::GibbsState<f64>;
pub type GibbsChain64 = bayes::GibbsChain<f64>;
