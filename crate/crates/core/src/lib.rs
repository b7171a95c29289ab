//! Comment-volume prediction: corpus handling, feature extraction, regression
//! models, evaluation, log-log rate lines, topic categorization and a
//! calibrated synthetic corpus generator.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod learn;
pub mod matrix;
pub mod ratemodel;
pub mod scalar;
pub mod synth;
pub mod taxonomy;
pub mod text;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = matrix::Matrix<f64>;
pub type DesignMatrix64 = features::DesignMatrix<f64>;
pub type LinearModel64 = learn::LinearModel<f64>;
pub type ForestModel64 = learn::ForestModel<f64>;
pub type SvrModel64 = learn::SvrModel<f64>;
pub type MlpModel64 = learn::MlpModel<f64>;
pub type Model64 = learn::Model<f64>;
pub type ModelFile64 = learn::ModelFile<f64>;
pub type RateFit64 = ratemodel::RateFit<f64>;
pub type GroupFit64 = ratemodel::GroupFit<f64>;
