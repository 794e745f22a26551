//! Pourbaix parameter estimation from (pH, redox potential) measurements.
//!
//! The model is a three-region piecewise line in E-vs-pH space (acid slope
//! 2k, middle slope k, alkaline plateau). Everything is generic over the
//! float type; `f64` is the intended default.

pub mod error;
pub mod fit;
pub mod model;
pub mod posterior;

pub use error::AnalyzerError;
pub use fit::{fit_mle, FitConfig, FitResult};
pub use model::{
    log_likelihood, mu_ev, sigma_floor, Dataset, ParamName, PourbaixParams, SIGMA_FLOOR,
};
pub use posterior::{
    joint_mode, marginal_histogram, model_line_band, sample_posterior, Histogram, ModelLineBand,
    PriorRanges, WeightedSamples,
};
