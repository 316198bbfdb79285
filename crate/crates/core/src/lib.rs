//! Granular-ball twin hyperplane classification.
//!
//! A labeled dataset is first compressed into granular balls (center,
//! radius, majority label) by purity-driven 2-means splitting; two
//! nonparallel hyperplanes are then fitted over the balls, each close to one
//! class and pushed at least `1 + radius` from the other. Two trainers are
//! provided: the dual-based GBTSVM and the inversion-free LS-GBTSVM, both
//! with linear and Gaussian-kernel variants, together with the tolerance
//! bounds of the linear model and a benchmark/statistics harness.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod gbtsvm;
pub mod granulation;
pub mod kernels;
pub mod lsgbtsvm;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod vtub;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use model::TwinModel;
