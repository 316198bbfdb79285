//! Granulate-then-fit plumbing shared by the CLI, the benchmark harness,
//! and the point-based baseline (one radius-zero ball per sample).

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::gbtsvm::{self, GbtsvmHyper};
use crate::granulation::{granulate, GranularBall, GranulationConfig, GranulationResult};
use crate::lsgbtsvm::{self, LsHyper};
use crate::model::TwinModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gbtsvm,
    Lsgbtsvm,
}

/// One ball per sample, radius zero. Feeding these to a twin trainer
/// recovers the plain point-based TSVM.
pub fn singleton_balls(d: &Dataset) -> GranulationResult {
    let balls = (0..d.n())
        .map(|i| GranularBall {
            center: d.row(i),
            radius: 0.0,
            label: d.label(i),
            count: 1,
            purity: 1.0,
        })
        .collect();
    GranulationResult {
        balls,
        iterations: 0,
        membership: (0..d.n()).map(|i| vec![i]).collect(),
    }
}

/// Granulates and fits a GBTSVM, stamping the dataset's label mapping and
/// the granulation settings onto the model.
pub fn train_gbtsvm(
    data: &Dataset,
    gran: &GranulationConfig,
    hyper: &GbtsvmHyper,
) -> Result<TwinModel> {
    let balls = granulate(data, gran)?;
    let mut model = gbtsvm::fit(&balls, hyper)?;
    model.label_map = data.label_map.clone();
    model.granulation = Some(*gran);
    Ok(model)
}

/// Granulate-then-fit for the LS variant.
pub fn train_lsgbtsvm(
    data: &Dataset,
    gran: &GranulationConfig,
    hyper: &LsHyper,
) -> Result<TwinModel> {
    let balls = granulate(data, gran)?;
    let mut model = lsgbtsvm::fit(&balls, hyper)?;
    model.label_map = data.label_map.clone();
    model.granulation = Some(*gran);
    Ok(model)
}

/// Point-based TSVM baseline: the GBTSVM pipeline fed singleton balls.
pub fn train_point_tsvm(data: &Dataset, hyper: &GbtsvmHyper) -> Result<TwinModel> {
    let balls = singleton_balls(data);
    let mut model = gbtsvm::fit(&balls, hyper)?;
    model.label_map = data.label_map.clone();
    Ok(model)
}
