//! The fitted twin-hyperplane model shared by both trainers, its decision
//! rule, and a bit-stable JSON representation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::dataset::LabelMap;
use crate::error::{Error, Result};
use crate::granulation::GranulationConfig;
use crate::kernels::{gram, KernelSpec};

/// Threshold below which a plane normal counts as degenerate and distances
/// fall back to `|b|`.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelMode {
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "kernel")]
    Kernel,
    #[serde(rename = "ls-linear")]
    LsLinear,
    #[serde(rename = "ls-kernel")]
    LsKernel,
}

impl ModelMode {
    pub fn is_kernel(&self) -> bool {
        matches!(self, ModelMode::Kernel | ModelMode::LsKernel)
    }
}

/// Hyperparameters the model was fitted with, kept for reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum HyperRecord {
    Gbtsvm(crate::gbtsvm::GbtsvmHyper),
    Lsgbtsvm(crate::lsgbtsvm::LsHyper),
}

/// A pair of nonparallel hyperplanes `(w1, b1)`, `(w2, b2)`. In the kernel
/// modes `w` holds coefficients over `centers` (the granular-ball centers the
/// model was fitted on, +1 class stacked above -1) and the plane norms are
/// feature-space norms.
#[derive(Debug, Clone)]
pub struct TwinModel {
    pub mode: ModelMode,
    pub w1: DVector<f64>,
    pub b1: f64,
    pub w2: DVector<f64>,
    pub b2: f64,
    pub centers: Option<DMatrix<f64>>,
    pub kernel: KernelSpec,
    pub hyper: HyperRecord,
    pub granulation: Option<GranulationConfig>,
    pub label_map: LabelMap,
    pub norms: [f64; 2],
    pub degenerate: [bool; 2],
}

impl TwinModel {
    /// Input dimension the model accepts.
    pub fn input_dim(&self) -> usize {
        match &self.centers {
            Some(c) => c.ncols(),
            None => self.w1.len(),
        }
    }

    /// Raw (unnormalized) plane responses `w_i·φ(x) + b_i`.
    fn responses(&self, x: &[f64]) -> Result<(f64, f64)> {
        let expected = self.input_dim();
        if x.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: x.len(),
            });
        }
        match &self.centers {
            None => {
                let dot = |w: &DVector<f64>| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                Ok((dot(&self.w1) + self.b1, dot(&self.w2) + self.b2))
            }
            Some(centers) => {
                let p = centers.nrows();
                let mut k = DVector::zeros(p);
                for s in 0..p {
                    let row: Vec<f64> = centers.row(s).iter().copied().collect();
                    k[s] = crate::kernels::kernel_eval(&self.kernel, &row, x)?;
                }
                Ok((self.w1.dot(&k) + self.b1, self.w2.dot(&k) + self.b2))
            }
        }
    }

    /// Normalized distances of `x` to the two planes; a degenerate plane
    /// reports `|b|` instead.
    pub fn decision(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (r1, r2) = self.responses(x)?;
        let d1 = if self.degenerate[0] {
            self.b1.abs()
        } else {
            r1.abs() / self.norms[0]
        };
        let d2 = if self.degenerate[1] {
            self.b2.abs()
        } else {
            r2.abs() / self.norms[1]
        };
        Ok((d1, d2))
    }

    /// Assigns the class whose plane is closer; ties go to +1.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let (d1, d2) = self.decision(x)?;
        Ok(if d1 <= d2 { 1.0 } else { -1.0 })
    }

    pub fn predict_batch(&self, features: &DMatrix<f64>) -> Result<Vec<f64>> {
        (0..features.nrows())
            .map(|i| {
                let row: Vec<f64> = features.row(i).iter().copied().collect();
                self.predict(&row)
            })
            .collect()
    }

    /// Feature-space norm of a kernel-mode coefficient vector.
    pub fn kernel_norm(
        kernel: &KernelSpec,
        centers: &DMatrix<f64>,
        coef: &DVector<f64>,
    ) -> Result<f64> {
        let k = gram(kernel, centers, centers)?;
        Ok((coef.dot(&(&k * coef))).max(0.0).sqrt())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Repr::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: Repr = serde_json::from_str(text)?;
        repr.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Serialized form; plain vectors so the JSON schema is stable.
#[derive(Serialize, Deserialize)]
struct Repr {
    mode: ModelMode,
    w1: Vec<f64>,
    b1: f64,
    w2: Vec<f64>,
    b2: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    centers: Option<Vec<Vec<f64>>>,
    kernel: KernelSpec,
    hyper: HyperRecord,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    granulation: Option<GranulationConfig>,
    label_map: LabelMap,
    norms: [f64; 2],
    degenerate: [bool; 2],
}

impl From<&TwinModel> for Repr {
    fn from(m: &TwinModel) -> Self {
        Repr {
            mode: m.mode,
            w1: m.w1.as_slice().to_vec(),
            b1: m.b1,
            w2: m.w2.as_slice().to_vec(),
            b2: m.b2,
            centers: m.centers.as_ref().map(|c| {
                (0..c.nrows())
                    .map(|i| c.row(i).iter().copied().collect())
                    .collect()
            }),
            kernel: m.kernel,
            hyper: m.hyper.clone(),
            granulation: m.granulation,
            label_map: m.label_map.clone(),
            norms: m.norms,
            degenerate: m.degenerate,
        }
    }
}

impl TryFrom<Repr> for TwinModel {
    type Error = Error;

    fn try_from(r: Repr) -> Result<Self> {
        let centers = match r.centers {
            None => None,
            Some(rows) => {
                if rows.is_empty() {
                    return Err(Error::Schema("empty center list".into()));
                }
                let m = rows[0].len();
                if rows.iter().any(|row| row.len() != m) {
                    return Err(Error::Schema("ragged center list".into()));
                }
                Some(DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]))
            }
        };
        if r.mode.is_kernel() {
            let p = centers
                .as_ref()
                .ok_or_else(|| Error::Schema("kernel model without centers".into()))?
                .nrows();
            if r.w1.len() != p || r.w2.len() != p {
                return Err(Error::Schema(
                    "kernel coefficient length does not match center count".into(),
                ));
            }
        }
        Ok(TwinModel {
            mode: r.mode,
            w1: DVector::from_vec(r.w1),
            b1: r.b1,
            w2: DVector::from_vec(r.w2),
            b2: r.b2,
            centers,
            kernel: r.kernel,
            hyper: r.hyper,
            granulation: r.granulation,
            label_map: r.label_map,
            norms: r.norms,
            degenerate: r.degenerate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbtsvm::GbtsvmHyper;
    use approx::assert_relative_eq;

    fn linear_model(w1: Vec<f64>, b1: f64, w2: Vec<f64>, b2: f64) -> TwinModel {
        let n1 = DVector::from_column_slice(&w1).norm();
        let n2 = DVector::from_column_slice(&w2).norm();
        TwinModel {
            mode: ModelMode::Linear,
            w1: DVector::from_vec(w1),
            b1,
            w2: DVector::from_vec(w2),
            b2,
            centers: None,
            kernel: KernelSpec::Linear,
            hyper: HyperRecord::Gbtsvm(GbtsvmHyper::default()),
            granulation: None,
            label_map: LabelMap::default(),
            norms: [n1.max(DEGENERATE_NORM), n2.max(DEGENERATE_NORM)],
            degenerate: [n1 < DEGENERATE_NORM, n2 < DEGENERATE_NORM],
        }
    }

    #[test]
    fn decision_reports_both_plane_distances() {
        let m = linear_model(vec![1.0, 0.0], 0.0, vec![0.0, 1.0], 0.0);
        let (d1, d2) = m.decision(&[0.0, 5.0]).unwrap();
        assert_relative_eq!(d1, 0.0);
        assert_relative_eq!(d2, 5.0);
        assert_eq!(m.predict(&[0.0, 5.0]).unwrap(), 1.0);
    }

    #[test]
    fn point_on_plane_has_zero_distance() {
        let m = linear_model(vec![1.0, 1.0], -2.0, vec![1.0, -1.0], 0.0);
        let (d1, _) = m.decision(&[1.0, 1.0]).unwrap();
        assert_relative_eq!(d1, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn decision_is_invariant_under_plane_rescaling() {
        let a = linear_model(vec![1.0, 2.0], -0.5, vec![-1.0, 0.5], 0.25);
        let b = linear_model(vec![10.0, 20.0], -5.0, vec![-1.0, 0.5], 0.25);
        let x = [0.3, -0.7];
        let (a1, a2) = a.decision(&x).unwrap();
        let (b1, b2) = b.decision(&x).unwrap();
        assert_relative_eq!(a1, b1, epsilon = 1e-12);
        assert_relative_eq!(a2, b2, epsilon = 1e-12);
        assert_eq!(a.predict(&x).unwrap(), b.predict(&x).unwrap());
    }

    #[test]
    fn equidistant_point_predicts_positive() {
        let m = linear_model(vec![1.0, 0.0], 0.0, vec![0.0, 1.0], 0.0);
        assert_eq!(m.predict(&[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn batch_predict_matches_single() {
        let m = linear_model(vec![1.0, -1.0], 0.1, vec![0.5, 1.0], -0.3);
        let feats = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, -1.0, 0.5, 2.0]);
        let batch = m.predict_batch(&feats).unwrap();
        for i in 0..3 {
            let row: Vec<f64> = feats.row(i).iter().copied().collect();
            assert_eq!(batch[i], m.predict(&row).unwrap());
        }
    }

    #[test]
    fn degenerate_plane_falls_back_to_bias() {
        let mut m = linear_model(vec![0.0, 0.0], 2.0, vec![1.0, 0.0], 0.0);
        m.degenerate[0] = true;
        let (d1, _) = m.decision(&[3.0, 4.0]).unwrap();
        assert_relative_eq!(d1, 2.0);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let m = linear_model(
            vec![0.1 + 0.2, -1.0 / 3.0],
            1e-17,
            vec![2.0f64.sqrt(), 1.0],
            -0.75,
        );
        let text = m.to_json().unwrap();
        let back = TwinModel::from_json(&text).unwrap();
        assert_eq!(m.w1.as_slice(), back.w1.as_slice());
        assert_eq!(m.b1.to_bits(), back.b1.to_bits());
        let x = [0.123456789, -9.87654321];
        let (a1, a2) = m.decision(&x).unwrap();
        let (b1, b2) = back.decision(&x).unwrap();
        assert_eq!(a1.to_bits(), b1.to_bits());
        assert_eq!(a2.to_bits(), b2.to_bits());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = linear_model(vec![1.0, 0.0], 0.0, vec![0.0, 1.0], 0.0);
        assert!(m.decision(&[1.0]).is_err());
    }
}
