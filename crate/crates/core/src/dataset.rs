//! Binary-classification dataset ingestion, normalization, splitting,
//! label-noise injection, and synthetic generation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// How raw label values were folded onto {+1, -1}. The greater raw value
/// (numerically when both sides parse as numbers, lexicographically
/// otherwise) maps to +1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub positive: String,
    pub negative: String,
}

impl Default for LabelMap {
    fn default() -> Self {
        Self {
            positive: "1".into(),
            negative: "-1".into(),
        }
    }
}

impl LabelMap {
    /// Raw string for a ±1 label.
    pub fn raw(&self, label: f64) -> &str {
        if label > 0.0 {
            &self.positive
        } else {
            &self.negative
        }
    }
}

/// Labeled sample matrix with ±1 labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: DVector<f64>,
    pub feature_names: Option<Vec<String>>,
    pub label_map: LabelMap,
}

impl Dataset {
    pub fn new(
        features: DMatrix<f64>,
        labels: DVector<f64>,
        feature_names: Option<Vec<String>>,
        label_map: LabelMap,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|&t| t != 1.0 && t != -1.0) {
            return Err(Error::Schema("labels must be exactly +1 or -1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: None,
                message: "non-finite feature value".into(),
            });
        }
        if let Some(names) = &feature_names {
            if names.len() != features.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: features.ncols(),
                    got: names.len(),
                });
            }
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            label_map,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn m(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&t| t > 0.0).count();
        (pos, self.n() - pos)
    }

    pub fn has_both_classes(&self) -> bool {
        let (pos, neg) = self.class_counts();
        pos > 0 && neg > 0
    }

    /// Subset by row indices; indices must be in range.
    pub fn select(&self, indices: &[usize]) -> Self {
        let m = self.m();
        let mut feats = DMatrix::zeros(indices.len(), m);
        let mut labels = DVector::zeros(indices.len());
        for (r, &i) in indices.iter().enumerate() {
            feats.row_mut(r).copy_from(&self.features.row(i));
            labels[r] = self.labels[i];
        }
        Self {
            features: feats,
            labels,
            feature_names: self.feature_names.clone(),
            label_map: self.label_map.clone(),
        }
    }

    pub fn with_labels(&self, labels: DVector<f64>) -> Result<Self> {
        Self::new(
            self.features.clone(),
            labels,
            self.feature_names.clone(),
            self.label_map.clone(),
        )
    }
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Last,
}

/// Loads a CSV of numeric features and a two-valued label column. The
/// greater label value maps to +1 and the mapping is recorded on the
/// returned dataset.
pub fn load_csv(path: &Path, label_column: LabelColumn, has_header: bool) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    let mut header: Option<Vec<String>> = None;
    if has_header {
        match lines.next() {
            Some(line) => header = Some(split_csv(&line?)),
            None => {
                return Err(Error::Parse {
                    row: None,
                    message: "empty file".into(),
                })
            }
        }
    }

    let mut width: Option<usize> = None;
    let mut raw_labels: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row_no = idx + 1;
        let fields = split_csv(&line);
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Parse {
                    row: Some(row_no),
                    message: format!("expected {w} fields, found {}", fields.len()),
                })
            }
            _ => {}
        }
        let w = width.unwrap();
        if w < 2 {
            return Err(Error::Schema(
                "rows need at least one feature and a label".into(),
            ));
        }
        let label_idx = match label_column {
            LabelColumn::Last => w - 1,
            LabelColumn::Index(i) if i < w => i,
            LabelColumn::Index(i) => {
                return Err(Error::Schema(format!(
                    "label column {i} out of range for {w} fields"
                )))
            }
        };
        let mut feats = Vec::with_capacity(w - 1);
        for (j, field) in fields.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(field.trim().to_string());
                continue;
            }
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                row: Some(row_no),
                message: format!("non-numeric feature value {:?} in column {j}", field.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: Some(row_no),
                    message: format!("non-finite feature value in column {j}"),
                });
            }
            feats.push(v);
        }
        rows.push(feats);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            row: None,
            message: "no data rows".into(),
        });
    }

    let mut distinct: Vec<String> = raw_labels.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.len() == 1 {
        return Err(Error::DegenerateData(format!(
            "label column holds a single class ({:?})",
            distinct[0]
        )));
    }
    if distinct.len() != 2 {
        return Err(Error::Schema(format!(
            "label column must hold exactly two distinct values, found {}",
            distinct.len()
        )));
    }
    let label_map = order_labels(&distinct[0], &distinct[1]);

    let m = rows[0].len();
    let features = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
    let labels = DVector::from_iterator(
        raw_labels.len(),
        raw_labels
            .iter()
            .map(|r| if *r == label_map.positive { 1.0 } else { -1.0 }),
    );
    let feature_names = header.map(|h| {
        let label_idx = match label_column {
            LabelColumn::Last => h.len().saturating_sub(1),
            LabelColumn::Index(i) => i,
        };
        h.into_iter()
            .enumerate()
            .filter(|(j, _)| *j != label_idx)
            .map(|(_, name)| name)
            .collect()
    });
    Dataset::new(features, labels, feature_names, label_map)
}

fn split_csv(line: &str) -> Vec<String> {
    line.split(',').map(|s| s.to_string()).collect()
}

fn order_labels(a: &str, b: &str) -> LabelMap {
    let greater = match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x > y,
        _ => a > b,
    };
    if greater {
        LabelMap {
            positive: a.to_string(),
            negative: b.to_string(),
        }
    } else {
        LabelMap {
            positive: b.to_string(),
            negative: a.to_string(),
        }
    }
}

/// Writes the dataset back out with labels mapped to their raw values.
pub fn write_csv(d: &Dataset, path: &Path, header: bool) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    if header {
        let names: Vec<String> = match &d.feature_names {
            Some(n) => n.clone(),
            None => (0..d.m()).map(|j| format!("f{j}")).collect(),
        };
        writeln!(out, "{},label", names.join(","))?;
    }
    for i in 0..d.n() {
        for j in 0..d.m() {
            write!(out, "{},", d.features()[(i, j)])?;
        }
        writeln!(out, "{}", d.label_map.raw(d.label(i)))?;
    }
    Ok(())
}

/// Per-feature affine ranges captured on training data so the identical
/// transform can be replayed on test data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl NormalizationRecord {
    pub fn apply_value(&self, j: usize, v: f64) -> f64 {
        let (lo, hi) = (self.mins[j], self.maxs[j]);
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        if self.mins.len() != d.m() {
            return Err(Error::DimensionMismatch {
                expected: self.mins.len(),
                got: d.m(),
            });
        }
        let feats = DMatrix::from_fn(d.n(), d.m(), |i, j| {
            self.apply_value(j, d.features()[(i, j)])
        });
        Dataset::new(
            feats,
            d.labels().clone(),
            d.feature_names.clone(),
            d.label_map.clone(),
        )
    }
}

/// Min-max normalization of every feature column to [0, 1]; constant columns
/// map to 0.
pub fn minmax_normalize(d: &Dataset) -> (Dataset, NormalizationRecord) {
    let m = d.m();
    let mut mins = vec![f64::INFINITY; m];
    let mut maxs = vec![f64::NEG_INFINITY; m];
    for j in 0..m {
        for i in 0..d.n() {
            let v = d.features()[(i, j)];
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    let record = NormalizationRecord { mins, maxs };
    let normalized = record.apply(d).expect("dimensions match by construction");
    (normalized, record)
}

/// Deterministic random split into `round(train_fraction · n)` training rows
/// and the remainder.
pub fn train_test_split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(
            "train_fraction must lie strictly between 0 and 1".into(),
        ));
    }
    let n = d.n();
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut train_idx = indices[..n_train].to_vec();
    let mut test_idx = indices[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let train = d.select(&train_idx);
    if !train.has_both_classes() {
        return Err(Error::DegenerateData(
            "training split is missing a class".into(),
        ));
    }
    Ok((train, d.select(&test_idx)))
}

/// Label-noise specification: flip `round(rate · n)` labels chosen without
/// replacement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub rate: f64,
    pub seed: u64,
}

pub fn inject_label_noise(d: &Dataset, spec: &NoiseSpec) -> Result<Dataset> {
    if !(0.0..=0.5).contains(&spec.rate) {
        return Err(Error::InvalidConfig(
            "noise rate must lie in [0, 0.5]".into(),
        ));
    }
    let n = d.n();
    let flips = (spec.rate * n as f64).round() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let chosen = rand::seq::index::sample(&mut rng, n, flips);
    let mut labels = d.labels().clone();
    for i in chosen.iter() {
        labels[i] = -labels[i];
    }
    d.with_labels(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Class-conditional Gaussians folded away from a random hyperplane so
    /// the classes are exactly `separation` apart along its normal.
    LinearMargin,
    /// Two crossing linear bands, one class per band. `separation` is
    /// ignored.
    Crossplane,
    /// Alternating-label tiles over the first two features. `separation`
    /// and `class_balance` are ignored.
    Checkerboard,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub m: usize,
    pub kind: SynthKind,
    pub class_balance: f64,
    pub separation: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig("n must be at least 2".into()));
        }
        if self.m < 1 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if !(self.class_balance > 0.0 && self.class_balance < 1.0) {
            return Err(Error::InvalidConfig(
                "class_balance must lie strictly between 0 and 1".into(),
            ));
        }
        if !(self.separation >= 0.0) {
            return Err(Error::InvalidConfig(
                "separation must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

const BAND_NOISE: f64 = 0.02;
const BAND_CORE_GAP: f64 = 0.1;

/// Deterministic synthetic dataset generation; see [`SynthKind`] for the
/// three families.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let (n, m) = (spec.n, spec.m);
    let n_pos = ((spec.class_balance * n as f64).round() as usize).clamp(1, n - 1);

    let mut labels: Vec<f64> = (0..n).map(|i| if i < n_pos { 1.0 } else { -1.0 }).collect();
    labels.shuffle(&mut rng);

    let mut feats = DMatrix::zeros(n, m);
    match spec.kind {
        SynthKind::LinearMargin => {
            let mut w: Vec<f64> = (0..m)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            w.iter_mut().for_each(|v| *v /= norm);
            for i in 0..n {
                let z: Vec<f64> = (0..m)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let along: f64 = z.iter().zip(&w).map(|(a, b)| a * b).sum();
                let offset = labels[i] * (spec.separation / 2.0 + along.abs());
                for j in 0..m {
                    feats[(i, j)] = z[j] - along * w[j] + offset * w[j];
                }
            }
        }
        SynthKind::Crossplane => {
            // two lines through the origin at ±30° from a random base angle
            let base: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            let angle = |label: f64| base + label * std::f64::consts::FRAC_PI_6;
            for i in 0..n {
                let a = angle(labels[i]);
                let dir: Vec<f64> = if m == 1 {
                    vec![a.cos().signum()]
                } else {
                    let mut d = vec![0.0; m];
                    d[0] = a.cos();
                    d[1] = a.sin();
                    d
                };
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let t = sign * (BAND_CORE_GAP + (1.0 - BAND_CORE_GAP) * rng.gen::<f64>());
                for j in 0..m {
                    feats[(i, j)] = t * dir[j] + BAND_NOISE * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        SynthKind::Checkerboard => {
            let tiles = 4usize;
            for i in 0..n {
                for j in 0..m {
                    feats[(i, j)] = rng.gen::<f64>();
                }
                let cx = ((feats[(i, 0)] * tiles as f64) as usize).min(tiles - 1);
                let cy = if m > 1 {
                    ((feats[(i, 1)] * tiles as f64) as usize).min(tiles - 1)
                } else {
                    0
                };
                labels[i] = if (cx + cy).is_multiple_of(2) { 1.0 } else { -1.0 };
            }
        }
    }
    Dataset::new(feats, DVector::from_vec(labels), None, LabelMap::default())
}
