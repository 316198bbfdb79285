//! Kernel functions and Gram-matrix assembly for the nonlinear variants.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Gaussian { sigma: f64 },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidConfig("sigma must be positive".into()));
        }
        Ok(Self::Gaussian { sigma })
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Self::Gaussian { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Linear => Ok(()),
            Self::Gaussian { sigma } if *sigma > 0.0 => Ok(()),
            Self::Gaussian { .. } => Err(Error::InvalidConfig("sigma must be positive".into())),
        }
    }
}

/// `K(x, y)`: the inner product for the linear kernel,
/// `exp(-‖x-y‖² / (2σ²))` for the Gaussian kernel.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(eval_unchecked(spec, x, y))
}

#[inline]
fn eval_unchecked(spec: &KernelSpec, x: &[f64], y: &[f64]) -> f64 {
    match spec {
        KernelSpec::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
        KernelSpec::Gaussian { sigma } => {
            let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            (-sq / (2.0 * sigma * sigma)).exp()
        }
    }
}

/// Pairwise kernel matrix with entry `(i, j) = K(X_i, Y_j)`. Rows are
/// evaluated in parallel; the result does not depend on the schedule.
pub fn gram(spec: &KernelSpec, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: y.ncols(),
        });
    }
    let (p, q, m) = (x.nrows(), y.nrows(), x.ncols());
    let xr: Vec<f64> = row_major(x);
    let yr: Vec<f64> = row_major(y);
    let mut out = vec![0.0; p * q];
    out.par_chunks_mut(q).enumerate().for_each(|(i, row)| {
        let xi = &xr[i * m..(i + 1) * m];
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = eval_unchecked(spec, xi, &yr[j * m..(j + 1) * m]);
        }
    });
    Ok(DMatrix::from_row_slice(p, q, &out))
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        out.extend(m.row(i).iter().copied());
    }
    out
}
