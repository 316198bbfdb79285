//! LS-GBTSVM: the regularized twin formulation whose duals need no matrix
//! inversion. Each dual couples a free multiplier block (from the equality
//! constraint) with a box-constrained block and is solved by the same
//! coordinate sweep as everything else; the planes then fall out of the
//! stationarity conditions directly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbtsvm::{assemble_linear, Assembled};
use crate::granulation::GranulationResult;
use crate::kernels::{gram, KernelSpec};
use crate::model::{HyperRecord, ModelMode, TwinModel, DEGENERATE_NORM};
use crate::numerics::{solve_box_qp, BoxQp, QpSolution, SolverConfig, SweepOrder};

/// Sweep-order variant used for the dual solves. Both reach the same fixed
/// points; `Sor` is the canonical in-order sweep, `Generic` visits
/// coordinates in a seeded random order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Generic,
    Sor,
}

const GENERIC_SWEEP_SEED: u64 = 0x6b8b_4567_327b_23c6;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LsHyper {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub solver: SolverConfig,
    pub kernel: KernelSpec,
    pub solver_kind: SolverKind,
}

impl Default for LsHyper {
    fn default() -> Self {
        Self {
            d1: 1.0,
            d2: 1.0,
            d3: 1.0,
            d4: 1.0,
            solver: SolverConfig::default(),
            kernel: KernelSpec::Linear,
            solver_kind: SolverKind::Sor,
        }
    }
}

impl LsHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.d1 > 0.0 && self.d2 > 0.0 && self.d3 > 0.0 && self.d4 > 0.0) {
            return Err(Error::InvalidConfig("d1..d4 must be positive".into()));
        }
        self.solver.validate()?;
        self.kernel.validate()
    }

    fn sweep(&self) -> SweepOrder {
        match self.solver_kind {
            SolverKind::Sor => SweepOrder::Canonical,
            SolverKind::Generic => SweepOrder::Shuffled {
                seed: GENERIC_SWEEP_SEED,
            },
        }
    }
}

/// One assembled dual: a `(pa + pb) × (pa + pb)` quadratic block over the
/// free multiplier block (length `pa`) stacked above the boxed block
/// (length `pb`), its linear term, and the box bounds.
#[derive(Debug, Clone)]
pub struct LsDual {
    pub matrix: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    /// Length of the free block.
    pub free_len: usize,
}

impl LsDual {
    pub fn into_box_qp(self) -> Result<BoxQp> {
        BoxQp::new(self.matrix, self.linear, self.lower, self.upper)
    }
}

/// Dual of the +1-plane problem:
/// `min ½ (α₁ᵀ β₁ᵀ) P̃ (α₁; β₁) − d₃ β₁ᵀ(e₂ + R₂)` with `0 ≤ β₁ ≤ d₁` and
/// `P̃ = [[C₁C₁ᵀ + d₃I, C₁C₂ᵀ], [C₂C₁ᵀ, C₂C₂ᵀ]] + E` (`E` all ones). Kernel
/// mode swaps each `CᵢCⱼᵀ` for the corresponding Gram block.
pub fn assemble_dual_pos(balls: &GranulationResult, hyper: &LsHyper) -> Result<LsDual> {
    let asm = assemble_linear(balls)?;
    assemble_dual(
        &asm.pos_centers,
        &asm.neg_centers,
        &asm.r2,
        hyper.d3,
        hyper.d1,
        &hyper.kernel,
    )
}

/// Mirror dual for the -1 plane (`Q̃`, `d₄`, `R₁`, cap `d₂`).
pub fn assemble_dual_neg(balls: &GranulationResult, hyper: &LsHyper) -> Result<LsDual> {
    let asm = assemble_linear(balls)?;
    assemble_dual(
        &asm.neg_centers,
        &asm.pos_centers,
        &asm.r1,
        hyper.d4,
        hyper.d2,
        &hyper.kernel,
    )
}

fn assemble_dual(
    own: &DMatrix<f64>,
    other: &DMatrix<f64>,
    other_radii: &DVector<f64>,
    ridge: f64,
    cap: f64,
    kernel: &KernelSpec,
) -> Result<LsDual> {
    let (pa, pb) = (own.nrows(), other.nrows());
    let k = pa + pb;
    let own_own = gram(kernel, own, own)?;
    let own_other = gram(kernel, own, other)?;
    let other_other = gram(kernel, other, other)?;
    let mut matrix = DMatrix::zeros(k, k);
    for i in 0..pa {
        for j in 0..pa {
            matrix[(i, j)] = own_own[(i, j)];
        }
        matrix[(i, i)] += ridge;
        for j in 0..pb {
            matrix[(i, pa + j)] = own_other[(i, j)];
            matrix[(pa + j, i)] = own_other[(i, j)];
        }
    }
    for i in 0..pb {
        for j in 0..pb {
            matrix[(pa + i, pa + j)] = other_other[(i, j)];
        }
    }
    matrix.add_scalar_mut(1.0); // + E

    let mut linear = DVector::zeros(k);
    let mut lower = DVector::from_element(k, f64::NEG_INFINITY);
    let mut upper = DVector::from_element(k, f64::INFINITY);
    for i in 0..pb {
        linear[pa + i] = -ridge * (1.0 + other_radii[i]);
        lower[pa + i] = 0.0;
        upper[pa + i] = cap;
    }
    Ok(LsDual {
        matrix,
        linear,
        lower,
        upper,
        free_len: pa,
    })
}

#[derive(Debug)]
pub struct LsFitDetail {
    pub model: TwinModel,
    pub dual_pos: QpSolution,
    pub dual_neg: QpSolution,
    /// `‖d₃w₁ + C₁ᵀα₁ + C₂ᵀβ₁‖` and its mirror, recomputed after recovery.
    pub stationarity: [f64; 2],
}

pub fn fit(balls: &GranulationResult, hyper: &LsHyper) -> Result<TwinModel> {
    Ok(fit_detailed(balls, hyper)?.model)
}

/// Solves both duals and recovers the planes from the stationarity
/// conditions: `w₁ = -(C₁ᵀα₁ + C₂ᵀβ₁)/d₃`, `b₁ = -(e₁ᵀα₁ + e₂ᵀβ₁)/d₃`, and
/// the mirrored sign for the second plane. No SPD solve happens anywhere on
/// this path.
pub fn fit_detailed(balls: &GranulationResult, hyper: &LsHyper) -> Result<LsFitDetail> {
    hyper.validate()?;
    let asm = assemble_linear(balls)?;
    let solver = SolverConfig {
        sweep: hyper.sweep(),
        ..hyper.solver
    };

    let (side_pos, side_neg) = rayon::join(
        || solve_side(balls, hyper, true, &solver),
        || solve_side(balls, hyper, false, &solver),
    );
    let sol_pos = side_pos?;
    let sol_neg = side_neg?;

    let (p1, p2) = (asm.pos_centers.nrows(), asm.neg_centers.nrows());
    let x1 = sol_pos.x_vector();
    let (alpha1, beta1) = (x1.rows(0, p1).into_owned(), x1.rows(p1, p2).into_owned());
    let x2 = sol_neg.x_vector();
    let (alpha2, beta2) = (x2.rows(0, p2).into_owned(), x2.rows(p2, p1).into_owned());

    let bias1 = -(alpha1.sum() + beta1.sum()) / hyper.d3;
    let bias2 = (alpha2.sum() + beta2.sum()) / hyper.d4;

    let model = match hyper.kernel {
        KernelSpec::Linear => {
            let w1 = -(asm.pos_centers.transpose() * &alpha1
                + asm.neg_centers.transpose() * &beta1)
                / hyper.d3;
            let w2 = (asm.neg_centers.transpose() * &alpha2 + asm.pos_centers.transpose() * &beta2)
                / hyper.d4;
            let residuals = [
                stationarity_residual(&asm, &w1, &alpha1, &beta1, hyper.d3, true),
                stationarity_residual(&asm, &w2, &alpha2, &beta2, hyper.d4, false),
            ];
            assert!(
                residuals.iter().all(|&r| r <= 1e-8),
                "stationarity residuals {residuals:?} exceed 1e-8"
            );
            let (n1, n2) = (w1.norm(), w2.norm());
            LsFitDetail {
                model: TwinModel {
                    mode: ModelMode::LsLinear,
                    w1,
                    b1: bias1,
                    w2,
                    b2: bias2,
                    centers: None,
                    kernel: KernelSpec::Linear,
                    hyper: HyperRecord::Lsgbtsvm(*hyper),
                    granulation: None,
                    label_map: Default::default(),
                    norms: [n1.max(DEGENERATE_NORM), n2.max(DEGENERATE_NORM)],
                    degenerate: [n1 < DEGENERATE_NORM, n2 < DEGENERATE_NORM],
                },
                dual_pos: sol_pos,
                dual_neg: sol_neg,
                stationarity: residuals,
            }
        }
        KernelSpec::Gaussian { .. } => {
            // coefficients over the stacked centers [C1; C2]
            let stacked = asm.stacked_centers();
            let mut coef1 = DVector::zeros(p1 + p2);
            let mut coef2 = DVector::zeros(p1 + p2);
            for i in 0..p1 {
                coef1[i] = -alpha1[i] / hyper.d3;
                coef2[i] = beta2[i] / hyper.d4;
            }
            for i in 0..p2 {
                coef1[p1 + i] = -beta1[i] / hyper.d3;
                coef2[p1 + i] = alpha2[i] / hyper.d4;
            }
            let n1 = TwinModel::kernel_norm(&hyper.kernel, &stacked, &coef1)?;
            let n2 = TwinModel::kernel_norm(&hyper.kernel, &stacked, &coef2)?;
            LsFitDetail {
                model: TwinModel {
                    mode: ModelMode::LsKernel,
                    w1: coef1,
                    b1: bias1,
                    w2: coef2,
                    b2: bias2,
                    centers: Some(stacked),
                    kernel: hyper.kernel,
                    hyper: HyperRecord::Lsgbtsvm(*hyper),
                    granulation: None,
                    label_map: Default::default(),
                    norms: [n1.max(DEGENERATE_NORM), n2.max(DEGENERATE_NORM)],
                    degenerate: [n1 < DEGENERATE_NORM, n2 < DEGENERATE_NORM],
                },
                dual_pos: sol_pos,
                dual_neg: sol_neg,
                stationarity: [0.0, 0.0],
            }
        }
    };
    Ok(model)
}

fn solve_side(
    balls: &GranulationResult,
    hyper: &LsHyper,
    positive: bool,
    solver: &SolverConfig,
) -> Result<QpSolution> {
    let dual = if positive {
        assemble_dual_pos(balls, hyper)?
    } else {
        assemble_dual_neg(balls, hyper)?
    };
    let (qp, jitter) = dual.into_box_qp()?.with_psd_jitter();
    let mut sol = solve_box_qp(&qp, solver)?;
    sol.jitter = jitter;
    Ok(sol)
}

fn stationarity_residual(
    asm: &Assembled,
    w: &DVector<f64>,
    alpha: &DVector<f64>,
    beta: &DVector<f64>,
    ridge: f64,
    positive: bool,
) -> f64 {
    let (own, other) = if positive {
        (&asm.pos_centers, &asm.neg_centers)
    } else {
        (&asm.neg_centers, &asm.pos_centers)
    };
    let sign = if positive { 1.0 } else { -1.0 };
    (w * ridge * sign + own.transpose() * alpha + other.transpose() * beta).norm()
}
