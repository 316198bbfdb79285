//! GBTSVM: twin-hyperplane training over granular balls by solving the two
//! box-constrained Wolfe duals, in input space or through a kernel.
//!
//! The first plane stays close to +1 ball centers while the -1 balls are
//! pushed at least `1 + radius` away; the second plane mirrors the roles.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::granulation::GranulationResult;
use crate::kernels::{gram, KernelSpec};
use crate::model::{HyperRecord, ModelMode, TwinModel, DEGENERATE_NORM};
use crate::numerics::{solve_box_qp, solve_spd, BoxQp, QpSolution, SolverConfig};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GbtsvmHyper {
    pub d1: f64,
    pub d2: f64,
    /// Ridge added to the squared design blocks before solving.
    pub delta: f64,
    pub solver: SolverConfig,
    pub kernel: KernelSpec,
}

impl Default for GbtsvmHyper {
    fn default() -> Self {
        Self {
            d1: 1.0,
            d2: 1.0,
            delta: 1e-6,
            solver: SolverConfig::default(),
            kernel: KernelSpec::Linear,
        }
    }
}

impl GbtsvmHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.d1 > 0.0 && self.d2 > 0.0 && self.delta > 0.0) {
            return Err(Error::InvalidConfig(
                "d1, d2 and delta must be positive".into(),
            ));
        }
        self.solver.validate()?;
        self.kernel.validate()
    }
}

/// Ball-set matrices: `H = (C1 e1)`, `G = (C2 e2)` plus the per-class center
/// and radius blocks in matching row order.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub h: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub r1: DVector<f64>,
    pub r2: DVector<f64>,
    pub pos_centers: DMatrix<f64>,
    pub neg_centers: DMatrix<f64>,
}

impl Assembled {
    pub fn stacked_centers(&self) -> DMatrix<f64> {
        let (p1, p2, m) = (
            self.pos_centers.nrows(),
            self.neg_centers.nrows(),
            self.pos_centers.ncols(),
        );
        DMatrix::from_fn(p1 + p2, m, |i, j| {
            if i < p1 {
                self.pos_centers[(i, j)]
            } else {
                self.neg_centers[(i - p1, j)]
            }
        })
    }
}

/// Splits balls by class and appends the bias column of ones.
pub fn assemble_linear(balls: &GranulationResult) -> Result<Assembled> {
    let (p1, p2) = balls.class_counts();
    if p1 == 0 || p2 == 0 {
        return Err(Error::DegenerateData(
            "ball set does not contain both classes".into(),
        ));
    }
    let m = balls.balls[0].center.len();
    let mut pos_centers = DMatrix::zeros(p1, m);
    let mut neg_centers = DMatrix::zeros(p2, m);
    let mut r1 = DVector::zeros(p1);
    let mut r2 = DVector::zeros(p2);
    let (mut ip, mut ineg) = (0, 0);
    for ball in &balls.balls {
        if ball.label > 0.0 {
            for j in 0..m {
                pos_centers[(ip, j)] = ball.center[j];
            }
            r1[ip] = ball.radius;
            ip += 1;
        } else {
            for j in 0..m {
                neg_centers[(ineg, j)] = ball.center[j];
            }
            r2[ineg] = ball.radius;
            ineg += 1;
        }
    }
    Ok(Assembled {
        h: append_ones(&pos_centers),
        g: append_ones(&neg_centers),
        r1,
        r2,
        pos_centers,
        neg_centers,
    })
}

fn append_ones(centers: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, m) = centers.shape();
    DMatrix::from_fn(p, m + 1, |i, j| if j < m { centers[(i, j)] } else { 1.0 })
}

/// Fit plus the dual solutions, for callers that inspect the multipliers.
#[derive(Debug)]
pub struct FitDetail {
    pub model: TwinModel,
    pub alpha: QpSolution,
    pub gamma: QpSolution,
}

/// Dispatches on the configured kernel.
pub fn fit(balls: &GranulationResult, hyper: &GbtsvmHyper) -> Result<TwinModel> {
    match hyper.kernel {
        KernelSpec::Linear => fit_linear(balls, hyper),
        KernelSpec::Gaussian { .. } => fit_kernel(balls, hyper),
    }
}

pub fn fit_linear(balls: &GranulationResult, hyper: &GbtsvmHyper) -> Result<TwinModel> {
    Ok(fit_linear_detailed(balls, hyper)?.model)
}

pub fn fit_linear_detailed(balls: &GranulationResult, hyper: &GbtsvmHyper) -> Result<FitDetail> {
    hyper.validate()?;
    let asm = assemble_linear(balls)?;
    let m = asm.pos_centers.ncols();

    // the two duals share only read-only inputs
    let (side1, side2) = rayon::join(
        || {
            dual_plane(
                &asm.h,
                &asm.g,
                &asm.r2,
                hyper.delta,
                hyper.d1,
                &hyper.solver,
            )
        },
        || {
            dual_plane(
                &asm.g,
                &asm.h,
                &asm.r1,
                hyper.delta,
                hyper.d2,
                &hyper.solver,
            )
        },
    );
    let (u1, alpha) = side1?;
    let (u2, gamma) = side2?;
    let u1 = -u1;

    let w1 = DVector::from_iterator(m, u1.iter().take(m).copied());
    let w2 = DVector::from_iterator(m, u2.iter().take(m).copied());
    let (n1, n2) = (w1.norm(), w2.norm());
    let model = TwinModel {
        mode: ModelMode::Linear,
        b1: u1[m],
        b2: u2[m],
        w1,
        w2,
        centers: None,
        kernel: KernelSpec::Linear,
        hyper: HyperRecord::Gbtsvm(*hyper),
        granulation: None,
        label_map: Default::default(),
        norms: [n1.max(DEGENERATE_NORM), n2.max(DEGENERATE_NORM)],
        degenerate: [n1 < DEGENERATE_NORM, n2 < DEGENERATE_NORM],
    };
    Ok(FitDetail {
        model,
        alpha,
        gamma,
    })
}

/// Solves `max_λ λᵀ(e + r) - ½ λᵀ B (AᵀA + δI)⁻¹ Bᵀ λ` over `0 ≤ λ ≤ cap` as
/// a box-QP in minimization form and recovers `(AᵀA + δI)⁻¹ Bᵀ λ`.
fn dual_plane(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    radii: &DVector<f64>,
    delta: f64,
    cap: f64,
    solver: &SolverConfig,
) -> Result<(DVector<f64>, QpSolution)> {
    let dim = a.ncols();
    let mut ata = a.transpose() * a;
    for i in 0..dim {
        ata[(i, i)] += delta;
    }
    let solved = solve_spd(&ata, &b.transpose())?; // (AᵀA + δI)⁻¹ Bᵀ
    let mut q = b * &solved;
    q = (&q + q.transpose()) * 0.5;
    let k = q.nrows();
    let c = DVector::from_fn(k, |i, _| -(1.0 + radii[i]));
    let qp = BoxQp::new(q, c, DVector::zeros(k), DVector::from_element(k, cap))?;
    let sol = solve_box_qp(&qp, solver)?;
    let multipliers = sol.x_vector();
    Ok((&solved * &multipliers, sol))
}

pub fn fit_kernel(balls: &GranulationResult, hyper: &GbtsvmHyper) -> Result<TwinModel> {
    Ok(fit_kernel_detailed(balls, hyper)?.model)
}

/// Kernelized fit. Balls are granulated in input space; only the classifier
/// moves to feature space, with every design block assembled from Gram
/// matrices over the stacked ball centers.
pub fn fit_kernel_detailed(balls: &GranulationResult, hyper: &GbtsvmHyper) -> Result<FitDetail> {
    hyper.validate()?;
    let asm = assemble_linear(balls)?;
    let stacked = asm.stacked_centers();
    let p = stacked.nrows();

    let f = append_ones(&gram(&hyper.kernel, &asm.pos_centers, &stacked)?);
    let e = append_ones(&gram(&hyper.kernel, &asm.neg_centers, &stacked)?);

    let (side1, side2) = rayon::join(
        || dual_plane(&f, &e, &asm.r2, hyper.delta, hyper.d1, &hyper.solver),
        || dual_plane(&e, &f, &asm.r1, hyper.delta, hyper.d2, &hyper.solver),
    );
    let (u1, alpha) = side1?;
    let (u2, gamma) = side2?;
    let u1 = -u1;

    let coef1 = DVector::from_iterator(p, u1.iter().take(p).copied());
    let coef2 = DVector::from_iterator(p, u2.iter().take(p).copied());
    let n1 = TwinModel::kernel_norm(&hyper.kernel, &stacked, &coef1)?;
    let n2 = TwinModel::kernel_norm(&hyper.kernel, &stacked, &coef2)?;
    let model = TwinModel {
        mode: ModelMode::Kernel,
        b1: u1[p],
        b2: u2[p],
        w1: coef1,
        w2: coef2,
        centers: Some(stacked),
        kernel: hyper.kernel,
        hyper: HyperRecord::Gbtsvm(*hyper),
        granulation: None,
        label_map: Default::default(),
        norms: [n1.max(DEGENERATE_NORM), n2.max(DEGENERATE_NORM)],
        degenerate: [n1 < DEGENERATE_NORM, n2 < DEGENERATE_NORM],
    };
    Ok(FitDetail {
        model,
        alpha,
        gamma,
    })
}

/// Hinge slacks of the fitted planes against the ball constraints:
/// `ξ2 = max(0, e2 + R2 + (C2 w1 + e2 b1))` for -1 balls against plane 1 and
/// the mirror for +1 balls against plane 2. Linear modes only.
pub fn slacks(
    model: &TwinModel,
    balls: &GranulationResult,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if model.mode.is_kernel() {
        return Err(Error::Unsupported(
            "slack recovery is defined for linear models only".into(),
        ));
    }
    let asm = assemble_linear(balls)?;
    let resp2 = &asm.neg_centers * &model.w1;
    let xi2 = DVector::from_fn(asm.neg_centers.nrows(), |i, _| {
        (1.0 + asm.r2[i] + resp2[i] + model.b1).max(0.0)
    });
    let resp1 = &asm.pos_centers * &model.w2;
    let xi1 = DVector::from_fn(asm.pos_centers.nrows(), |i, _| {
        (1.0 + asm.r1[i] - (resp1[i] + model.b2)).max(0.0)
    });
    Ok((xi1, xi2))
}
