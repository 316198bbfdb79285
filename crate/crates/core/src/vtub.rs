//! Violation-tolerance upper bounds: for two same-class balls `i`, `j` the
//! slack estimates of the fitted twin planes differ by at most
//! `Δ²(δ + τ)(δ + τ₁ + τ₂)·√κ·‖·‖_F·d_ij³`, where `τ₁ = λ_max(HᵀH)`,
//! `τ₂ = λ_max(GᵀG)`, `κ = Σ(1 + r_s)²` over the constraint-side radii, and
//! `d_ij` is the center distance. This module computes the bounds and checks
//! them against the actual slacks of a fitted linear model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbtsvm::{assemble_linear, slacks};
use crate::granulation::GranulationResult;
use crate::model::TwinModel;
use crate::numerics::largest_eigenvalue;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VtubParams {
    /// Perturbation scale Δ (the inverse of the ridge the proof inserts).
    pub big_delta: f64,
    /// Ridge δ; should match the one the model was fitted with.
    pub delta: f64,
}

impl Default for VtubParams {
    fn default() -> Self {
        Self {
            big_delta: 1e3,
            delta: 1e-6,
        }
    }
}

impl VtubParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.big_delta > 0.0 && self.delta > 0.0) {
            return Err(Error::InvalidConfig(
                "big_delta and delta must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Shared constants of the two slack-difference bounds for one ball set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundConstants {
    pub tau1: f64,
    pub tau2: f64,
    /// `Σ (1 + r)²` over -1-class radii (first bound).
    pub kappa_neg: f64,
    /// `Σ (1 + r)²` over +1-class radii (mirror bound).
    pub kappa_pos: f64,
    pub g_frobenius: f64,
    pub h_frobenius: f64,
}

impl BoundConstants {
    pub fn compute(
        h: &DMatrix<f64>,
        g: &DMatrix<f64>,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
    ) -> Self {
        Self {
            tau1: largest_eigenvalue(&(h.transpose() * h)),
            tau2: largest_eigenvalue(&(g.transpose() * g)),
            kappa_neg: r2.iter().map(|r| (1.0 + r) * (1.0 + r)).sum(),
            kappa_pos: r1.iter().map(|r| (1.0 + r) * (1.0 + r)).sum(),
            g_frobenius: g.norm(),
            h_frobenius: h.norm(),
        }
    }
}

fn center_distance(design: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    // design rows are (center, 1); the bias entries cancel
    (design.row(i) - design.row(j)).norm()
}

/// Slack-difference bound for two -1-class balls (the constraint side of the
/// +1 plane): `Δ²(δ + τ₁)(δ + τ₁ + τ₂)√κ‖G‖_F·d_ij³`.
pub fn bound_positive(
    h: &DMatrix<f64>,
    g: &DMatrix<f64>,
    radii2: &DVector<f64>,
    params: &VtubParams,
    i: usize,
    j: usize,
) -> f64 {
    let c = BoundConstants::compute(h, g, &DVector::zeros(h.nrows()), radii2);
    bound_from_constants(&c, params, center_distance(g, i, j), true)
}

/// Mirror bound for two +1-class balls:
/// `Δ²(δ + τ₂)(δ + τ₁ + τ₂)√κ‖H‖_F·d_ij³`.
pub fn bound_negative(
    h: &DMatrix<f64>,
    g: &DMatrix<f64>,
    radii1: &DVector<f64>,
    params: &VtubParams,
    i: usize,
    j: usize,
) -> f64 {
    let c = BoundConstants::compute(h, g, radii1, &DVector::zeros(g.nrows()));
    bound_from_constants(&c, params, center_distance(h, i, j), false)
}

fn bound_from_constants(c: &BoundConstants, params: &VtubParams, d: f64, first: bool) -> f64 {
    let (tau_own, kappa, frob) = if first {
        (c.tau1, c.kappa_neg, c.g_frobenius)
    } else {
        (c.tau2, c.kappa_pos, c.h_frobenius)
    };
    params.big_delta.powi(2)
        * (params.delta + tau_own)
        * (params.delta + c.tau1 + c.tau2)
        * kappa.sqrt()
        * frob
        * d.powi(3)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairRecord {
    /// 1 for the -1-class bound, 2 for the +1-class mirror.
    pub bound: u8,
    pub i: usize,
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub d_ij: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VtubReport {
    pub params: VtubParams,
    pub constants: BoundConstants,
    pub pairs: Vec<PairRecord>,
    pub violations: usize,
    /// Largest `lhs / rhs` over pairs with a positive bound.
    pub max_ratio: f64,
}

const HOLD_SLACK: f64 = 1e-9;

/// Evaluates both slack-difference bounds against the model's actual slacks over all
/// same-class ball pairs (including `i = j`). Linear models only.
pub fn verify(
    model: &TwinModel,
    balls: &GranulationResult,
    params: &VtubParams,
) -> Result<VtubReport> {
    params.validate()?;
    if model.mode.is_kernel() {
        return Err(Error::Unsupported(
            "the tolerance bounds are stated for linear models".into(),
        ));
    }
    let asm = assemble_linear(balls)?;
    let (xi1, xi2) = slacks(model, balls)?;
    let constants = BoundConstants::compute(&asm.h, &asm.g, &asm.r1, &asm.r2);

    let mut pairs = Vec::new();
    let mut violations = 0usize;
    let mut max_ratio = 0.0f64;
    let mut push = |bound: u8, i: usize, j: usize, lhs: f64, rhs: f64, d: f64| {
        let holds = lhs <= rhs + HOLD_SLACK;
        if !holds {
            violations += 1;
        }
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
        pairs.push(PairRecord {
            bound,
            i,
            j,
            lhs,
            rhs,
            d_ij: d,
            holds,
        });
    };

    for i in 0..xi2.len() {
        for j in i..xi2.len() {
            let d = center_distance(&asm.g, i, j);
            let rhs = bound_from_constants(&constants, params, d, true);
            push(1, i, j, (xi2[i] - xi2[j]).abs(), rhs, d);
        }
    }
    for i in 0..xi1.len() {
        for j in i..xi1.len() {
            let d = center_distance(&asm.h, i, j);
            let rhs = bound_from_constants(&constants, params, d, false);
            push(2, i, j, (xi1[i] - xi1[j]).abs(), rhs, d);
        }
    }
    Ok(VtubReport {
        params: *params,
        constants,
        pairs,
        violations,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbtsvm::{fit_linear, GbtsvmHyper};
    use crate::granulation::GranularBall;
    use approx::assert_relative_eq;

    fn ball(center: &[f64], radius: f64, label: f64) -> GranularBall {
        GranularBall {
            center: center.to_vec(),
            radius,
            label,
            count: 1,
            purity: 1.0,
        }
    }

    fn set(balls: Vec<GranularBall>) -> GranulationResult {
        let membership = (0..balls.len()).map(|i| vec![i]).collect();
        GranulationResult {
            balls,
            iterations: 0,
            membership,
        }
    }

    #[test]
    fn identical_pair_has_zero_bound() {
        let s = set(vec![
            ball(&[0.5, 0.0], 0.1, 1.0),
            ball(&[-0.5, 0.0], 0.1, -1.0),
            ball(&[-0.6, 0.2], 0.2, -1.0),
        ]);
        let asm = assemble_linear(&s).unwrap();
        let params = VtubParams::default();
        let b = bound_positive(&asm.h, &asm.g, &asm.r2, &params, 0, 0);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn scalar_instance_matches_longhand_product() {
        // one ball per class, all radii zero, +1 center at the origin
        let s = set(vec![ball(&[0.0], 0.0, 1.0), ball(&[2.0], 0.0, -1.0)]);
        let asm = assemble_linear(&s).unwrap();
        let params = VtubParams {
            big_delta: 10.0,
            delta: 0.5,
        };
        // H = [0 1], G = [2 1]: HᵀH has eigenvalues {0, 1}, GᵀG has {0, 5}
        let tau1 = 1.0f64;
        let tau2 = 5.0f64;
        let kappa = 1.0f64; // single -1 ball, radius 0
        let g_frob = (5.0f64).sqrt();
        let d = 0.0f64; // only one -1 ball, so i = j = 0
        let expected =
            100.0 * (0.5 + tau1) * (0.5 + tau1 + tau2) * kappa.sqrt() * g_frob * d.powi(3);
        let got = bound_positive(&asm.h, &asm.g, &asm.r2, &params, 0, 0);
        assert_relative_eq!(got, expected, epsilon = 1e-12);

        // mirrored bound over the +1 side, same single-pair structure
        let got_neg = bound_negative(&asm.h, &asm.g, &asm.r1, &params, 0, 0);
        let expected_neg = 100.0 * (0.5 + tau2) * (0.5 + tau1 + tau2) * 1.0 * (1.0f64).sqrt() * 0.0;
        assert_relative_eq!(got_neg, expected_neg, epsilon = 1e-12);
    }

    #[test]
    fn nonzero_distance_longhand_check() {
        let s = set(vec![
            ball(&[0.0], 0.0, 1.0),
            ball(&[2.0], 0.0, -1.0),
            ball(&[3.0], 0.0, -1.0),
        ]);
        let asm = assemble_linear(&s).unwrap();
        let params = VtubParams {
            big_delta: 2.0,
            delta: 0.25,
        };
        let tau1 = largest_eigenvalue(&(asm.h.transpose() * &asm.h));
        let tau2 = largest_eigenvalue(&(asm.g.transpose() * &asm.g));
        let kappa = 2.0f64; // two -1 balls, radii 0
        let g_frob = asm.g.norm();
        let expected = 4.0 * (0.25 + tau1) * (0.25 + tau1 + tau2) * kappa.sqrt() * g_frob;
        let got = bound_positive(&asm.h, &asm.g, &asm.r2, &params, 0, 1);
        assert_relative_eq!(got, expected, epsilon = 1e-9); // d = 1
    }

    #[test]
    fn doubling_distance_scales_the_bound_eightfold() {
        let s = set(vec![
            ball(&[0.0, 0.0], 0.0, 1.0),
            ball(&[1.0, 0.0], 0.0, -1.0),
            ball(&[2.0, 0.0], 0.0, -1.0),
            ball(&[3.0, 0.0], 0.0, -1.0),
        ]);
        let asm = assemble_linear(&s).unwrap();
        let params = VtubParams::default();
        let b1 = bound_positive(&asm.h, &asm.g, &asm.r2, &params, 0, 1); // d = 1
        let b2 = bound_positive(&asm.h, &asm.g, &asm.r2, &params, 0, 2); // d = 2
        assert_relative_eq!(b2 / b1, 8.0, epsilon = 1e-9);
    }

    #[test]
    fn bounds_scale_with_delta_squared() {
        let s = set(vec![
            ball(&[0.0, 0.0], 0.1, 1.0),
            ball(&[1.0, 0.5], 0.2, -1.0),
            ball(&[2.0, -0.5], 0.0, -1.0),
        ]);
        let asm = assemble_linear(&s).unwrap();
        let p1 = VtubParams {
            big_delta: 1.0,
            delta: 1e-6,
        };
        let p2 = VtubParams {
            big_delta: 2.0,
            delta: 1e-6,
        };
        let b1 = bound_positive(&asm.h, &asm.g, &asm.r2, &p1, 0, 1);
        let b2 = bound_positive(&asm.h, &asm.g, &asm.r2, &p2, 0, 1);
        assert_relative_eq!(b2 / b1, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn verify_holds_on_a_separated_fit_and_rejects_kernel_models() {
        let s = set(vec![
            ball(&[2.0, 0.1], 0.1, 1.0),
            ball(&[2.2, -0.2], 0.0, 1.0),
            ball(&[-2.0, 0.0], 0.1, -1.0),
            ball(&[-2.3, 0.4], 0.2, -1.0),
        ]);
        let model = fit_linear(&s, &GbtsvmHyper::default()).unwrap();
        let report = verify(&model, &s, &VtubParams::default()).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.pairs.iter().all(|p| p.holds));
        // diagonal pairs are present and hold with zero bound
        assert!(report
            .pairs
            .iter()
            .any(|p| p.i == p.j && p.rhs == 0.0 && p.holds));

        let kernel_model = crate::gbtsvm::fit_kernel(
            &s,
            &GbtsvmHyper {
                kernel: crate::kernels::KernelSpec::Gaussian { sigma: 1.0 },
                ..GbtsvmHyper::default()
            },
        )
        .unwrap();
        assert!(matches!(
            verify(&kernel_model, &s, &VtubParams::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn sorted_pairs_stay_under_the_envelope() {
        let s = set(vec![
            ball(&[1.5, 0.3], 0.1, 1.0),
            ball(&[1.8, -0.1], 0.0, 1.0),
            ball(&[2.1, 0.2], 0.2, 1.0),
            ball(&[-1.5, 0.1], 0.1, -1.0),
            ball(&[-1.9, -0.3], 0.0, -1.0),
        ]);
        let model = fit_linear(&s, &GbtsvmHyper::default()).unwrap();
        let report = verify(&model, &s, &VtubParams::default()).unwrap();
        let mut sorted: Vec<&PairRecord> = report.pairs.iter().collect();
        sorted.sort_by(|a, b| a.d_ij.partial_cmp(&b.d_ij).unwrap());
        for p in sorted {
            assert!(p.lhs <= p.rhs + 1e-9);
        }
    }
}
