//! Dense linear-algebra and QP kernels shared by both classifier families:
//! SPD solves, a clipped Gauss-Seidel / SOR solver for box-constrained
//! quadratic programs, an exhaustive active-set reference solver, and a
//! power-iteration eigenvalue routine.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Symmetry tolerance accepted by [`BoxQp::new`].
pub const SYMMETRY_TOL: f64 = 1e-10;

static SPD_SOLVE_CALLS: AtomicU64 = AtomicU64::new(0);

/// Number of [`solve_spd`] invocations since process start. The
/// inversion-free training path is required to leave this untouched.
pub fn spd_solve_calls() -> u64 {
    SPD_SOLVE_CALLS.load(Ordering::Relaxed)
}

/// `min ½xᵀQx + cᵀx` subject to `lower ≤ x ≤ upper` componentwise.
/// Bound entries may be infinite; a coordinate with two infinite bounds is
/// free.
#[derive(Debug, Clone)]
pub struct BoxQp {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl BoxQp {
    pub fn new(
        q: DMatrix<f64>,
        c: DVector<f64>,
        lower: DVector<f64>,
        upper: DVector<f64>,
    ) -> Result<Self> {
        let k = q.nrows();
        if q.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: q.ncols(),
            });
        }
        for (v, name) in [(&c, "c"), (&lower, "lower"), (&upper, "upper")] {
            if v.len() != k {
                return Err(Error::InvalidConfig(format!(
                    "{name} has length {}, expected {k}",
                    v.len()
                )));
            }
        }
        let asym = (&q - q.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidConfig(format!(
                "Q is not symmetric (max deviation {asym:.3e})"
            )));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::InvalidConfig(
                "lower bound exceeds upper bound".into(),
            ));
        }
        Ok(Self { q, c, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.q * x).dot(x) + self.c.dot(x)
    }

    /// Adds `1e-10 · trace/k` to the diagonal and returns the amount.
    /// PSD-but-singular duals get this before the sweep so the fixed point
    /// is unique along otherwise-flat directions.
    pub fn with_psd_jitter(mut self) -> (Self, f64) {
        let k = self.dim();
        let jitter = 1e-10 * self.q.trace() / k as f64;
        for i in 0..k {
            self.q[(i, i)] += jitter;
        }
        (self, jitter)
    }
}

/// Solver output together with its optimality certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Diagonal jitter that was applied to the problem before solving, if any.
    pub jitter: f64,
}

impl QpSolution {
    pub fn x_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.x)
    }
}

/// Coordinate visit order for the relaxation sweep. Both orders share the
/// same fixed points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "lowercase")]
pub enum SweepOrder {
    Canonical,
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Relaxation factor in (0, 2); 1.0 is plain Gauss-Seidel.
    pub omega: f64,
    pub sweep: SweepOrder,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_sweeps: 10_000,
            omega: 1.0,
            sweep: SweepOrder::Canonical,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::InvalidConfig("omega must lie in (0, 2)".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("max_sweeps must be positive".into()));
        }
        Ok(())
    }
}

/// Solves `A X = B` for symmetric positive-definite `A` via Cholesky
/// factorization with one step of iterative refinement. No explicit inverse
/// is ever formed.
pub fn solve_spd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    SPD_SOLVE_CALLS.fetch_add(1, Ordering::Relaxed);
    let k = a.nrows();
    if a.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: a.ncols(),
        });
    }
    if b.nrows() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: b.nrows(),
        });
    }
    let asym = (a - a.transpose()).amax();
    if asym > SYMMETRY_TOL * (1.0 + a.amax()) {
        return Err(Error::InvalidConfig(format!(
            "matrix is not symmetric (max deviation {asym:.3e})"
        )));
    }
    let chol = a.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let mut x = chol.solve(b);
    // one refinement pass keeps the residual bound on ill-conditioned inputs
    let residual = b - a * &x;
    x += chol.solve(&residual);
    Ok(x)
}

/// One clipped Gauss-Seidel sweep with relaxation `omega` over the given
/// coordinate order. Returns the largest coordinate change. Coordinates with
/// infinite bounds update unclipped.
pub fn sor_sweep(p: &BoxQp, x: &mut DVector<f64>, omega: f64, order: &[usize]) -> f64 {
    let mut max_change = 0.0f64;
    for &i in order {
        let gi = p.q.row(i).transpose().dot(x) + p.c[i];
        let target = x[i] - omega * gi / p.q[(i, i)];
        let clipped = target.max(p.lower[i]).min(p.upper[i]);
        max_change = max_change.max((clipped - x[i]).abs());
        x[i] = clipped;
    }
    max_change
}

/// Maximal first-order optimality violation of `x` for `p`: `|g_i|` on
/// interior coordinates, `max(0, -g_i)` at an active lower bound and
/// `max(0, g_i)` at an active upper bound, where `g = Qx + c`.
pub fn kkt_residual(p: &BoxQp, x: &DVector<f64>) -> f64 {
    let g = &p.q * x + &p.c;
    let mut worst = 0.0f64;
    for i in 0..p.dim() {
        let at_lower = x[i] <= p.lower[i];
        let at_upper = x[i] >= p.upper[i];
        let v = match (at_lower, at_upper) {
            (true, true) => 0.0,
            (true, false) => (-g[i]).max(0.0),
            (false, true) => g[i].max(0.0),
            (false, false) => g[i].abs(),
        };
        worst = worst.max(v);
    }
    worst
}

const STALL_RECOVERY_ROUNDS: usize = 60;

/// Solves a box-constrained QP by clipped Gauss-Seidel / SOR sweeps.
///
/// The sweep stops once the largest coordinate change drops to `tolerance`
/// and the KKT residual certifies optimality to `10 · tolerance`. Requires a
/// strictly positive diagonal; positive semidefinite off-diagonal structure
/// is fine (callers add jitter when they need a unique solution).
///
/// Plain sweeps crawl on badly conditioned problems (the ridge-inverted twin
/// duals reach condition numbers near `1/δ`), so after the sweep budget the
/// solver switches to active-set recovery: solve the free-coordinate block
/// directly, keep the step only if it descends, polish with a sweep, and
/// still demand the same KKT certificate before returning.
pub fn solve_box_qp(p: &BoxQp, cfg: &SolverConfig) -> Result<QpSolution> {
    cfg.validate()?;
    let k = p.dim();
    for i in 0..k {
        if p.q[(i, i)] <= 0.0 {
            return Err(Error::IndefiniteDiagonal { index: i });
        }
    }
    // start from 0 clipped into the box
    let mut x = DVector::zeros(k);
    for i in 0..k {
        x[i] = 0.0f64.max(p.lower[i]).min(p.upper[i]);
    }
    let mut order: Vec<usize> = (0..k).collect();
    let mut rng = match cfg.sweep {
        SweepOrder::Canonical => None,
        SweepOrder::Shuffled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut shuffle = |order: &mut Vec<usize>| {
        if let Some(rng) = rng.as_mut() {
            use rand::seq::SliceRandom;
            order.shuffle(rng);
        }
    };

    let mut iterations = 0usize;
    for _ in 1..=cfg.max_sweeps {
        iterations += 1;
        shuffle(&mut order);
        let change = sor_sweep(p, &mut x, cfg.omega, &order);
        if change <= cfg.tolerance {
            let kkt = kkt_residual(p, &x);
            if kkt <= 10.0 * cfg.tolerance {
                return Ok(QpSolution {
                    objective: p.objective(&x),
                    x: x.as_slice().to_vec(),
                    iterations,
                    kkt_residual: kkt,
                    jitter: 0.0,
                });
            }
        }
    }

    for _ in 0..STALL_RECOVERY_ROUNDS {
        iterations += 1;
        if let Some(cand) = active_set_step(p, &x) {
            if p.objective(&cand) <= p.objective(&x) + 1e-12 {
                x = cand;
            }
        }
        shuffle(&mut order);
        let change = sor_sweep(p, &mut x, cfg.omega, &order);
        if change <= cfg.tolerance {
            let kkt = kkt_residual(p, &x);
            if kkt <= 10.0 * cfg.tolerance {
                return Ok(QpSolution {
                    objective: p.objective(&x),
                    x: x.as_slice().to_vec(),
                    iterations,
                    kkt_residual: kkt,
                    jitter: 0.0,
                });
            }
        }
    }
    let kkt = kkt_residual(p, &x);
    Err(Error::SolverConvergence {
        sweeps: iterations,
        kkt,
        best: Box::new(QpSolution {
            objective: p.objective(&x),
            x: x.as_slice().to_vec(),
            iterations,
            kkt_residual: kkt,
            jitter: 0.0,
        }),
    })
}

/// One projected-Newton step: solve the quadratic exactly over the
/// coordinates that are free or pushing off their bound, clip back into the
/// box. Returns `None` when the reduced system is unsolvable.
fn active_set_step(p: &BoxQp, x: &DVector<f64>) -> Option<DVector<f64>> {
    let k = p.dim();
    let g = &p.q * x + &p.c;
    let free: Vec<usize> = (0..k)
        .filter(|&i| {
            let at_lower = x[i] <= p.lower[i];
            let at_upper = x[i] >= p.upper[i];
            (!at_lower && !at_upper) || (at_lower && g[i] < 0.0) || (at_upper && g[i] > 0.0)
        })
        .collect();
    if free.is_empty() {
        return None;
    }
    let nf = free.len();
    let mut q_ff = DMatrix::zeros(nf, nf);
    let mut rhs = DVector::zeros(nf);
    for (a, &i) in free.iter().enumerate() {
        let mut r = -p.c[i];
        for j in 0..k {
            if free.binary_search(&j).is_err() {
                r -= p.q[(i, j)] * x[j];
            }
        }
        rhs[a] = r;
        for (b, &j) in free.iter().enumerate() {
            q_ff[(a, b)] = p.q[(i, j)];
        }
    }
    let xf = match q_ff.clone().lu().solve(&rhs) {
        Some(xf) => xf,
        None => {
            let bump = 1e-12 * (q_ff.trace().abs() + 1.0);
            for i in 0..nf {
                q_ff[(i, i)] += bump;
            }
            q_ff.lu().solve(&rhs)?
        }
    };
    let mut cand = x.clone();
    for (a, &i) in free.iter().enumerate() {
        cand[i] = xf[a].max(p.lower[i]).min(p.upper[i]);
    }
    Some(cand)
}

/// Upper limit on the dimension [`active_set_oracle`] will enumerate.
pub const ORACLE_DIM_LIMIT: usize = 12;

/// Reference solver: enumerates every active-set assignment
/// {lower, upper, interior} over the bounded coordinates, solves the reduced
/// linear system for each, and keeps the feasible candidate with the lowest
/// objective. Exponential in the bounded dimension; refuses `k` above
/// [`ORACLE_DIM_LIMIT`]. Deliberately independent of the sweep solver.
pub fn active_set_oracle(p: &BoxQp) -> Result<QpSolution> {
    let k = p.dim();
    if k > ORACLE_DIM_LIMIT {
        return Err(Error::OracleTooLarge {
            k,
            limit: ORACLE_DIM_LIMIT,
        });
    }
    // per-coordinate candidate states: None = interior, Some(value) = pinned
    let mut states: Vec<Vec<Option<f64>>> = Vec::with_capacity(k);
    for i in 0..k {
        let mut s = vec![None];
        if p.lower[i].is_finite() {
            s.push(Some(p.lower[i]));
        }
        if p.upper[i].is_finite() && p.upper[i] != p.lower[i] {
            s.push(Some(p.upper[i]));
        }
        states.push(s);
    }

    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut assignment = vec![0usize; k];
    let mut evaluated = 0usize;
    loop {
        evaluated += 1;
        if let Some(x) = solve_assignment(p, &states, &assignment) {
            let feasible =
                (0..k).all(|i| x[i] >= p.lower[i] - FEAS_SLACK && x[i] <= p.upper[i] + FEAS_SLACK);
            if feasible {
                let mut clamped = x;
                for i in 0..k {
                    clamped[i] = clamped[i].max(p.lower[i]).min(p.upper[i]);
                }
                let obj = p.objective(&clamped);
                if best.as_ref().is_none_or(|(_, b)| obj < *b) {
                    best = Some((clamped, obj));
                }
            }
        }
        // advance the mixed-radix counter
        let mut pos = 0;
        loop {
            if pos == k {
                let (x, objective) = best.ok_or_else(|| {
                    Error::DegenerateData("no feasible active-set candidate".into())
                })?;
                let kkt = kkt_residual(p, &x);
                return Ok(QpSolution {
                    objective,
                    x: x.as_slice().to_vec(),
                    iterations: evaluated,
                    kkt_residual: kkt,
                    jitter: 0.0,
                });
            }
            assignment[pos] += 1;
            if assignment[pos] < states[pos].len() {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

const FEAS_SLACK: f64 = 1e-9;

fn solve_assignment(
    p: &BoxQp,
    states: &[Vec<Option<f64>>],
    assignment: &[usize],
) -> Option<DVector<f64>> {
    let k = p.dim();
    let mut interior = Vec::new();
    let mut x = DVector::zeros(k);
    for i in 0..k {
        match states[i][assignment[i]] {
            Some(v) => x[i] = v,
            None => interior.push(i),
        }
    }
    if interior.is_empty() {
        return Some(x);
    }
    let ni = interior.len();
    let mut q_ii = DMatrix::zeros(ni, ni);
    let mut rhs = DVector::zeros(ni);
    for (a, &i) in interior.iter().enumerate() {
        let mut r = -p.c[i];
        for j in 0..k {
            if !interior.contains(&j) {
                r -= p.q[(i, j)] * x[j];
            }
        }
        rhs[a] = r;
        for (b, &j) in interior.iter().enumerate() {
            q_ii[(a, b)] = p.q[(i, j)];
        }
    }
    let xi = q_ii.lu().solve(&rhs)?;
    for (a, &i) in interior.iter().enumerate() {
        x[i] = xi[a];
    }
    Some(x)
}

/// Largest eigenvalue of a symmetric matrix by power iteration.
///
/// The matrix is spectrally shifted by its Gershgorin radius first so the
/// algebraically largest eigenvalue is also the dominant one, then iterated
/// from a seeded random start to 1e-10 relative tolerance, restarting with a
/// fresh vector if the Rayleigh quotient stagnates.
pub fn largest_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let k = a.nrows();
    assert_eq!(k, a.ncols(), "matrix must be square");
    if k == 0 {
        return 0.0;
    }
    let radius = (0..k)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let shift = radius + 1.0;
    let shifted = {
        let mut s = a.clone();
        for i in 0..k {
            s[(i, i)] += shift;
        }
        s
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9);
    let mut best = f64::NEG_INFINITY;
    for _restart in 0..3 {
        let mut v = DVector::from_fn(k, |_, _| rng.gen::<f64>() - 0.5);
        let n = v.norm();
        if n == 0.0 {
            continue;
        }
        v /= n;
        let mut lambda = 0.0;
        let mut converged = false;
        for _ in 0..100_000 {
            let w = &shifted * &v;
            let next = v.dot(&w);
            let wn = w.norm();
            if wn == 0.0 {
                lambda = 0.0;
                converged = true;
                break;
            }
            v = w / wn;
            if (next - lambda).abs() <= 1e-10 * next.abs().max(1.0) {
                lambda = next;
                converged = true;
                break;
            }
            lambda = next;
        }
        best = best.max(lambda - shift);
        if converged {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn qp1(c: f64, lo: f64, hi: f64) -> BoxQp {
        BoxQp::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::from_element(1, c),
            DVector::from_element(1, lo),
            DVector::from_element(1, hi),
        )
        .unwrap()
    }

    #[test]
    fn spd_identity_returns_rhs() {
        let a = DMatrix::identity(3, 3);
        let b = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let x = solve_spd(&a, &b).unwrap();
        assert_relative_eq!(x, b, epsilon = 1e-14);
    }

    #[test]
    fn spd_scaled_identity_halves() {
        let a = DMatrix::identity(2, 2) * 2.0;
        let b = DMatrix::from_column_slice(2, 1, &[4.0, -6.0]);
        let x = solve_spd(&a, &b).unwrap();
        assert_relative_eq!(x[(0, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(x[(1, 0)], -3.0, epsilon = 1e-14);
    }

    #[test]
    fn spd_rejects_indefinite() {
        let a = DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let b = DMatrix::zeros(2, 1);
        assert!(matches!(solve_spd(&a, &b), Err(Error::NotPositiveDefinite)));
    }

    /// Adjugate/cofactor-expansion inverse, usable as an independent check
    /// for k ≤ 5.
    fn determinant(m: &DMatrix<f64>) -> f64 {
        let k = m.nrows();
        if k == 1 {
            return m[(0, 0)];
        }
        let mut det = 0.0;
        for j in 0..k {
            let minor = m.clone().remove_row(0).remove_column(j);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            det += sign * m[(0, j)] * determinant(&minor);
        }
        det
    }

    fn cofactor_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
        let k = m.nrows();
        let det = determinant(m);
        let mut adj = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let minor = m.clone().remove_row(i).remove_column(j);
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                // adj is the transposed cofactor matrix
                adj[(j, i)] = sign * determinant(&minor);
            }
        }
        adj / det
    }

    #[test]
    fn spd_matches_cofactor_inverse_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = DMatrix::from_fn(5, 5, |_, _| rng.gen::<f64>() - 0.5);
            let a = &m * m.transpose() + DMatrix::identity(5, 5);
            let b = DMatrix::from_fn(5, 2, |_, _| rng.gen::<f64>() - 0.5);
            let x = solve_spd(&a, &b).unwrap();
            let expected = cofactor_inverse(&a) * &b;
            assert!((x - expected).amax() < 1e-8);
            let residual = (&a * solve_spd(&a, &b).unwrap() - &b).norm() / b.norm().max(1.0);
            assert!(residual <= 1e-8, "residual {residual}");
        }
    }

    #[test]
    fn box_qp_interior_optimum() {
        let sol = solve_box_qp(&qp1(-1.0, 0.0, 10.0), &SolverConfig::default()).unwrap();
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-8);
        assert!(sol.kkt_residual <= 1e-7);
    }

    #[test]
    fn box_qp_clipped_optimum_has_zero_kkt() {
        let sol = solve_box_qp(&qp1(-1.0, 0.0, 0.5), &SolverConfig::default()).unwrap();
        assert_relative_eq!(sol.x[0], 0.5, epsilon = 1e-12);
        assert_eq!(sol.kkt_residual, 0.0);
    }

    #[test]
    fn box_qp_rejects_nonpositive_diagonal() {
        let p = BoxQp::new(
            DMatrix::from_element(1, 1, 0.0),
            DVector::from_element(1, 1.0),
            DVector::from_element(1, 0.0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        assert!(matches!(
            solve_box_qp(&p, &SolverConfig::default()),
            Err(Error::IndefiniteDiagonal { index: 0 })
        ));
    }

    #[test]
    fn oracle_agrees_on_scalar_examples() {
        for (lo, hi, expect) in [(0.0, 10.0, 1.0), (0.0, 0.5, 0.5)] {
            let p = qp1(-1.0, lo, hi);
            let sol = active_set_oracle(&p).unwrap();
            assert_relative_eq!(sol.x[0], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn oracle_unconstrained_stationary_point() {
        let q = DMatrix::from_column_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let c = DVector::from_column_slice(&[1.0, -1.0]);
        let p = BoxQp::new(
            q.clone(),
            c.clone(),
            DVector::from_element(2, f64::NEG_INFINITY),
            DVector::from_element(2, f64::INFINITY),
        )
        .unwrap();
        let sol = active_set_oracle(&p).unwrap();
        let expected = q.lu().solve(&(-c)).unwrap();
        assert_relative_eq!(sol.x_vector(), expected, epsilon = 1e-10);
    }

    #[test]
    fn oracle_positive_gradient_pins_origin() {
        let p = BoxQp::new(
            DMatrix::identity(2, 2),
            DVector::from_column_slice(&[1.0, 1.0]),
            DVector::zeros(2),
            DVector::from_element(2, 1.0),
        )
        .unwrap();
        let sol = active_set_oracle(&p).unwrap();
        assert_relative_eq!(sol.x_vector(), DVector::zeros(2), epsilon = 1e-12);
    }

    #[test]
    fn oracle_refuses_large_problems() {
        let k = 13;
        let p = BoxQp::new(
            DMatrix::identity(k, k),
            DVector::zeros(k),
            DVector::zeros(k),
            DVector::from_element(k, 1.0),
        )
        .unwrap();
        assert!(matches!(
            active_set_oracle(&p),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn sweep_objective_is_monotone_for_omega_in_0_2() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &omega in &[0.3, 1.0, 1.7] {
            let m = DMatrix::from_fn(5, 5, |_, _| rng.gen::<f64>() - 0.5);
            let q = &m * m.transpose() + DMatrix::identity(5, 5) * 0.1;
            let c = DVector::from_fn(5, |_, _| rng.gen::<f64>() - 0.5);
            let p = BoxQp::new(
                q,
                c,
                DVector::from_element(5, -0.5),
                DVector::from_element(5, 0.5),
            )
            .unwrap();
            let mut x = DVector::zeros(5);
            let order: Vec<usize> = (0..5).collect();
            let mut prev = p.objective(&x);
            for _ in 0..50 {
                sor_sweep(&p, &mut x, omega, &order);
                let cur = p.objective(&x);
                assert!(cur <= prev + 1e-12, "objective rose at omega {omega}");
                prev = cur;
            }
        }
    }

    #[test]
    fn eigen_diagonal_and_identity() {
        let a = DMatrix::from_partial_diagonal(2, 2, &[1.0, 3.0]);
        assert_relative_eq!(largest_eigenvalue(&a), 3.0, epsilon = 1e-9);
        assert_relative_eq!(
            largest_eigenvalue(&DMatrix::identity(4, 4)),
            1.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn eigen_signed_maximum_not_largest_magnitude() {
        let a = DMatrix::from_partial_diagonal(2, 2, &[-5.0, 1.0]);
        assert_relative_eq!(largest_eigenvalue(&a), 1.0, epsilon = 1e-9);
    }

    /// Characteristic polynomial by the Faddeev-LeVerrier recurrence, then
    /// the largest real root by bracketed bisection. Independent of the
    /// power iteration.
    fn char_poly_largest_root(a: &DMatrix<f64>) -> f64 {
        let k = a.nrows();
        // det(λI - A) = λ^k + c[k-1] λ^{k-1} + ... + c[0]
        let mut coeffs = vec![0.0; k];
        let mut m = DMatrix::<f64>::zeros(k, k);
        let mut c_prev = 1.0;
        for i in 1..=k {
            m = a * &m + DMatrix::identity(k, k) * c_prev;
            let am = a * &m;
            c_prev = -am.trace() / i as f64;
            coeffs[k - i] = c_prev;
        }
        let p = |x: f64| {
            let mut v = 1.0;
            for i in (0..k).rev() {
                v = v * x + coeffs[i];
            }
            v
        };
        let radius = (0..k)
            .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
            + 1.0;
        // p > 0 beyond the largest eigenvalue; scan down for a sign change
        let mut hi = radius;
        let mut lo = hi;
        let step = radius / 4096.0;
        while p(lo) > 0.0 && lo > -radius {
            hi = lo;
            lo -= step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn eigen_matches_characteristic_polynomial_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..25 {
            let m = DMatrix::from_fn(4, 4, |_, _| 2.0 * rng.gen::<f64>() - 1.0);
            let a = (&m + m.transpose()) * 0.5;
            let expected = char_poly_largest_root(&a);
            let got = largest_eigenvalue(&a);
            assert!(
                (got - expected).abs() < 1e-8,
                "power {got} vs char-poly {expected}"
            );
        }
    }

    #[test]
    fn solution_dominates_oracle_and_certifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..30 {
            let k = 6;
            let m = DMatrix::from_fn(k, k, |_, _| rng.gen::<f64>() - 0.5);
            let q = &m * m.transpose() + DMatrix::identity(k, k) * 0.05;
            let c = DVector::from_fn(k, |_, _| 2.0 * rng.gen::<f64>() - 1.0);
            let mut lower = DVector::zeros(k);
            let mut upper = DVector::zeros(k);
            for i in 0..k {
                if rng.gen::<f64>() < 0.3 {
                    lower[i] = f64::NEG_INFINITY;
                    upper[i] = f64::INFINITY;
                } else {
                    lower[i] = -(rng.gen::<f64>());
                    upper[i] = rng.gen::<f64>();
                }
            }
            let p = BoxQp::new(q, c, lower, upper).unwrap();
            let sol = solve_box_qp(&p, &SolverConfig::default()).unwrap();
            let oracle = active_set_oracle(&p).unwrap();
            assert!(
                sol.objective <= oracle.objective + 1e-6,
                "sweep {} vs oracle {}",
                sol.objective,
                oracle.objective
            );
            assert!(sol.kkt_residual <= 1e-7);
        }
    }

    #[test]
    fn shuffled_and_canonical_orders_reach_the_same_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = DMatrix::from_fn(6, 6, |_, _| rng.gen::<f64>() - 0.5);
        let q = &m * m.transpose() + DMatrix::identity(6, 6) * 0.1;
        let c = DVector::from_fn(6, |_, _| rng.gen::<f64>() - 0.5);
        let p = BoxQp::new(
            q,
            c,
            DVector::from_element(6, 0.0),
            DVector::from_element(6, 1.0),
        )
        .unwrap();
        let a = solve_box_qp(&p, &SolverConfig::default()).unwrap();
        let b = solve_box_qp(
            &p,
            &SolverConfig {
                sweep: SweepOrder::Shuffled { seed: 99 },
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert!((a.x_vector() - b.x_vector()).amax() < 1e-6);
    }
}
