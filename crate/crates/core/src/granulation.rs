//! Granular-ball generation: iterative purity-driven 2-means splitting of a
//! labeled dataset until every ball is pure enough (or a singleton), plus a
//! lower bound on the number of balls.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// A point cluster summarized by its mean, mean distance to the mean, and
/// majority label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GranularBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub label: f64,
    pub count: usize,
    pub purity: f64,
}

impl GranularBall {
    pub fn center_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.center)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GranulationConfig {
    /// Minimum purity a ball must reach before splitting stops; in (0.5, 1].
    pub purity_threshold: f64,
    /// Lower bound on the number of balls produced.
    pub min_balls: usize,
    /// Cap on splitting rounds before giving up.
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for GranulationConfig {
    fn default() -> Self {
        Self {
            purity_threshold: 1.0,
            min_balls: 2,
            max_iterations: 10_000,
            seed: 0,
        }
    }
}

impl GranulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.purity_threshold > 0.5 && self.purity_threshold <= 1.0) {
            return Err(Error::InvalidConfig(
                "purity threshold must lie in (0.5, 1]".into(),
            ));
        }
        if self.min_balls < 2 {
            return Err(Error::InvalidConfig("min_balls must be at least 2".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GranulationResult {
    pub balls: Vec<GranularBall>,
    /// Splitting rounds performed.
    pub iterations: usize,
    /// For each ball, the dataset row indices of its members. The sets
    /// partition `0..n`.
    pub membership: Vec<Vec<usize>>,
}

impl GranulationResult {
    pub fn ball_count(&self) -> usize {
        self.balls.len()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.balls.iter().filter(|b| b.label > 0.0).count();
        (pos, self.balls.len() - pos)
    }
}

/// Fraction of the majority label in a nonempty ±1 multiset.
pub fn purity(labels: &[f64]) -> f64 {
    assert!(!labels.is_empty(), "purity of an empty set is undefined");
    let pos = labels.iter().filter(|&&t| t > 0.0).count();
    let max = pos.max(labels.len() - pos);
    max as f64 / labels.len() as f64
}

/// Flat row-major view of a point set, used by the splitting hot path.
struct Points<'a> {
    data: &'a [f64],
    m: usize,
}

impl<'a> Points<'a> {
    fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

const LLOYD_MAX_ROUNDS: usize = 100;
const LLOYD_MOVE_TOL: f64 = 1e-8;
/// Above this many members the exact farthest-pair scan (quadratic) is
/// replaced by a deterministic two-pass approximation.
const FARTHEST_PAIR_EXACT_LIMIT: usize = 1024;

/// 2-means split of `k ≥ 2` points into two nonempty index sets covering all
/// of them. Lloyd iteration seeded with the farthest pair; ties break to the
/// lowest index, so the procedure is deterministic. The `seed` parameter is
/// reserved for alternative initializations and does not affect the default
/// path.
pub fn two_means_split(points: &nalgebra::DMatrix<f64>, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let flat = crate::kernels::row_major(points);
    let pts = Points {
        data: &flat,
        m: points.ncols(),
    };
    let idx: Vec<usize> = (0..points.nrows()).collect();
    split_indices(&pts, &idx, seed)
}

fn farthest_pair(pts: &Points, idx: &[usize]) -> (usize, usize) {
    let k = idx.len();
    if k <= FARTHEST_PAIR_EXACT_LIMIT {
        let mut best = (idx[0], idx[1]);
        let mut best_d = -1.0;
        for a in 0..k {
            for b in (a + 1)..k {
                let d = sq_dist(pts.row(idx[a]), pts.row(idx[b]));
                if d > best_d {
                    best_d = d;
                    best = (idx[a], idx[b]);
                }
            }
        }
        best
    } else {
        // farthest from the mean, then farthest from that point
        let m = pts.m;
        let mut mean = vec![0.0; m];
        for &i in idx {
            for (j, v) in pts.row(i).iter().enumerate() {
                mean[j] += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= k as f64);
        let first = idx
            .iter()
            .copied()
            .max_by(|&a, &b| {
                sq_dist(pts.row(a), &mean)
                    .partial_cmp(&sq_dist(pts.row(b), &mean))
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .unwrap();
        let second = idx
            .iter()
            .copied()
            .filter(|&i| i != first)
            .max_by(|&a, &b| {
                sq_dist(pts.row(a), pts.row(first))
                    .partial_cmp(&sq_dist(pts.row(b), pts.row(first)))
                    .unwrap()
                    .then(b.cmp(&a))
            })
            .unwrap();
        (first, second)
    }
}

fn split_indices(pts: &Points, idx: &[usize], _seed: u64) -> (Vec<usize>, Vec<usize>) {
    let k = idx.len();
    assert!(k >= 2, "cannot split fewer than two points");
    let m = pts.m;
    let (seed_a, seed_b) = farthest_pair(pts, idx);
    let mut centroids = [pts.row(seed_a).to_vec(), pts.row(seed_b).to_vec()];
    let mut assign = vec![0u8; k];

    for _ in 0..LLOYD_MAX_ROUNDS {
        // assignment; ties go to the first centroid
        for (s, &i) in idx.iter().enumerate() {
            let d0 = sq_dist(pts.row(i), &centroids[0]);
            let d1 = sq_dist(pts.row(i), &centroids[1]);
            assign[s] = u8::from(d1 < d0);
        }
        // empty-cluster repair: move the member farthest from its centroid
        for cluster in 0..2u8 {
            if assign.iter().all(|&a| a != cluster) {
                let donor = cluster ^ 1;
                let far = (0..k)
                    .filter(|&s| assign[s] == donor)
                    .max_by(|&a, &b| {
                        sq_dist(pts.row(idx[a]), &centroids[donor as usize])
                            .partial_cmp(&sq_dist(pts.row(idx[b]), &centroids[donor as usize]))
                            .unwrap()
                            .then(b.cmp(&a))
                    })
                    .expect("donor cluster is nonempty");
                assign[far] = cluster;
            }
        }
        // means
        let mut sums = [vec![0.0; m], vec![0.0; m]];
        let mut counts = [0usize; 2];
        for (s, &i) in idx.iter().enumerate() {
            let c = assign[s] as usize;
            counts[c] += 1;
            for (j, v) in pts.row(i).iter().enumerate() {
                sums[c][j] += v;
            }
        }
        let mut movement = 0.0f64;
        for c in 0..2 {
            let mut shift = 0.0;
            for j in 0..m {
                let new = sums[c][j] / counts[c] as f64;
                shift += (new - centroids[c][j]) * (new - centroids[c][j]);
                centroids[c][j] = new;
            }
            movement = movement.max(shift.sqrt());
        }
        if movement < LLOYD_MOVE_TOL {
            break;
        }
    }

    let mut left = Vec::new();
    let mut right = Vec::new();
    for (s, &i) in idx.iter().enumerate() {
        if assign[s] == 0 {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    debug_assert!(!left.is_empty() && !right.is_empty());
    (left, right)
}

/// Ball summary of a nonempty point set: mean center, mean Euclidean
/// distance to the center, majority label (ties go to +1).
pub fn ball_summary(points: &nalgebra::DMatrix<f64>, labels: &[f64]) -> GranularBall {
    let flat = crate::kernels::row_major(points);
    let pts = Points {
        data: &flat,
        m: points.ncols(),
    };
    let idx: Vec<usize> = (0..points.nrows()).collect();
    summarize(&pts, &idx, labels)
}

fn summarize(pts: &Points, idx: &[usize], labels: &[f64]) -> GranularBall {
    assert!(!idx.is_empty());
    let m = pts.m;
    let count = idx.len();
    let mut center = vec![0.0; m];
    for &i in idx {
        for (j, v) in pts.row(i).iter().enumerate() {
            center[j] += v;
        }
    }
    center.iter_mut().for_each(|v| *v /= count as f64);
    let radius = idx
        .iter()
        .map(|&i| sq_dist(pts.row(i), &center).sqrt())
        .sum::<f64>()
        / count as f64;
    let member_labels: Vec<f64> = idx.iter().map(|&i| labels[i]).collect();
    let pos = member_labels.iter().filter(|&&t| t > 0.0).count();
    let label = if 2 * pos >= count { 1.0 } else { -1.0 };
    GranularBall {
        center,
        radius,
        label,
        count,
        purity: purity(&member_labels),
    }
}

/// Splits the dataset into granular balls: any ball below the purity
/// threshold (and with at least two members) is split by 2-means, round
/// after round, until all balls pass; if fewer than `min_balls` remain, the
/// lowest-purity splittable ball is split until the bound is met.
/// Deterministic for a fixed config.
pub fn granulate(d: &Dataset, cfg: &GranulationConfig) -> Result<GranulationResult> {
    cfg.validate()?;
    let n = d.n();
    if n < cfg.min_balls {
        return Err(Error::DegenerateData(format!(
            "{n} samples cannot form {} balls",
            cfg.min_balls
        )));
    }
    let flat = crate::kernels::row_major(d.features());
    let pts = Points {
        data: &flat,
        m: d.m(),
    };
    let labels: Vec<f64> = d.labels().iter().copied().collect();
    let group_purity = |idx: &[usize]| {
        let member_labels: Vec<f64> = idx.iter().map(|&i| labels[i]).collect();
        purity(&member_labels)
    };

    let mut finalized: Vec<Vec<usize>> = Vec::new();
    let mut pending: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut iterations = 0usize;

    loop {
        // purity-driven rounds
        while !pending.is_empty() {
            iterations += 1;
            if iterations > cfg.max_iterations {
                finalized.append(&mut pending);
                let partial = assemble(&pts, &labels, finalized, iterations - 1);
                return Err(Error::GranulationConvergence {
                    iterations: iterations - 1,
                    partial: Box::new(partial),
                });
            }
            let mut next = Vec::new();
            for group in pending.drain(..) {
                if group.len() == 1 || group_purity(&group) >= cfg.purity_threshold {
                    finalized.push(group);
                } else {
                    let (left, right) = split_indices(&pts, &group, cfg.seed);
                    next.push(left);
                    next.push(right);
                }
            }
            pending = next;
        }
        if finalized.len() >= cfg.min_balls {
            break;
        }
        // enforce the ball-count lower bound: split the lowest-purity ball
        // that still has at least two members
        let target = finalized
            .iter()
            .enumerate()
            .filter(|(_, g)| g.len() >= 2)
            .min_by(|(ai, a), (bi, b)| {
                group_purity(a)
                    .partial_cmp(&group_purity(b))
                    .unwrap()
                    .then(ai.cmp(bi))
            })
            .map(|(i, _)| i);
        match target {
            Some(i) => {
                let group = finalized.swap_remove(i);
                iterations += 1;
                let (left, right) = split_indices(&pts, &group, cfg.seed);
                pending.push(left);
                pending.push(right);
            }
            None => break, // all singletons; nothing left to split
        }
    }

    let mut result = assemble(&pts, &labels, finalized, iterations);
    // canonical order: by smallest member index
    let mut order: Vec<usize> = (0..result.balls.len()).collect();
    order.sort_by_key(|&b| result.membership[b][0]);
    result.balls = order.iter().map(|&b| result.balls[b].clone()).collect();
    result.membership = order
        .iter()
        .map(|&b| result.membership[b].clone())
        .collect();
    Ok(result)
}

fn assemble(
    pts: &Points,
    labels: &[f64],
    mut groups: Vec<Vec<usize>>,
    iterations: usize,
) -> GranulationResult {
    for g in &mut groups {
        g.sort_unstable();
    }
    let balls = groups.iter().map(|g| summarize(pts, g, labels)).collect();
    GranulationResult {
        balls,
        iterations,
        membership: groups,
    }
}
