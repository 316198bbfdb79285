//! Metrics, cross-validation, grid search, and the comparative statistics
//! used to rank classifiers across dataset collections (average rank,
//! Friedman test, Nemenyi critical difference, pairwise win-tie-loss).

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::TwinModel;

/// Anything that can label a feature vector with ±1.
pub trait Predictor {
    fn predict_one(&self, x: &[f64]) -> Result<f64>;
}

impl Predictor for TwinModel {
    fn predict_one(&self, x: &[f64]) -> Result<f64> {
        self.predict(x)
    }
}

/// Percentage of matching labels.
pub fn accuracy(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidConfig("accuracy of an empty set".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(100.0 * hits as f64 / pred.len() as f64)
}

fn evaluate_on(model: &dyn Predictor, data: &Dataset) -> Result<f64> {
    let preds: Result<Vec<f64>> = (0..data.n())
        .map(|i| model.predict_one(&data.row(i)))
        .collect();
    let truth: Vec<f64> = data.labels().iter().copied().collect();
    accuracy(&preds?, &truth)
}

/// Deterministic fold assignment: a seeded shuffle of `0..n` chopped into
/// `k` nearly equal folds.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut cursor = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[cursor..cursor + len].to_vec());
        cursor += len;
    }
    folds
}

/// Mean test accuracy over `k` folds with deterministic assignment. The
/// trainer sees every fold's complement; a complement missing a class is
/// reported as a degenerate fold.
pub fn kfold_cv<F>(train: &Dataset, k: usize, trainer: F, seed: u64) -> Result<f64>
where
    F: Fn(&Dataset) -> Result<Box<dyn Predictor>>,
{
    if k < 2 || k > train.n() {
        return Err(Error::InvalidConfig(format!(
            "k must lie in [2, {}]",
            train.n()
        )));
    }
    let folds = fold_indices(train.n(), k, seed);
    let mut total = 0.0;
    for (f, fold) in folds.iter().enumerate() {
        let mut train_idx: Vec<usize> = Vec::with_capacity(train.n() - fold.len());
        for other in folds.iter().enumerate().filter(|(g, _)| *g != f) {
            train_idx.extend_from_slice(other.1);
        }
        train_idx.sort_unstable();
        let fit_part = train.select(&train_idx);
        if !fit_part.has_both_classes() {
            return Err(Error::DegenerateData(format!(
                "fold {f}: training complement is missing a class"
            )));
        }
        let mut fold_sorted = fold.clone();
        fold_sorted.sort_unstable();
        let test_part = train.select(&fold_sorted);
        let model = trainer(&fit_part)?;
        total += evaluate_on(model.as_ref(), &test_part)?;
    }
    Ok(total / k as f64)
}

/// Hyperparameter search lattice. `d_range` feeds the penalty parameters,
/// `sigma_range` the Gaussian width; the tie flags collapse `d2 = d1` and
/// `d4 = d3` the way the twin models are usually tuned.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub d_range: Vec<f64>,
    pub sigma_range: Vec<f64>,
    pub tie_d12: bool,
    pub tie_d34: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            d_range: (-5..=5).map(|e| 10f64.powi(e)).collect(),
            sigma_range: (-5..=5).map(|e| 2f64.powi(e)).collect(),
            tie_d12: true,
            tie_d34: true,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d_range.is_empty() || self.sigma_range.is_empty() {
            return Err(Error::InvalidConfig("grid ranges must be nonempty".into()));
        }
        Ok(())
    }
}

/// Which hyperparameters a trainer family consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilyShape {
    /// Penalty pairs: 1 for (d1, d2), 2 for (d1, d2, d3, d4).
    pub penalty_pairs: usize,
    pub uses_sigma: bool,
}

/// One grid cell. Unused fields carry the first range entry so cells order
/// lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub sigma: Option<f64>,
}

/// Full lattice in lexicographic order of (d1, d2, d3, d4, sigma) with each
/// axis sorted ascending.
pub fn enumerate_cells(grid: &GridSpec, shape: FamilyShape) -> Vec<GridPoint> {
    let mut d_range = grid.d_range.clone();
    d_range.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sigma_range = grid.sigma_range.clone();
    sigma_range.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let d12: Vec<(f64, f64)> = if grid.tie_d12 {
        d_range.iter().map(|&d| (d, d)).collect()
    } else {
        d_range
            .iter()
            .flat_map(|&a| d_range.iter().map(move |&b| (a, b)))
            .collect()
    };
    let d34: Vec<(f64, f64)> = if shape.penalty_pairs < 2 {
        vec![(d_range[0], d_range[0])]
    } else if grid.tie_d34 {
        d_range.iter().map(|&d| (d, d)).collect()
    } else {
        d_range
            .iter()
            .flat_map(|&a| d_range.iter().map(move |&b| (a, b)))
            .collect()
    };
    let sigmas: Vec<Option<f64>> = if shape.uses_sigma {
        sigma_range.iter().map(|&s| Some(s)).collect()
    } else {
        vec![None]
    };

    let mut cells = Vec::with_capacity(d12.len() * d34.len() * sigmas.len());
    for &(d1, d2) in &d12 {
        for &(d3, d4) in &d34 {
            for &sigma in &sigmas {
                cells.push(GridPoint {
                    d1,
                    d2,
                    d3,
                    d4,
                    sigma,
                });
            }
        }
    }
    cells
}

/// Exhaustive grid search by k-fold CV. Cells run in parallel but are
/// reduced in cell order, so ties resolve to the lexicographically smallest
/// hyperparameter tuple. Cells whose trainer fails are skipped; if every
/// cell fails the first error is returned.
pub fn grid_search<F>(
    train: &Dataset,
    cells: &[GridPoint],
    k: usize,
    family: F,
    seed: u64,
) -> Result<(GridPoint, f64)>
where
    F: Fn(&Dataset, &GridPoint) -> Result<Box<dyn Predictor>> + Sync,
{
    if cells.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    let outcomes: Vec<Result<f64>> = cells
        .par_iter()
        .map(|cell| kfold_cv(train, k, |d| family(d, cell), seed))
        .collect();

    let mut best: Option<(usize, f64)> = None;
    let mut first_err: Option<Error> = None;
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(acc) => {
                if best.is_none_or(|(_, b)| acc > b) {
                    best = Some((i, acc));
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match best {
        Some((i, acc)) => Ok((cells[i], acc)),
        None => Err(first_err.expect("no cells succeeded and no error recorded")),
    }
}

/// Accuracy matrix of `N` datasets (rows) by `q` models (columns).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankTable {
    pub dataset_names: Vec<String>,
    pub model_names: Vec<String>,
    /// Row-major accuracies in [0, 100].
    pub accuracies: Vec<Vec<f64>>,
}

impl RankTable {
    pub fn new(
        dataset_names: Vec<String>,
        model_names: Vec<String>,
        accuracies: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let (n, q) = (dataset_names.len(), model_names.len());
        if n < 2 || q < 2 {
            return Err(Error::InvalidConfig(
                "rank table needs at least 2 datasets and 2 models".into(),
            ));
        }
        if accuracies.len() != n || accuracies.iter().any(|r| r.len() != q) {
            return Err(Error::DimensionMismatch {
                expected: n * q,
                got: accuracies.iter().map(|r| r.len()).sum(),
            });
        }
        if accuracies
            .iter()
            .flatten()
            .any(|&a| !(0.0..=100.0).contains(&a))
        {
            return Err(Error::InvalidConfig(
                "accuracies must lie in [0, 100]".into(),
            ));
        }
        Ok(Self {
            dataset_names,
            model_names,
            accuracies,
        })
    }

    pub fn n(&self) -> usize {
        self.dataset_names.len()
    }

    pub fn q(&self) -> usize {
        self.model_names.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.q(), |i, j| self.accuracies[i][j])
    }
}

/// Ranks one row: 1 is the highest accuracy, ties receive the mean of the
/// positions they straddle.
pub fn midranks(row: &[f64]) -> Vec<f64> {
    let q = row.len();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; q];
    let mut pos = 0;
    while pos < q {
        let mut end = pos;
        while end + 1 < q && row[order[end + 1]] == row[order[pos]] {
            end += 1;
        }
        let mean = (pos + end) as f64 / 2.0 + 1.0;
        for &idx in &order[pos..=end] {
            ranks[idx] = mean;
        }
        pos = end + 1;
    }
    ranks
}

/// Per-model rank averaged over datasets.
pub fn average_ranks(t: &RankTable) -> Vec<f64> {
    let mut sums = vec![0.0; t.q()];
    for row in &t.accuracies {
        for (j, r) in midranks(row).into_iter().enumerate() {
            sums[j] += r;
        }
    }
    sums.iter_mut().for_each(|s| *s /= t.n() as f64);
    sums
}

/// `χ²_F = 12N/(q(q+1)) [Σ R_j² - q(q+1)²/4]`.
pub fn friedman_chi2(avg_ranks: &[f64], n: usize, q: usize) -> Result<f64> {
    if n < 2 || q < 2 {
        return Err(Error::InvalidConfig("need N ≥ 2 and q ≥ 2".into()));
    }
    if avg_ranks.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: avg_ranks.len(),
        });
    }
    let (nf, qf) = (n as f64, q as f64);
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    Ok(12.0 * nf / (qf * (qf + 1.0)) * (sum_sq - qf * (qf + 1.0) * (qf + 1.0) / 4.0))
}

/// Friedman statistics: the chi-squared value together with
/// `F_F = (N-1)χ²_F / (N(q-1) - χ²_F)`; the latter is undefined exactly
/// when `N(q-1) = χ²_F`.
pub fn friedman(avg_ranks: &[f64], n: usize, q: usize) -> Result<(f64, f64)> {
    let chi2 = friedman_chi2(avg_ranks, n, q)?;
    let (nf, qf) = (n as f64, q as f64);
    let denom = nf * (qf - 1.0) - chi2;
    if denom == 0.0 {
        return Err(Error::UndefinedStatistic(
            "N(q-1) equals χ²_F; F_F is undefined".into(),
        ));
    }
    Ok((chi2, (nf - 1.0) * chi2 / denom))
}

/// Nemenyi critical difference `q_α √(q(q+1) / 6N)`.
pub fn nemenyi_cd(q: usize, n: usize, q_alpha: f64) -> f64 {
    q_alpha * ((q * (q + 1)) as f64 / (6.0 * n as f64)).sqrt()
}

/// Significance threshold for pairwise wins: `N/2 + 1.96·√N/2`.
pub fn win_threshold(n: usize) -> f64 {
    n as f64 / 2.0 + 1.96 * (n as f64).sqrt() / 2.0
}

/// Raw pairwise wins/ties/losses of row model `a` against column model `b`,
/// plus the win threshold for this `N`.
pub fn win_tie_loss(t: &RankTable) -> (Vec<Vec<[usize; 3]>>, f64) {
    let q = t.q();
    let mut table = vec![vec![[0usize; 3]; q]; q];
    for (a, row) in table.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            if a == b {
                continue;
            }
            for accs in &t.accuracies {
                if accs[a] > accs[b] {
                    cell[0] += 1;
                } else if accs[a] == accs[b] {
                    cell[1] += 1;
                } else {
                    cell[2] += 1;
                }
            }
        }
    }
    (table, win_threshold(t.n()))
}

/// Wins after tie redistribution: ties split evenly between both models,
/// discarding one tie first when their count is odd.
pub fn effective_wins(wins: usize, ties: usize) -> f64 {
    let usable = if ties.is_multiple_of(2) { ties } else { ties - 1 };
    wins as f64 + usable as f64 / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SynthKind, SynthSpec};
    use approx::assert_relative_eq;

    struct Constant(f64);
    impl Predictor for Constant {
        fn predict_one(&self, _x: &[f64]) -> Result<f64> {
            Ok(self.0)
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_relative_eq!(accuracy(&[1.0, -1.0], &[1.0, -1.0]).unwrap(), 100.0);
        assert_relative_eq!(accuracy(&[1.0, -1.0], &[1.0, 1.0]).unwrap(), 50.0);
        assert_relative_eq!(accuracy(&[-1.0, 1.0], &[1.0, -1.0]).unwrap(), 0.0);
        assert!(accuracy(&[1.0], &[1.0, 1.0]).is_err());
    }

    fn balanced_dataset(n: usize, pos_fraction: f64) -> Dataset {
        generate_synthetic(&SynthSpec {
            n,
            m: 2,
            kind: SynthKind::LinearMargin,
            class_balance: pos_fraction,
            separation: 1.0,
            seed: 99,
        })
        .unwrap()
    }

    #[test]
    fn constant_predictor_scores_the_majority_rate() {
        let d = balanced_dataset(100, 0.6);
        let acc = kfold_cv(
            &d,
            5,
            |_| Ok(Box::new(Constant(1.0)) as Box<dyn Predictor>),
            3,
        )
        .unwrap();
        assert_relative_eq!(acc, 60.0, epsilon = 1e-9);
    }

    #[test]
    fn folds_are_deterministic_per_seed() {
        assert_eq!(fold_indices(17, 4, 9), fold_indices(17, 4, 9));
        assert_ne!(fold_indices(17, 4, 9), fold_indices(17, 4, 10));
    }

    #[test]
    fn leave_one_out_runs_on_six_points() {
        let d = balanced_dataset(6, 0.5);
        let acc = kfold_cv(
            &d,
            6,
            |_| Ok(Box::new(Constant(1.0)) as Box<dyn Predictor>),
            0,
        )
        .unwrap();
        assert!((0.0..=100.0).contains(&acc));
    }

    #[test]
    fn single_cell_grid_returns_that_cell() {
        let d = balanced_dataset(40, 0.5);
        let cells = vec![GridPoint {
            d1: 0.5,
            d2: 0.5,
            d3: 0.5,
            d4: 0.5,
            sigma: None,
        }];
        let (best, _) = grid_search(
            &d,
            &cells,
            4,
            |_, _| Ok(Box::new(Constant(1.0)) as Box<dyn Predictor>),
            1,
        )
        .unwrap();
        assert_eq!(best, cells[0]);
    }

    #[test]
    fn grid_best_dominates_every_cell_and_ties_break_low() {
        let d = balanced_dataset(60, 0.5);
        let spec = GridSpec {
            d_range: vec![1.0, 0.01, 0.1],
            sigma_range: vec![1.0],
            tie_d12: true,
            tie_d34: true,
        };
        let cells = enumerate_cells(
            &spec,
            FamilyShape {
                penalty_pairs: 1,
                uses_sigma: false,
            },
        );
        assert_eq!(cells.len(), 3);
        assert!(cells[0].d1 < cells[1].d1 && cells[1].d1 < cells[2].d1);
        // constant predictor ties every cell; the smallest tuple must win
        let (best, acc) = grid_search(
            &d,
            &cells,
            5,
            |_, _| Ok(Box::new(Constant(1.0)) as Box<dyn Predictor>),
            1,
        )
        .unwrap();
        assert_eq!(best.d1, 0.01);
        for cell in &cells {
            let cv = kfold_cv(
                &d,
                5,
                |_| Ok(Box::new(Constant(1.0)) as Box<dyn Predictor>),
                1,
            )
            .unwrap();
            assert!(acc >= cv - 1e-12, "cell {cell:?} beat the winner");
        }
    }

    fn table(acc: Vec<Vec<f64>>) -> RankTable {
        let n = acc.len();
        let q = acc[0].len();
        RankTable::new(
            (0..n).map(|i| format!("d{i}")).collect(),
            (0..q).map(|j| format!("m{j}")).collect(),
            acc,
        )
        .unwrap()
    }

    #[test]
    fn ranks_of_a_dominant_model() {
        let t = table(vec![vec![90.0, 80.0], vec![70.0, 60.0], vec![99.0, 98.0]]);
        assert_eq!(average_ranks(&t), vec![1.0, 2.0]);
    }

    #[test]
    fn exact_ties_get_midranks_and_rows_sum_correctly() {
        let t = table(vec![vec![90.0, 90.0, 50.0], vec![10.0, 20.0, 30.0]]);
        let ranks = midranks(&t.accuracies[0]);
        assert_eq!(ranks, vec![1.5, 1.5, 3.0]);
        let q = 3.0;
        for row in &t.accuracies {
            let sum: f64 = midranks(row).iter().sum();
            assert_relative_eq!(sum, q * (q + 1.0) / 2.0);
        }
    }

    #[test]
    fn friedman_null_hypothesis_and_closed_form() {
        // all ranks at (q+1)/2
        let (chi2, _) = friedman(&[2.0, 2.0, 2.0], 10, 3).unwrap();
        assert_relative_eq!(chi2, 0.0, epsilon = 1e-12);
        // q = 2, ranks (1, 2), N = 10: 12·10/6 · [5 - 4.5] = 10, which is
        // exactly the N(q-1) pole of F_F
        assert_relative_eq!(friedman_chi2(&[1.0, 2.0], 10, 2).unwrap(), 10.0);
        assert!(matches!(
            friedman(&[1.0, 2.0], 10, 2),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    #[test]
    fn friedman_permutation_equivariance() {
        let ranks = [3.1, 1.2, 2.4, 4.0];
        let permuted = [1.2, 4.0, 3.1, 2.4];
        let a = friedman(&ranks, 20, 4).unwrap();
        let b = friedman(&permuted, 20, 4).unwrap();
        assert_relative_eq!(a.0, b.0, epsilon = 1e-12);
        assert_relative_eq!(a.1, b.1, epsilon = 1e-12);
    }

    #[test]
    fn nemenyi_scalings() {
        let cd = nemenyi_cd(6, 36, 2.850);
        let quadrupled = nemenyi_cd(6, 144, 2.850);
        assert_relative_eq!(cd / quadrupled, 2.0, epsilon = 1e-12);
        assert_eq!(nemenyi_cd(6, 36, 0.0), 0.0);
    }

    #[test]
    fn win_tie_loss_counts_and_antisymmetry() {
        let t = table(vec![
            vec![90.0, 80.0],
            vec![70.0, 70.0],
            vec![60.0, 65.0],
            vec![55.0, 50.0],
        ]);
        let (wtl, threshold) = win_tie_loss(&t);
        assert_eq!(wtl[0][1], [2, 1, 1]);
        assert_eq!(wtl[1][0], [1, 1, 2]);
        // antisymmetry before tie redistribution
        assert_eq!(wtl[0][1][0], wtl[1][0][2]);
        assert_relative_eq!(threshold, 4.0 / 2.0 + 1.96 * 2.0 / 2.0);
    }

    #[test]
    fn identical_models_split_ties_to_half_n() {
        let t = table(vec![vec![80.0, 80.0]; 10]);
        let (wtl, _) = win_tie_loss(&t);
        assert_eq!(wtl[0][1], [0, 10, 0]);
        assert_relative_eq!(effective_wins(0, 10), 5.0);
    }

    #[test]
    fn odd_ties_drop_one_before_splitting() {
        assert_relative_eq!(effective_wins(3, 5), 5.0);
        assert_relative_eq!(effective_wins(3, 4), 5.0);
    }
}
