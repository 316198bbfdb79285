//! Published-benchmark statistics: the per-dataset accuracy table of six
//! models on 36 datasets (noise-free, linear kernel) must reproduce the
//! published average-rank row, the Friedman values, and the pairwise
//! win-tie-loss entries.

use gbt_core::evaluation::{
    average_ranks, effective_wins, friedman, nemenyi_cd, win_tie_loss, RankTable,
};

const MODELS: [&str; 6] = [
    "svm",
    "gbsvm-pso",
    "tsvm",
    "gbtsvm",
    "ls-gbtsvm",
    "ls-gbtsvm-sor",
];

// rows: dataset name, then accuracy per model in the column order above
const ACCURACIES: [(&str, [f64; 6]); 36] = [
    ("aus", [88.46, 81.11, 64.31, 89.06, 90.38, 90.38]),
    ("breast_cancer", [72.09, 62.79, 60.0, 73.26, 67.44, 73.26]),
    (
        "checkerboard_data",
        [85.46, 71.06, 64.31, 86.06, 90.38, 90.38],
    ),
    ("chess_krvkp", [84.67, 69.62, 67.41, 85.19, 89.99, 80.71]),
    ("crossplane130", [97.24, 100.0, 71.35, 97.44, 100.0, 82.05]),
    (
        "ecoli-0-1_vs_2-3-5",
        [81.89, 77.3, 68.24, 85.14, 93.24, 89.19],
    ),
    ("ecoli-0-1_vs_5", [88.61, 77.5, 66.68, 88.89, 94.44, 81.94]),
    (
        "ecoli-0-1-4-6_vs_5",
        [95.81, 94.05, 67.88, 96.05, 98.81, 97.62],
    ),
    (
        "ecoli-0-1-4-7_vs_2-3-5-6",
        [85.05, 52.48, 68.51, 87.13, 74.26, 88.12],
    ),
    (
        "ecoli-0-1-4-7_vs_5-6",
        [87.0, 76.0, 67.32, 91.0, 95.0, 94.0],
    ),
    ("haber", [77.17, 77.17, 57.96, 82.61, 81.52, 79.35]),
    ("haberman", [77.17, 77.17, 57.96, 82.61, 81.52, 79.35]),
    (
        "haberman_survival",
        [77.17, 78.26, 57.96, 82.61, 80.43, 81.52],
    ),
    ("heart-stat", [90.12, 85.93, 58.69, 90.12, 90.12, 87.65]),
    (
        "led7digit-0-2-4-5-6-7-8-9_vs_1",
        [92.23, 78.35, 66.77, 93.23, 94.74, 93.98],
    ),
    ("mammographic", [79.58, 80.28, 60.41, 83.04, 80.97, 79.93]),
    ("monks_3", [75.45, 59.88, 59.7, 78.44, 74.85, 70.66]),
    ("mushroom", [80.06, 50.83, 77.5, 83.46, 82.69, 80.01]),
    ("musk_1", [68.53, 52.66, 59.15, 72.03, 69.93, 56.64]),
    ("new-thyroid1", [88.46, 85.38, 66.0, 89.23, 98.46, 93.85]),
    (
        "oocytes_merluccius_nucleus_4d",
        [64.82, 63.19, 59.58, 69.06, 68.86, 59.61],
    ),
    ("ozone", [94.58, 94.58, 85.58, 96.58, 95.48, 95.93]),
    ("ringnorm", [72.62, 63.56, 64.86, 73.56, 75.05, 70.95]),
    (
        "shuttle-6_vs_2-3",
        [95.55, 95.55, 70.08, 95.65, 100.0, 98.55],
    ),
    ("spambase", [88.78, 79.79, 74.18, 89.79, 87.69, 79.22]),
    ("spectf", [76.54, 70.4, 62.39, 80.25, 71.6, 62.96]),
    ("tic_tac_toe", [75.69, 76.88, 68.66, 99.65, 76.04, 72.92]),
    ("vehicle1", [76.38, 73.62, 59.44, 79.53, 65.35, 71.65]),
    ("vehicle2", [71.65, 53.54, 64.86, 94.09, 84.65, 62.2]),
    (
        "vertebral_column_2clases",
        [75.27, 68.82, 63.13, 69.89, 78.49, 78.49],
    ),
    ("wpbc", [77.97, 57.63, 60.0, 77.97, 77.97, 77.97]),
    (
        "yeast-0-2-5-6_vs_3-7-8-9",
        [83.71, 64.9, 66.23, 88.08, 92.38, 85.1],
    ),
    (
        "yeast-0-2-5-7-9_vs_3-6-8",
        [86.79, 68.55, 66.67, 87.5, 91.19, 84.87],
    ),
    (
        "yeast-0-5-6-7-9_vs_4",
        [81.19, 56.6, 68.29, 84.91, 91.19, 91.19],
    ),
    ("yeast-2_vs_4", [85.81, 54.19, 67.7, 87.74, 95.48, 85.16]),
    ("yeast3", [79.91, 79.03, 67.15, 80.04, 90.81, 80.92]),
];

fn table() -> RankTable {
    RankTable::new(
        ACCURACIES.iter().map(|(n, _)| n.to_string()).collect(),
        MODELS.iter().map(|m| m.to_string()).collect(),
        ACCURACIES.iter().map(|(_, a)| a.to_vec()).collect(),
    )
    .unwrap()
}

#[test]
fn average_ranks_reproduce_the_published_row() {
    let ranks = average_ranks(&table());
    let published = [3.46, 4.79, 5.69, 1.97, 1.94, 3.14];
    for (got, want) in ranks.iter().zip(published) {
        assert!(
            (got - want).abs() <= 0.01,
            "rank {got:.4} differs from published {want}"
        );
    }
}

#[test]
fn friedman_statistics_from_the_published_ranks() {
    let (chi2, ff) = friedman(&[3.46, 4.79, 5.69, 1.97, 1.94, 3.14], 36, 6).unwrap();
    assert!((chi2 - 116.19).abs() <= 0.05, "chi2 {chi2}");
    assert!((ff - 63.70).abs() <= 0.2, "F_F {ff}");
    let cd = nemenyi_cd(6, 36, 2.850);
    assert!((cd - 1.256).abs() <= 0.002, "CD {cd}");
}

#[test]
fn pairwise_wtl_reproduces_the_published_sweep() {
    let t = table();
    let (wtl, threshold) = win_tie_loss(&t);
    // row model beats column model: published [36, 0, 0] sweep
    let gbtsvm = 3;
    let tsvm = 2;
    assert_eq!(wtl[gbtsvm][tsvm], [36, 0, 0]);
    assert!((threshold - 23.88).abs() <= 0.01);
    assert!(effective_wins(wtl[gbtsvm][tsvm][0], wtl[gbtsvm][tsvm][1]) >= threshold);
    // antisymmetry spot check
    assert_eq!(wtl[tsvm][gbtsvm], [0, 0, 36]);
}
