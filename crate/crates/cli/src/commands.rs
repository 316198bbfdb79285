use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use gbt_core::dataset::{
    generate_synthetic, inject_label_noise, load_csv, minmax_normalize, train_test_split,
    write_csv, Dataset, LabelColumn, NoiseSpec, NormalizationRecord, SynthKind, SynthSpec,
};
use gbt_core::error::{Error, Result};
use gbt_core::evaluation::{
    accuracy, average_ranks, enumerate_cells, friedman, grid_search, nemenyi_cd, win_tie_loss,
    FamilyShape, GridSpec, Predictor, RankTable,
};
use gbt_core::gbtsvm::GbtsvmHyper;
use gbt_core::granulation::{GranularBall, GranulationConfig, GranulationResult};
use gbt_core::kernels::KernelSpec;
use gbt_core::lsgbtsvm::{LsHyper, SolverKind};
use gbt_core::model::TwinModel;
use gbt_core::numerics::SolverConfig;
use gbt_core::pipeline::{train_gbtsvm, train_lsgbtsvm, train_point_tsvm};
use gbt_core::vtub::{verify, VtubParams};

fn parse_label_column(s: &str) -> std::result::Result<LabelColumn, String> {
    if s == "last" {
        Ok(LabelColumn::Last)
    } else {
        s.parse::<usize>()
            .map(LabelColumn::Index)
            .map_err(|_| format!("expected a column index or \"last\", got {s:?}"))
    }
}

#[derive(Args, Clone)]
pub struct InputArgs {
    /// Input CSV (numeric features plus a two-valued label column)
    #[arg(long)]
    pub input: PathBuf,
    /// Label column: an index or "last"
    #[arg(long, default_value = "last", value_parser = parse_label_column)]
    pub label_column: LabelColumn,
    /// First line of the input is a header
    #[arg(long)]
    pub has_header: bool,
}

impl InputArgs {
    fn load(&self) -> Result<Dataset> {
        load_csv(&self.input, self.label_column, self.has_header)
    }
}

#[derive(Args, Clone)]
pub struct GranulationArgs {
    /// Purity threshold T in (0.5, 1]
    #[arg(long, default_value_t = 1.0)]
    pub purity: f64,
    /// Minimum number of balls
    #[arg(long, default_value_t = 2)]
    pub num: usize,
    /// Cap on splitting rounds
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
}

impl GranulationArgs {
    fn config(&self, seed: u64) -> GranulationConfig {
        GranulationConfig {
            purity_threshold: self.purity,
            min_balls: self.num,
            max_iterations: self.max_iterations,
            seed,
        }
    }
}

#[derive(Args)]
pub struct GranulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub granulation: GranulationArgs,
    /// Min-max scale features to [0, 1] before splitting
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON file (a list of balls)
    #[arg(long)]
    pub output: PathBuf,
    /// Optional SVG scatter/circle plot (2-feature datasets only)
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

pub fn granulate(args: GranulateArgs) -> Result<()> {
    let mut data = args.input.load()?;
    if args.normalize {
        data = minmax_normalize(&data).0;
    }
    let result = gbt_core::granulation::granulate(&data, &args.granulation.config(args.seed))?;
    write_json(&args.output, &result.balls)?;
    log::info!(
        "granulated {} samples into {} balls in {} rounds",
        data.n(),
        result.ball_count(),
        result.iterations
    );
    if let Some(plot_path) = &args.plot {
        if data.m() == 2 {
            std::fs::write(plot_path, crate::plot::ball_plot_svg(&data, &result))?;
        } else {
            eprintln!(
                "warning: plot skipped, dataset has {} features (plots need exactly 2)",
                data.m()
            );
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelArg {
    Gbtsvm,
    Lsgbtsvm,
    /// LS-GBTSVM with the canonical in-order sweep
    LsgbtsvmSor,
    /// Point-based baseline: one radius-zero ball per training sample
    Tsvm,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KernelArg {
    Linear,
    Gaussian,
}

#[derive(Args, Clone)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 1.0)]
    pub d1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d3: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d4: f64,
    /// Ridge added to the squared design blocks (GBTSVM duals)
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Linear)]
    pub kernel: KernelArg,
    /// Gaussian kernel width
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Relaxation factor of the coordinate sweep, in (0, 2)
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_sweeps: usize,
}

impl HyperArgs {
    fn kernel_spec(&self) -> Result<KernelSpec> {
        match self.kernel {
            KernelArg::Linear => Ok(KernelSpec::Linear),
            KernelArg::Gaussian => KernelSpec::gaussian(self.sigma),
        }
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tolerance,
            max_sweeps: self.max_sweeps,
            omega: self.omega,
            ..SolverConfig::default()
        }
    }

    fn gbtsvm(&self) -> Result<GbtsvmHyper> {
        Ok(GbtsvmHyper {
            d1: self.d1,
            d2: self.d2,
            delta: self.delta,
            solver: self.solver(),
            kernel: self.kernel_spec()?,
        })
    }

    fn lsgbtsvm(&self, kind: SolverKind) -> Result<LsHyper> {
        Ok(LsHyper {
            d1: self.d1,
            d2: self.d2,
            d3: self.d3,
            d4: self.d4,
            solver: self.solver(),
            kernel: self.kernel_spec()?,
            solver_kind: kind,
        })
    }
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub granulation: GranulationArgs,
    /// Min-max scale features on the training data; the scaling record is
    /// written next to the model as <output>.norm.json
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output model JSON
    #[arg(long)]
    pub output: PathBuf,
}

fn fit_model(
    data: &Dataset,
    model: ModelArg,
    hyper: &HyperArgs,
    gran: &GranulationConfig,
) -> Result<TwinModel> {
    match model {
        ModelArg::Gbtsvm => train_gbtsvm(data, gran, &hyper.gbtsvm()?),
        ModelArg::Lsgbtsvm => train_lsgbtsvm(data, gran, &hyper.lsgbtsvm(SolverKind::Generic)?),
        ModelArg::LsgbtsvmSor => train_lsgbtsvm(data, gran, &hyper.lsgbtsvm(SolverKind::Sor)?),
        ModelArg::Tsvm => train_point_tsvm(data, &hyper.gbtsvm()?),
    }
}

pub fn train(args: TrainArgs) -> Result<()> {
    let mut data = args.input.load()?;
    if args.normalize {
        let (scaled, record) = minmax_normalize(&data);
        data = scaled;
        write_json(&norm_sidecar(&args.output), &record)?;
    }
    let model = fit_model(
        &data,
        args.model,
        &args.hyper,
        &args.granulation.config(args.seed),
    )?;
    model.save(&args.output)?;
    log::info!("model written to {}", args.output.display());
    Ok(())
}

fn norm_sidecar(model_path: &Path) -> PathBuf {
    let mut p = model_path.as_os_str().to_owned();
    p.push(".norm.json");
    PathBuf::from(p)
}

fn load_normalization(path: &Path) -> Result<NormalizationRecord> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[derive(Args)]
pub struct PredictArgs {
    /// Trained model JSON
    #[arg(long)]
    pub model: PathBuf,
    /// Input CSV; by default every column is a feature
    #[arg(long)]
    pub input: PathBuf,
    /// The input carries a label column to ignore (an index or "last")
    #[arg(long, value_parser = parse_label_column)]
    pub label_column: Option<LabelColumn>,
    #[arg(long)]
    pub has_header: bool,
    /// Normalization record written by `train --normalize`
    #[arg(long)]
    pub normalization: Option<PathBuf>,
    /// Output CSV of predicted raw labels
    #[arg(long)]
    pub output: PathBuf,
}

fn load_features(
    path: &Path,
    label_column: Option<LabelColumn>,
    has_header: bool,
    expected_dim: usize,
) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (has_header && idx == 0) {
            continue;
        }
        let row_no = if has_header { idx } else { idx + 1 };
        let fields: Vec<&str> = line.split(',').collect();
        let label_idx = label_column.map(|lc| match lc {
            LabelColumn::Last => fields.len() - 1,
            LabelColumn::Index(i) => i,
        });
        let mut row = Vec::new();
        for (j, field) in fields.iter().enumerate() {
            if Some(j) == label_idx {
                continue;
            }
            row.push(field.trim().parse::<f64>().map_err(|_| Error::Parse {
                row: Some(row_no),
                message: format!("non-numeric feature {field:?}"),
            })?);
        }
        if row.len() != expected_dim {
            return Err(Error::DimensionMismatch {
                expected: expected_dim,
                got: row.len(),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let model = TwinModel::load(&args.model)?;
    let rows = load_features(
        &args.input,
        args.label_column,
        args.has_header,
        model.input_dim(),
    )?;
    let record = args
        .normalization
        .as_deref()
        .map(load_normalization)
        .transpose()?;
    let mut out = String::from("prediction\n");
    for row in &rows {
        let row = match &record {
            Some(r) => (0..row.len()).map(|j| r.apply_value(j, row[j])).collect(),
            None => row.clone(),
        };
        let label = model.predict(&row)?;
        out.push_str(model.label_map.raw(label));
        out.push('\n');
    }
    std::fs::write(&args.output, out)?;
    Ok(())
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub normalization: Option<PathBuf>,
    /// Optional output JSON; the report always prints to stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalReport {
    accuracy: f64,
    samples: usize,
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let model = TwinModel::load(&args.model)?;
    let mut data = args.input.load()?;
    if let Some(path) = &args.normalization {
        data = load_normalization(path)?.apply(&data)?;
    }
    let preds = model.predict_batch(data.features())?;
    let truth: Vec<f64> = data.labels().iter().copied().collect();
    let report = EvalReport {
        accuracy: accuracy(&preds, &truth)?,
        samples: data.n(),
    };
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(path) = &args.output {
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKindArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 0.5)]
    pub balance: f64,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a header line
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub output: PathBuf,
    /// Optional JSON sidecar with the generation spec and label mapping
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SynthKindArg {
    LinearMargin,
    Crossplane,
    Checkerboard,
}

#[derive(Serialize)]
struct SynthMeta {
    spec: SynthSpec,
    label_map: gbt_core::dataset::LabelMap,
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n: args.n,
        m: args.m,
        kind: match args.kind {
            SynthKindArg::LinearMargin => SynthKind::LinearMargin,
            SynthKindArg::Crossplane => SynthKind::Crossplane,
            SynthKindArg::Checkerboard => SynthKind::Checkerboard,
        },
        class_balance: args.balance,
        separation: args.separation,
        seed: args.seed,
    };
    let data = generate_synthetic(&spec)?;
    write_csv(&data, &args.output, args.header)?;
    if let Some(meta) = &args.meta {
        write_json(
            meta,
            &SynthMeta {
                spec,
                label_map: data.label_map.clone(),
            },
        )?;
    }
    Ok(())
}

#[derive(Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn noise(args: NoiseArgs) -> Result<()> {
    let data = args.input.load()?;
    let noisy = inject_label_noise(
        &data,
        &NoiseSpec {
            rate: args.rate,
            seed: args.seed,
        },
    )?;
    write_csv(&noisy, &args.output, args.header)
}

#[derive(Args)]
pub struct BenchmarkArgs {
    /// Directory of dataset CSVs (every *.csv inside is one dataset)
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Comma-separated models: gbtsvm, lsgbtsvm, lsgbtsvm-sor, tsvm
    #[arg(long, value_delimiter = ',', default_value = "gbtsvm,lsgbtsvm")]
    pub models: Vec<ModelArg>,
    /// Comma-separated label-noise rates applied to the training split
    #[arg(long, value_delimiter = ',', default_value = "0.0")]
    pub noise: Vec<f64>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub granulation: GranulationArgs,
    /// Grid-search d (and sigma for gaussian kernels) by k-fold CV instead
    /// of using the fixed hyperparameters
    #[arg(long)]
    pub grid: bool,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value = "last", value_parser = parse_label_column)]
    pub label_column: LabelColumn,
    #[arg(long)]
    pub has_header: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cap on worker threads (0 = rayon default)
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Nemenyi critical value
    #[arg(long, default_value_t = 2.850)]
    pub q_alpha: f64,
    /// Per-dataset accuracy table (CSV)
    #[arg(long)]
    pub out_csv: PathBuf,
    /// Statistics report (JSON)
    #[arg(long)]
    pub out_stats: PathBuf,
}

fn model_name(m: ModelArg) -> &'static str {
    match m {
        ModelArg::Gbtsvm => "gbtsvm",
        ModelArg::Lsgbtsvm => "lsgbtsvm",
        ModelArg::LsgbtsvmSor => "lsgbtsvm-sor",
        ModelArg::Tsvm => "tsvm",
    }
}

/// One benchmark cell: train (optionally grid-searched) on the noisy
/// training split, score on the clean test split.
fn benchmark_cell(args: &BenchmarkArgs, data: &Dataset, rate: f64, model: ModelArg) -> Result<f64> {
    let (train, test) = train_test_split(data, args.train_fraction, args.seed)?;
    let (train, test) = if args.normalize {
        let (scaled, record) = minmax_normalize(&train);
        (scaled, record.apply(&test)?)
    } else {
        (train, test)
    };
    let train = inject_label_noise(
        &train,
        &NoiseSpec {
            rate,
            seed: args.seed,
        },
    )?;
    let gran = args.granulation.config(args.seed);

    let hyper = if args.grid {
        let shape = FamilyShape {
            penalty_pairs: if matches!(model, ModelArg::Lsgbtsvm | ModelArg::LsgbtsvmSor) {
                2
            } else {
                1
            },
            uses_sigma: args.hyper.kernel == KernelArg::Gaussian,
        };
        let cells = enumerate_cells(&GridSpec::default(), shape);
        let base = args.hyper.clone();
        let family = |d: &Dataset, cell: &gbt_core::evaluation::GridPoint| {
            let mut h = base.clone();
            h.d1 = cell.d1;
            h.d2 = cell.d2;
            h.d3 = cell.d3;
            h.d4 = cell.d4;
            if let Some(sigma) = cell.sigma {
                h.sigma = sigma;
            }
            Ok(Box::new(fit_model(d, model, &h, &gran)?) as Box<dyn Predictor>)
        };
        let (best, cv) = grid_search(&train, &cells, args.folds, family, args.seed)?;
        log::info!(
            "grid best for {}: d1={} d3={} sigma={:?} (cv {cv:.2})",
            model_name(model),
            best.d1,
            best.d3,
            best.sigma
        );
        let mut chosen = args.hyper.clone();
        chosen.d1 = best.d1;
        chosen.d2 = best.d2;
        chosen.d3 = best.d3;
        chosen.d4 = best.d4;
        if let Some(sigma) = best.sigma {
            chosen.sigma = sigma;
        }
        chosen
    } else {
        args.hyper.clone()
    };

    let fitted = fit_model(&train, model, &hyper, &gran)?;
    let preds = fitted.predict_batch(test.features())?;
    let truth: Vec<f64> = test.labels().iter().copied().collect();
    accuracy(&preds, &truth)
}

#[derive(Serialize)]
struct StatsReport {
    model_names: Vec<String>,
    avg_ranks: Vec<f64>,
    chi2_f: f64,
    /// Undefined (null) when the table shows perfect agreement, where
    /// chi-squared reaches N(q-1) and the F statistic has a pole.
    f_f: Option<f64>,
    nemenyi_cd: f64,
    win_threshold: f64,
    /// Raw win/tie/loss triples, `wtl[a][b]` = row model a vs column model b.
    #[serde(skip_serializing_if = "Option::is_none")]
    win_tie_loss: Option<Vec<Vec<[usize; 3]>>>,
}

pub fn benchmark(args: BenchmarkArgs) -> Result<()> {
    let mut csvs: Vec<PathBuf> = std::fs::read_dir(&args.data_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    csvs.sort();
    if csvs.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no CSV datasets in {}",
            args.data_dir.display()
        )));
    }

    let mut dataset_names = Vec::new();
    let mut work: Vec<(usize, usize, Dataset, f64, ModelArg)> = Vec::new();
    for path in &csvs {
        let data = load_csv(path, args.label_column, args.has_header)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        for &rate in &args.noise {
            let row = dataset_names.len();
            dataset_names.push(format!("{stem}@{rate}"));
            for (col, &model) in args.models.iter().enumerate() {
                work.push((row, col, data.clone(), rate, model));
            }
        }
    }

    let run = || -> Vec<(usize, usize, Result<f64>)> {
        use rayon::prelude::*;
        work.par_iter()
            .map(|(row, col, data, rate, model)| {
                (*row, *col, benchmark_cell(&args, data, *rate, *model))
            })
            .collect()
    };
    let outcomes = if args.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run)
    } else {
        run()
    };

    let mut table = vec![vec![f64::NAN; args.models.len()]; dataset_names.len()];
    for (row, col, outcome) in outcomes {
        table[row][col] = outcome.map_err(|e| {
            Error::DegenerateData(format!(
                "cell {} × {} failed: {e}",
                dataset_names[row],
                model_name(args.models[col])
            ))
        })?;
    }

    let model_names: Vec<String> = args.models.iter().map(|&m| model_name(m).into()).collect();
    let rank_table = RankTable::new(dataset_names, model_names.clone(), table)?;
    write_rank_table_csv(&args.out_csv, &rank_table)?;

    let report = stats_report(&rank_table, args.q_alpha)?;
    write_json(&args.out_stats, &report)?;
    println!(
        "benchmark: {} datasets × {} models, chi2_F = {:.4}, F_F = {}",
        rank_table.n(),
        rank_table.q(),
        report.chi2_f,
        report.f_f.map_or("undefined".into(), |v| format!("{v:.4}")),
    );
    Ok(())
}

fn write_rank_table_csv(path: &Path, t: &RankTable) -> Result<()> {
    let mut out = String::from("dataset");
    for m in &t.model_names {
        out.push(',');
        out.push_str(m);
    }
    out.push('\n');
    for (name, row) in t.dataset_names.iter().zip(&t.accuracies) {
        out.push_str(name);
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn read_rank_table_csv(path: &Path) -> Result<RankTable> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse {
        row: None,
        message: "empty accuracy table".into(),
    })?;
    let model_names: Vec<String> = header.split(',').skip(1).map(|s| s.to_string()).collect();
    let mut dataset_names = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut fields = line.split(',');
        dataset_names.push(
            fields
                .next()
                .ok_or_else(|| Error::Parse {
                    row: Some(i + 1),
                    message: "missing dataset name".into(),
                })?
                .to_string(),
        );
        let row: std::result::Result<Vec<f64>, _> =
            fields.map(|f| f.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|_| Error::Parse {
            row: Some(i + 1),
            message: "non-numeric accuracy".into(),
        })?);
    }
    RankTable::new(dataset_names, model_names, rows)
}

#[derive(Args)]
pub struct StatsArgs {
    /// Accuracy CSV as written by `benchmark` (dataset column + one column
    /// per model)
    #[arg(long, conflicts_with = "ranks")]
    pub acc_csv: Option<PathBuf>,
    /// Comma-separated average ranks (requires --n)
    #[arg(long, value_delimiter = ',', conflicts_with = "acc_csv")]
    pub ranks: Option<Vec<f64>>,
    /// Number of datasets behind an average-rank vector
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 2.850)]
    pub q_alpha: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let report = match (&args.acc_csv, &args.ranks) {
        (Some(path), None) => {
            let table = read_rank_table_csv(path)?;
            stats_report(&table, args.q_alpha)?
        }
        (None, Some(ranks)) => {
            let n = args.n.ok_or_else(|| {
                Error::InvalidConfig("--ranks requires --n (dataset count)".into())
            })?;
            let q = ranks.len();
            let chi2 = gbt_core::evaluation::friedman_chi2(ranks, n, q)?;
            StatsReport {
                model_names: (0..q).map(|j| format!("model{j}")).collect(),
                avg_ranks: ranks.clone(),
                chi2_f: chi2,
                f_f: f_statistic(ranks, n, q)?,
                nemenyi_cd: nemenyi_cd(q, n, args.q_alpha),
                win_threshold: gbt_core::evaluation::win_threshold(n),
                win_tie_loss: None,
            }
        }
        _ => {
            return Err(Error::InvalidConfig(
                "pass exactly one of --acc-csv or --ranks".into(),
            ))
        }
    };
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(path) = &args.output {
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}

#[derive(Args)]
pub struct VtubArgs {
    /// Trained linear model JSON
    #[arg(long)]
    pub model: PathBuf,
    /// Ball list JSON as written by `granulate`
    #[arg(long)]
    pub balls: PathBuf,
    /// Perturbation scale Δ
    #[arg(long, default_value_t = 1e3)]
    pub big_delta: f64,
    /// Ridge δ; defaults to the model's training value
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn vtub(args: VtubArgs) -> Result<()> {
    let model = TwinModel::load(&args.model)?;
    let balls: Vec<GranularBall> = serde_json::from_str(&std::fs::read_to_string(&args.balls)?)?;
    let membership = (0..balls.len()).map(|i| vec![i]).collect();
    let set = GranulationResult {
        balls,
        iterations: 0,
        membership,
    };
    let delta = args.delta.unwrap_or(match &model.hyper {
        gbt_core::model::HyperRecord::Gbtsvm(h) => h.delta,
        gbt_core::model::HyperRecord::Lsgbtsvm(_) => VtubParams::default().delta,
    });
    let params = VtubParams {
        big_delta: args.big_delta,
        delta,
    };
    let report = verify(&model, &set, &params)?;
    write_json(&args.output, &report)?;
    println!(
        "vtub: {} pairs, {} violations, max lhs/rhs = {:.6e}",
        report.pairs.len(),
        report.violations,
        report.max_ratio
    );
    Ok(())
}

fn f_statistic(ranks: &[f64], n: usize, q: usize) -> Result<Option<f64>> {
    match friedman(ranks, n, q) {
        Ok((_, ff)) => Ok(Some(ff)),
        Err(Error::UndefinedStatistic(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn stats_report(table: &RankTable, q_alpha: f64) -> Result<StatsReport> {
    let ranks = average_ranks(table);
    let chi2 = gbt_core::evaluation::friedman_chi2(&ranks, table.n(), table.q())?;
    let f_f = f_statistic(&ranks, table.n(), table.q())?;
    let (wtl, threshold) = win_tie_loss(table);
    Ok(StatsReport {
        model_names: table.model_names.clone(),
        avg_ranks: ranks,
        chi2_f: chi2,
        f_f,
        nemenyi_cd: nemenyi_cd(table.q(), table.n(), q_alpha),
        win_threshold: threshold,
        win_tie_loss: Some(wtl),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
