use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use riskscore::bounds::{envelope_curve, EnvelopeQuery};
use riskscore::calibration::{improve_aunbc, improve_aunbc_until_stable};
use riskscore::cv::{run_cv, CvPlan};
use riskscore::ingest::{ingest_csv, BinarizationSpec, Ingested};
use riskscore::metrics::{bin_stats, confusion_at_thresholds, evaluate};
use riskscore::report::{calibration_points, decision_curve, roc_points, to_sorted_json, write_csv, Scorecard};
use riskscore::solver::{exact_enumerate, milp_export, sa_train, MilpOptions};
use riskscore::synthetic::{synth_boundary, synth_correlated, RngStream};
use riskscore::{Error, PredictionVector, ScoreModel, SolverConfig, ThresholdGrid};

/// Sparse integer risk scores trained for net benefit, and evaluation of
/// risk predictions.
#[derive(Parser)]
#[command(name = "riskscore", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a scoring model.
    Train(TrainArgs),
    /// Score a CSV with a trained model.
    Predict(PredictArgs),
    /// Metric report for a prediction vector.
    Eval(EvalArgs),
    /// Repeated k-fold cross-validation.
    Cv(CvArgs),
    /// Repair predictions to raise AUNBC.
    Calibrate(CalibrateArgs),
    /// Generate synthetic predictions for a label vector.
    Synth(SynthArgs),
    /// AUROC/AUNBC envelope as CSV.
    Bounds(BoundsArgs),
    /// ROC, calibration and decision-curve CSVs.
    #[command(alias = "curves")]
    Dca(DcaArgs),
    /// Write the mixed-integer formulation as LP text.
    ExportMilp(ExportArgs),
    /// Points and band tables of a trained model.
    Scorecard(ScorecardArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Inner thresholds, comma separated.
    #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    thresholds: String,
    /// Threshold weights, comma separated, or `default` for the spacings.
    #[arg(long, default_value = "default")]
    weights: String,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_col: String,
    /// Binarization spec (JSON). Without it every column passes through.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-3)]
    c0: f64,
    #[arg(long, default_value_t = -10, allow_negative_numbers = true)]
    lambda_min: i64,
    #[arg(long, default_value_t = 10, allow_negative_numbers = true)]
    lambda_max: i64,
    /// Per-feature bounds CSV with columns feature,lo,hi; overrides the
    /// global bounds for the listed features.
    #[arg(long)]
    bounds_file: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    t_max: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-3)]
    sa_t0: f64,
    #[arg(long, default_value_t = 1e-6)]
    sa_alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    sa_tmin: f64,
    #[arg(long, default_value_t = 10)]
    sa_iters: usize,
    #[arg(long, default_value_t = 1_000_000)]
    enumeration_cap: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Sa,
    Exact,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value = "sa")]
    method: SolverKind,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Label column to copy into the output, if present.
    #[arg(long)]
    label_col: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictionFileArgs {
    /// CSV holding predictions and labels.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value = "prediction")]
    pred_col: String,
    #[arg(long, default_value = "label")]
    label_col: String,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    input: PredictionFileArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0.0)]
    c0: f64,
    /// Model size charged by the objective.
    #[arg(long, default_value_t = 0)]
    nnz: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    cv_seed: u64,
    #[arg(long)]
    no_stratify: bool,
    #[arg(long)]
    out: PathBuf,
    /// Pooled out-of-fold predictions CSV.
    #[arg(long)]
    oof_out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    input: PredictionFileArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    preserve_order: bool,
    /// Repeat the sweep until no bin moves.
    #[arg(long)]
    until_stable: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value = "label")]
    label_col: String,
    #[arg(long = "type", value_parser = clap::value_parser!(u8).range(1..=2))]
    kind: u8,
    /// Target correlation for type 1.
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    /// Target AUROC for type 2.
    #[arg(long)]
    auroc: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    prevalence: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DcaArgs {
    #[command(flatten)]
    input: PredictionFileArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScorecardArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidGrid(format!("bad {what} value `{s}`")))
        })
        .collect()
}

impl GridArgs {
    fn grid(&self) -> Result<ThresholdGrid, Error> {
        let inner = parse_list(&self.thresholds, "threshold")?;
        if self.weights.trim() == "default" {
            ThresholdGrid::new(inner)
        } else {
            ThresholdGrid::with_weights(inner, parse_list(&self.weights, "weight")?)
        }
    }
}

fn load_spec(path: Option<&Path>) -> anyhow::Result<Option<BinarizationSpec>> {
    path.map(|p| {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        Ok(BinarizationSpec::from_json(&text)?)
    })
    .transpose()
}

impl DataArgs {
    fn load(&self) -> anyhow::Result<(Ingested, Option<BinarizationSpec>)> {
        let spec = load_spec(self.spec.as_deref())?;
        let ingested = ingest_csv(&self.data, Some(&self.label_col), spec.as_ref())?;
        Ok((ingested, spec))
    }
}

impl SolverArgs {
    fn config(&self, names: &[String]) -> anyhow::Result<SolverConfig> {
        let mut config = SolverConfig::new(names.len()).with_bounds(self.lambda_min, self.lambda_max);
        config.c0 = self.c0;
        config.t_max = self.t_max;
        config.seed = self.seed;
        config.restarts = self.restarts;
        config.sa_initial_temp = self.sa_t0;
        config.sa_cooling_rate = self.sa_alpha;
        config.sa_min_temp = self.sa_tmin;
        config.sa_iters_per_temp = self.sa_iters;
        config.enumeration_cap = self.enumeration_cap;
        if let Some(path) = &self.bounds_file {
            let mut reader = csv::Reader::from_path(path)?;
            for record in reader.records() {
                let record = record?;
                let name = record.get(0).unwrap_or("");
                let k = names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
                let parse = |i: usize| -> Result<i64, Error> {
                    record
                        .get(i)
                        .and_then(|v| v.trim().parse().ok())
                        .ok_or_else(|| Error::InvalidConfig(format!("bad bound for `{name}`")))
                };
                config.lambda_bounds[k] = (parse(1)?, parse(2)?);
            }
        }
        config.validate(names.len())?;
        Ok(config)
    }
}

fn read_predictions(args: &PredictionFileArgs) -> anyhow::Result<(PredictionVector, Vec<u8>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&args.predictions)
        .with_context(|| format!("reading {}", args.predictions.display()))?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let (pi, li) = (find(&args.pred_col)?, find(&args.label_col)?);
    let mut preds = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |i: usize, column: &str| -> Result<f64, Error> {
            let value = record.get(i).unwrap_or("");
            value.parse().map_err(|_| Error::NonNumeric {
                row,
                column: column.to_string(),
                value: value.to_string(),
            })
        };
        preds.push(cell(pi, &args.pred_col)?);
        let y = cell(li, &args.label_col)?;
        if y != 0.0 && y != 1.0 {
            return Err(Error::NonBinaryLabel { row }.into());
        }
        labels.push(y as u8);
    }
    if preds.is_empty() {
        return Err(Error::EmptyDataset.into());
    }
    Ok((PredictionVector::new(preds)?, labels))
}

fn read_labels(path: &Path, column: &str) -> anyhow::Result<Vec<u8>> {
    let ingested = ingest_csv(path, Some(column), Some(&BinarizationSpec { columns: vec![] }));
    match ingested {
        Ok(i) => Ok(i.dataset.labels().to_vec()),
        Err(Error::NoFeatures) | Err(Error::InvalidConfig(_)) => {
            let mut reader = csv::Reader::from_path(path)?;
            let headers = reader.headers()?.clone();
            let idx = headers
                .iter()
                .position(|h| h == column)
                .ok_or_else(|| Error::UnknownColumn(column.to_string()))?;
            let mut labels = Vec::new();
            for (row, record) in reader.records().enumerate() {
                match record?.get(idx).map(str::trim) {
                    Some("0") => labels.push(0),
                    Some("1") => labels.push(1),
                    _ => return Err(Error::NonBinaryLabel { row }.into()),
                }
            }
            Ok(labels)
        }
        Err(e) => Err(e.into()),
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    let mut out = output(path)?;
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn write_scores(path: Option<&Path>, header: &[&str], columns: &[Vec<f64>]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_writer(output(path)?);
    writer.write_record(header)?;
    for j in 0..columns[0].len() {
        writer.write_record(columns.iter().map(|c| c[j].to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

fn train(args: &TrainArgs) -> anyhow::Result<()> {
    let (ingested, _) = args.data.load()?;
    let data = &ingested.dataset;
    let grid = args.grid.grid()?;
    let config = args.solver.config(data.feature_names())?;
    let result = match args.method {
        SolverKind::Sa => sa_train(data, &grid, &config, None)?,
        SolverKind::Exact => exact_enumerate(data, &grid, &config)?,
    };
    fs::write(&args.out, result.model.to_json()?)?;
    let summary = json!({
        "loss": result.loss,
        "evaluations": result.evaluations,
        "model_size": result.model.num_nonzero(),
        "rows_dropped": ingested.dropped,
        "clamped_bins": result.risk.clamped,
        "merged_bins": result.risk.merged,
    });
    println!("{}", to_sorted_json(&summary)?);
    Ok(())
}

fn predict(args: &PredictArgs) -> anyhow::Result<()> {
    let model = ScoreModel::from_json(&fs::read_to_string(&args.model)?)?;
    let spec = load_spec(args.spec.as_deref())?;
    let spec = match spec {
        Some(s) => s,
        None => BinarizationSpec::passthrough(model.feature_names()),
    };
    let ingested = ingest_csv(&args.data, args.label_col.as_deref(), Some(&spec))?;
    let data = &ingested.dataset;
    let mut scores = Vec::with_capacity(data.n());
    let mut risks = Vec::with_capacity(data.n());
    for row in data.rows() {
        let (s, r) = model.predict(row)?;
        scores.push(s);
        risks.push(r);
    }
    if args.label_col.is_some() {
        let labels = data.labels().iter().map(|&y| f64::from(y)).collect();
        write_scores(args.out.as_deref(), &["score", "prediction", "label"], &[scores, risks, labels])
    } else {
        write_scores(args.out.as_deref(), &["score", "prediction"], &[scores, risks])
    }
}

fn eval(args: &EvalArgs) -> anyhow::Result<()> {
    let grid = args.grid.grid()?;
    let (preds, labels) = read_predictions(&args.input)?;
    let report = evaluate(&preds, &labels, &grid, None, args.nnz, args.c0)?;
    write_text(args.out.as_deref(), &to_sorted_json(&report)?)
}

fn cv(args: &CvArgs) -> anyhow::Result<()> {
    let (ingested, spec) = args.data.load()?;
    let data = &ingested.dataset;
    let grid = args.grid.grid()?;
    let config = args.solver.config(data.feature_names())?;
    let plan = CvPlan {
        folds: args.folds,
        repeats: args.repeats,
        seed: args.cv_seed,
        stratified: !args.no_stratify,
    };
    let report = run_cv(data, &grid, &config, &plan)?;
    if let Some(path) = &args.oof_out {
        let mut columns: Vec<Vec<f64>> = report.oof_predictions.clone();
        columns.push(data.labels().iter().map(|&y| f64::from(y)).collect());
        let mut header: Vec<String> = (0..plan.repeats).map(|r| format!("prediction_{r}")).collect();
        header.push("label".into());
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_scores(Some(path), &header, &columns)?;
    }
    let spec_hash = spec.as_ref().map(BinarizationSpec::hash);
    let document = json!({
        "report": report,
        "grid": grid,
        "spec_hash": spec_hash,
        "rows_dropped": ingested.dropped,
    });
    fs::write(&args.out, to_sorted_json(&document)?)?;
    Ok(())
}

fn calibrate(args: &CalibrateArgs) -> anyhow::Result<()> {
    let grid = args.grid.grid()?;
    let (preds, labels) = read_predictions(&args.input)?;
    let (repaired, report) = if args.until_stable {
        improve_aunbc_until_stable(&preds, &labels, &grid, args.preserve_order)?
    } else {
        improve_aunbc(&preds, &labels, &grid, args.preserve_order)?
    };
    let labels_f = labels.iter().map(|&y| f64::from(y)).collect();
    write_scores(
        Some(&args.out),
        &["prediction", "label"],
        &[repaired.into_inner(), labels_f],
    )?;
    write_text(args.report.as_deref(), &to_sorted_json(&report)?)
}

fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let labels = read_labels(&args.labels, &args.label_col)?;
    let preds = match args.kind {
        1 => {
            let r = args.r.ok_or_else(|| Error::InvalidConfig("--r is required for type 1".into()))?;
            synth_correlated(&labels, r, &mut RngStream::new(args.seed))?
        }
        _ => {
            let g = args
                .auroc
                .ok_or_else(|| Error::InvalidConfig("--auroc is required for type 2".into()))?;
            synth_boundary(&labels, g, &args.grid.grid()?)?
        }
    };
    let labels_f = labels.iter().map(|&y| f64::from(y)).collect();
    write_scores(args.out.as_deref(), &["prediction", "label"], &[preds.into_inner(), labels_f])
}

fn bounds(args: &BoundsArgs) -> anyhow::Result<()> {
    let query = EnvelopeQuery::new(args.prevalence, args.grid.grid()?)?;
    let curve = envelope_curve(&query)?;
    let mut writer = csv::Writer::from_writer(output(args.out.as_deref())?);
    writer.write_record(["auroc", "aunbc_upper", "aunbc_lower"])?;
    for p in curve {
        writer.write_record([p.auroc.to_string(), p.aunbc_upper.to_string(), p.aunbc_lower.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

fn dca(args: &DcaArgs) -> anyhow::Result<()> {
    let grid = args.grid.grid()?;
    let (preds, labels) = read_predictions(&args.input)?;
    let curve = confusion_at_thresholds(&preds, &labels, &grid)?;
    fs::create_dir_all(&args.out_dir)?;
    write_csv(File::create(args.out_dir.join("roc.csv"))?, &roc_points(&curve, &grid)?)?;
    let stats = bin_stats(&preds, &labels, &grid)?;
    write_csv(
        File::create(args.out_dir.join("calibration.csv"))?,
        &calibration_points(&stats, &grid),
    )?;
    write_csv(
        File::create(args.out_dir.join("decision.csv"))?,
        &decision_curve(&curve, &grid)?,
    )?;
    Ok(())
}

fn export_milp(args: &ExportArgs) -> anyhow::Result<()> {
    let (ingested, _) = args.data.load()?;
    let data = &ingested.dataset;
    let grid = args.grid.grid()?;
    let config = args.solver.config(data.feature_names())?;
    let export = milp_export(data, &grid, &config, &MilpOptions { gamma: args.gamma })?;
    fs::write(&args.out, export.to_lp_text())?;
    Ok(())
}

fn scorecard(args: &ScorecardArgs) -> anyhow::Result<()> {
    let model = ScoreModel::from_json(&fs::read_to_string(&args.model)?)?;
    let spec = load_spec(args.spec.as_deref())?;
    let levels = spec.map(|s| s.predictor_levels());
    let card = Scorecard::new(&model, levels.as_deref())?;
    write_text(
        args.out.as_deref(),
        &format!("{}\n{}", card.points_table(), card.band_table()),
    )
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Cv(a) => cv(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Synth(a) => synth(a),
        Command::Bounds(a) => bounds(a),
        Command::Dca(a) => dca(a),
        Command::ExportMilp(a) => export_milp(a),
        Command::Scorecard(a) => scorecard(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_config() => 2,
        _ => 1,
    }
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<io::Error>()
            .is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)
            || e.downcast_ref::<csv::Error>().is_some_and(|c| {
                matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe)
            })
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
