//! `relabel`: train, apply and benchmark label-noise-aware linear SVMs.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 data or validation,
//! 5 solver failure (the model file is still written), 6 malformed or
//! invalid plan.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relabel_core::cluster::export_lp;
use relabel_core::data::{
    DataError, Dataset, Delimiter, LabelColumn, LabelMap, LoadOptions, NoiseSpec, NormalizationParams, Scheme,
    inject_label_noise, load_dataset, normalize,
};
use relabel_core::fit::{
    FitError, FitStatus, ModelFamily, ModelSpec, SolverMode, fit_with_warm_start, model_from_json, model_to_json,
    warm_start_objective,
};
use relabel_core::harness::{
    HarnessError, Orientation, ReportFormat, emit_report, emit_timings, load_datasets, parse_plan, parse_records,
    run_experiment_with_progress,
};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DATA: u8 = 4;
const EXIT_SOLVER: u8 = 5;
const EXIT_PLAN: u8 = 6;

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        let code = if matches!(e, DataError::Io { .. }) { EXIT_IO } else { EXIT_DATA };
        fail(code, e.to_string())
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Data(d) => d.into(),
            e if e.is_validation() => fail(EXIT_DATA, e.to_string()),
            e => fail(EXIT_SOLVER, e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Plan { .. } | HarnessError::InvalidPlan(_) => fail(EXIT_PLAN, e.to_string()),
            HarnessError::Dataset { ref source, .. } if matches!(source, DataError::Io { .. }) => {
                fail(EXIT_IO, e.to_string())
            }
            e => fail(EXIT_DATA, e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(name = "relabel", version, about = "Linear SVMs that detect and correct label noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model and write it as a JSON model file.
    Train(TrainArgs),
    /// Predict labels with a model file; prints accuracy when labels exist.
    Predict(PredictArgs),
    /// Flip a fraction of labels and write the corrupted dataset.
    InjectNoise(NoiseArgs),
    /// Run a plan file and write all report formats.
    Benchmark(BenchmarkArgs),
    /// Re-emit reports from one or more delimited record files.
    Report(ReportArgs),
    /// Write the mixed-integer cluster model for a dataset in LP format.
    ExportModel(ExportArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Dataset file (delimited text or sparse `label idx:val` rows).
    #[arg(long)]
    data: PathBuf,
    /// Label column: last, first, a zero-based index or a header name.
    #[arg(long, default_value = "last")]
    label_column: String,
    /// Raw-label mapping such as `2:-1,4:+1`; default reads -1/+1.
    #[arg(long)]
    label_map: Option<String>,
    /// Field delimiter: comma, semicolon, tab, whitespace or a single character.
    #[arg(long)]
    delimiter: Option<String>,
    /// Zero-based raw columns to drop (e.g. record ids), comma separated.
    #[arg(long, value_delimiter = ',')]
    skip_columns: Vec<usize>,
}

impl DataArgs {
    fn options(&self) -> Result<LoadOptions, Failure> {
        let label_column: LabelColumn = self.label_column.parse()?;
        let label_map = match &self.label_map {
            Some(m) => LabelMap::parse(m)?,
            None => LabelMap::default(),
        };
        let delimiter = match self.delimiter.as_deref() {
            None => None,
            Some("comma") => Some(Delimiter::Char(',')),
            Some("semicolon") => Some(Delimiter::Char(';')),
            Some("tab") => Some(Delimiter::Char('\t')),
            Some("whitespace") => Some(Delimiter::Whitespace),
            Some(s) if s.chars().count() == 1 => s.chars().next().map(Delimiter::Char),
            Some(s) => return Err(fail(EXIT_USAGE, format!("unknown delimiter `{s}`"))),
        };
        Ok(LoadOptions {
            label_column,
            label_map,
            delimiter,
            skip_columns: self.skip_columns.clone(),
            ..LoadOptions::default()
        })
    }

    fn load(&self) -> Result<Dataset, Failure> {
        Ok(load_dataset(&self.data, &self.options()?)?)
    }

    fn describe(&self) -> String {
        format!(
            "data={} label_column={} label_map={}",
            self.data.display(),
            self.label_column,
            self.label_map.as_deref().unwrap_or("-1:-1,+1:+1")
        )
    }
}

/// Seconds, or `none` for no limit.
#[derive(Debug, Clone, Copy)]
struct TimeLimit(Option<f64>);

fn parse_limit(s: &str) -> Result<TimeLimit, String> {
    if s == "none" {
        return Ok(TimeLimit(None));
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(TimeLimit(Some(v))),
        _ => Err(format!("expected a positive number of seconds or `none`, got `{s}`")),
    }
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// svm, resvm, rlsvm, cluster-l1, cluster-l2 (or `cluster` with --norm).
    #[arg(long)]
    model: String,
    /// C for svm and rlsvm; C1 otherwise.
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    #[arg(long, default_value_t = 1.0)]
    c3: f64,
    /// Cluster distance: l1, l2 or l2-squared (squared Euclidean margin).
    #[arg(long)]
    norm: Option<String>,
    /// heuristic or exact.
    #[arg(long, default_value = "heuristic")]
    solver: String,
    /// Per-fit time budget in seconds, or `none`.
    #[arg(long, default_value = "30", value_parser = parse_limit)]
    time_limit_s: TimeLimit,
    /// Feature scaling fitted on the training data: none, minmax or zscore.
    #[arg(long, default_value = "minmax")]
    normalize: String,
}

impl ModelArgs {
    fn spec(&self) -> Result<(ModelSpec, Scheme), Failure> {
        let family = match (self.model.as_str(), self.norm.as_deref()) {
            ("cluster", Some("l1")) => ModelFamily::ClusterL1,
            ("cluster", Some("l2" | "l2-squared")) => ModelFamily::ClusterL2,
            ("cluster", _) => return Err(fail(EXIT_USAGE, "--model cluster needs --norm l1, l2 or l2-squared")),
            (m, _) => m.parse::<ModelFamily>().map_err(|e| fail(EXIT_USAGE, e.to_string()))?,
        };
        let squared_margin = match (family, self.norm.as_deref()) {
            (_, None) => false,
            (ModelFamily::ClusterL1, Some("l1")) => false,
            (ModelFamily::ClusterL2, Some("l2")) => false,
            (ModelFamily::ClusterL2, Some("l2-squared")) => true,
            (f, Some(n)) => return Err(fail(EXIT_USAGE, format!("--norm {n} does not apply to {f}"))),
        };
        let solver: SolverMode = self.solver.parse().map_err(|e: FitError| fail(EXIT_USAGE, e.to_string()))?;
        let scheme: Scheme = self.normalize.parse().map_err(|e: String| fail(EXIT_USAGE, e))?;
        let mut spec = ModelSpec::new(family).with_params(self.c1, self.c2, self.c3);
        spec.solver = solver;
        spec.squared_margin = squared_margin;
        spec.time_limit_s = self.time_limit_s.0;
        Ok((spec, scheme))
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Cluster model file whose assignment and hyperplane seed a cluster fit.
    #[arg(long)]
    warm_start: Option<PathBuf>,
    /// Recorded for reproducibility; training itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model_file: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Every column is a feature (no accuracy is reported).
    #[arg(long)]
    unlabeled: bool,
    /// Write predictions here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Fraction of labels to flip, in [0, 0.5].
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corrupted dataset (comma separated, label last as -1/+1).
    #[arg(long)]
    out: PathBuf,
    /// Optional file listing the flipped row indices.
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Plan file (`# relabel-plan v1`).
    #[arg(long)]
    plan: PathBuf,
    /// Directory receiving report.md, records.tsv, boxplot.tsv, audit.tsv
    /// and timings.tsv.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma separated rates, e.g. `0,0.2,0.5`.
    #[arg(long, value_delimiter = ',')]
    noise_rates: Option<Vec<f64>>,
    /// paper (train on one fold) or conventional (train on k-1 folds).
    #[arg(long)]
    orientation: Option<String>,
    #[arg(long)]
    normalize: Option<String>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long, value_parser = parse_limit)]
    time_limit_s: Option<TimeLimit>,
    /// Seed each l2 cluster fit with the l1 cluster fit of the same cell.
    #[arg(long)]
    warm_start_chain: Option<bool>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Delimited record files (as written by `benchmark`); all must share
    /// one fold orientation.
    #[arg(long, required = true)]
    records: Vec<PathBuf>,
    /// markdown, delimited or boxplot.
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    data: DataArgs,
    /// cluster-l1 or cluster-l2 (or `cluster` with --norm).
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    #[arg(long, default_value_t = 1.0)]
    c3: f64,
    #[arg(long)]
    norm: Option<String>,
    /// Bound on every hyperplane and reference-point coordinate.
    #[arg(long = "box", default_value_t = 10.0)]
    coefficient_box: f64,
    #[arg(long, default_value = "minmax")]
    normalize: String,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn train(a: &TrainArgs) -> Outcome {
    let (spec, scheme) = a.model.spec()?;
    eprintln!(
        "relabel train: seed={} {} model={} {} solver={} squared_margin={} time_limit_s={} normalize={scheme} warm_start={}",
        a.seed,
        a.data.describe(),
        spec.family,
        spec.describe_params(),
        a.model.solver,
        spec.squared_margin,
        spec.time_limit_s.map_or("none".into(), |t| t.to_string()),
        a.warm_start.as_ref().map_or("none".into(), |p| p.display().to_string()),
    );
    let raw = a.data.load()?;
    let (d, params) = normalize(&raw, scheme);
    let warm = match &a.warm_start {
        None => None,
        Some(p) => {
            let w = model_from_json(&read(p)?)?;
            if w.clusters.is_none() || !matches!(spec.family, ModelFamily::ClusterL1 | ModelFamily::ClusterL2) {
                return Err(fail(EXIT_DATA, "--warm-start needs a cluster model file and a cluster model"));
            }
            if w.normalization != params {
                return Err(fail(EXIT_DATA, "warm-start model was trained with different feature scaling"));
            }
            Some(w)
        }
    };
    if let Some(w) = &warm {
        println!("warm-start objective: {}", warm_start_objective(&d, &spec, w)?);
    }
    let r = fit_with_warm_start(&d, &spec, params, warm.as_ref())?;
    write(&a.out, &model_to_json(&r))?;
    println!("objective: {}", r.objective);
    println!("status: {}", serde_json::to_value(r.status).map_err(|e| fail(EXIT_DATA, e.to_string()))?.as_str().unwrap_or("?"));
    println!("w: {:?}", r.hyperplane.w);
    println!("b: {}", r.hyperplane.b);
    println!("flips: {}", r.flips.len());
    if r.status == FitStatus::NumericalIssue {
        return Err(fail(EXIT_SOLVER, "solver reported numerical trouble; the written model is unreliable"));
    }
    Ok(())
}

fn predict(a: &PredictArgs) -> Outcome {
    let model = model_from_json(&read(&a.model_file)?)?;
    let mut opts = a.data.options()?;
    if a.unlabeled {
        opts.label_column = LabelColumn::Absent;
    }
    eprintln!(
        "relabel predict: model_file={} {} unlabeled={}",
        a.model_file.display(),
        a.data.describe(),
        a.unlabeled
    );
    let d = load_dataset(&a.data.data, &opts)?;
    let pred = model.predict(&d)?;
    let mut out = String::new();
    for l in &pred {
        let _ = writeln!(out, "{l}");
    }
    match &a.out {
        Some(p) => write(p, &out)?,
        None => print!("{out}"),
    }
    if !a.unlabeled {
        let acc = relabel_core::harness::accuracy(&pred, d.labels())?;
        eprintln!("accuracy: {acc:.2}% ({} rows)", d.n());
    }
    Ok(())
}

fn write_dataset(d: &Dataset) -> String {
    let mut s = String::new();
    for (x, y) in d.rows().zip(d.labels()) {
        for v in x {
            let _ = write!(s, "{v},");
        }
        let _ = writeln!(s, "{y}");
    }
    s
}

fn inject_noise(a: &NoiseArgs) -> Outcome {
    eprintln!("relabel inject-noise: seed={} {} rate={}", a.seed, a.data.describe(), a.rate);
    let d = a.data.load()?;
    let (noisy, record) = inject_label_noise(&d, &NoiseSpec::new(a.rate, a.seed)?)?;
    write(&a.out, &write_dataset(&noisy))?;
    if let Some(p) = &a.record {
        write(p, &record.to_text())?;
    }
    println!("flipped {} of {} labels", record.indices.len(), d.n());
    Ok(())
}

fn benchmark(a: &BenchmarkArgs) -> Outcome {
    let text = read(&a.plan)?;
    let mut plan = parse_plan(&text)?;
    let bad = |e: String| fail(EXIT_PLAN, e);
    if let Some(v) = a.seed {
        plan.seed = v;
    }
    if let Some(v) = a.workers {
        plan.workers = v;
    }
    if let Some(v) = a.folds {
        plan.folds = v;
    }
    if let Some(v) = a.repeats {
        plan.repeats = v;
    }
    if let Some(v) = &a.noise_rates {
        plan.noise_rates = v.clone();
    }
    if let Some(v) = &a.orientation {
        plan.orientation = v.parse::<Orientation>().map_err(bad)?;
    }
    if let Some(v) = &a.normalize {
        plan.normalize = v.parse::<Scheme>().map_err(bad)?;
    }
    if let Some(v) = &a.solver {
        plan.solver = v.parse::<SolverMode>().map_err(|e| bad(e.to_string()))?;
    }
    if let Some(v) = a.time_limit_s {
        plan.time_limit_s = v.0;
    }
    if let Some(v) = a.warm_start_chain {
        plan.warm_start = v;
    }
    plan.validate()?;
    eprintln!("relabel benchmark: seed={} resolved plan:\n{}", plan.seed, plan.to_text().trim_end());
    let base = a.plan.parent().unwrap_or(Path::new("."));
    let datasets = load_datasets(&plan, base)?;
    let report = run_experiment_with_progress(&plan, &datasets, &|c, done, total| {
        eprintln!(
            "cell {done}/{total}: {} rate={} repeat={} fold={} train={} test={} flipped={}{}",
            c.dataset,
            c.rate,
            c.repeat,
            c.fold,
            c.n_train,
            c.n_test,
            c.injected,
            if c.is_pure() { "" } else { " IMPURE" }
        );
    })?;
    fs::create_dir_all(&a.out_dir).map_err(|e| fail(EXIT_IO, format!("{}: {e}", a.out_dir.display())))?;
    write(&a.out_dir.join("report.md"), &emit_report(&report, ReportFormat::TableMarkdown))?;
    write(&a.out_dir.join("records.tsv"), &emit_report(&report, ReportFormat::Delimited))?;
    write(&a.out_dir.join("boxplot.tsv"), &emit_report(&report, ReportFormat::BoxplotData))?;
    write(&a.out_dir.join("timings.tsv"), &emit_timings(&report.timings))?;
    let mut audit = String::from("# relabel-audit v1\ndataset\trate\trepeat\tfold\tn_train\tn_test\tinjected\tflipped_in_test\toverlap\ttest_labels_changed\n");
    for c in &report.audits {
        let _ = writeln!(
            audit,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.dataset, c.rate, c.repeat, c.fold, c.n_train, c.n_test, c.injected, c.flipped_in_test, c.overlap,
            c.test_labels_changed
        );
    }
    write(&a.out_dir.join("audit.tsv"), &audit)?;
    let clean = report.audits.iter().filter(|c| c.is_pure()).count();
    println!(
        "{} records ({} failed fits), {clean}/{} cells pure; reports in {}",
        report.records.len(),
        report.failures(),
        report.audits.len(),
        a.out_dir.display()
    );
    if clean != report.audits.len() {
        return Err(fail(EXIT_DATA, "test-set purity violated"));
    }
    Ok(())
}

fn report(a: &ReportArgs) -> Outcome {
    let format: ReportFormat = a.format.parse().map_err(|e: String| fail(EXIT_USAGE, e))?;
    eprintln!(
        "relabel report: format={} records={}",
        a.format,
        a.records.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
    );
    let mut merged = None;
    for p in &a.records {
        let r = parse_records(&read(p)?).map_err(|e| fail(EXIT_DATA, format!("{}: {e}", p.display())))?;
        merged = Some(match merged {
            None => r,
            Some(m) => relabel_core::harness::ExperimentReport::merge(m, r)?,
        });
    }
    let merged = merged.ok_or_else(|| fail(EXIT_USAGE, "no record files"))?;
    if merged.records.is_empty() {
        return Err(fail(EXIT_DATA, "no records to report"));
    }
    let text = emit_report(&merged, format);
    match &a.out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn export_model(a: &ExportArgs) -> Outcome {
    let args = ModelArgs {
        model: a.model.clone(),
        c1: a.c1,
        c2: a.c2,
        c3: a.c3,
        norm: a.norm.clone(),
        solver: "heuristic".into(),
        time_limit_s: TimeLimit(None),
        normalize: a.normalize.clone(),
    };
    let (spec, scheme) = args.spec()?;
    eprintln!(
        "relabel export-model: {} model={} {} squared_margin={} box={} normalize={scheme}",
        a.data.describe(),
        spec.family,
        spec.describe_params(),
        spec.squared_margin,
        a.coefficient_box
    );
    if !matches!(spec.family, ModelFamily::ClusterL1 | ModelFamily::ClusterL2) {
        return Err(fail(EXIT_DATA, format!("LP export is available for cluster models, not {}", spec.family)));
    }
    if !(a.coefficient_box > 0.0 && a.coefficient_box.is_finite()) {
        return Err(fail(EXIT_DATA, "--box must be positive"));
    }
    let raw = a.data.load()?;
    let d = match scheme {
        Scheme::None => raw,
        s => NormalizationParams::fit(&raw, s).apply(&raw)?,
    };
    write(&a.out, &export_lp(&d, &spec.cluster_spec()?, a.coefficient_box))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::InjectNoise(a) => inject_noise(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Report(a) => report(a),
        Command::ExportModel(a) => export_model(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
