//! The `dai` command-line tool.
//!
//! Every command writes its artifacts plus a `manifest.json` recording the
//! effective configuration, input checksums, tool version and a timestamp.
//! Settings resolve as flag, then `--config` file, then built-in default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dataset::{save_label_csv, synth_generate, weighted_positive_ratio, LabelMatrix, RatioVector};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::experiment::{run_benchmark, streams, BenchmarkConfig, METHODS};
use crate::metrics::{load_predictions_csv, metric_table_csv, metric_vs_ratio_table, BalanceReport, MetricsReport, PredictionMatrix, DEFAULT_THRESHOLD};
use crate::optimizer::{
    find_scale_for_fraction, integerize, optimize, BalanceConfig, TargetRatio, WeightsTable,
};
use crate::resample::{materialize, save_index};
use crate::trainer::TrainConfig;

#[derive(Debug, Parser)]
#[command(name = "dai", version, about = "Multi-label re-sampling toward balanced positive ratios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for per-sample weights and integer replication counts.
    Balance {
        labels: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Build the sub-balance dataset and its index from a weights file.
    Sample {
        labels: PathBuf,
        weights: PathBuf,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Score predictions against labels.
    Eval {
        labels: PathBuf,
        predictions: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Compare per-label positive ratios before and after re-sampling.
    Report {
        before: PathBuf,
        /// A re-sampled label file.
        #[arg(long, conflicts_with = "weights", required_unless_present = "weights")]
        after: Option<PathBuf>,
        /// A weights file from `balance`; its counts define the re-sampled set.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long = "p-ideal")]
        p_ideal: Option<f64>,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Write a synthetic imbalanced label file.
    Synth {
        #[arg(long, default_value_t = 2000)]
        rows: usize,
        #[arg(long, default_value_t = 20)]
        labels: usize,
        #[arg(long = "min-ratio", default_value_t = 0.03)]
        min_ratio: f64,
        #[arg(long = "max-ratio", default_value_t = 0.9)]
        max_ratio: f64,
        #[command(flatten)]
        common: CommonFlags,
    },
    /// Run the four-method ablation on the synthetic benchmark task.
    Demo {
        #[command(flatten)]
        solver: SolverFlags,
        #[command(flatten)]
        common: CommonFlags,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverFlags {
    #[arg(long = "p-ideal")]
    pub p_ideal: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long = "target-fraction")]
    pub target_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonFlags {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Keys accepted in a config file.
pub const CONFIG_KEYS: [&str; 9] =
    ["p-ideal", "lambda", "lr", "iters", "scale", "target-fraction", "threshold", "seed", "out"];

/// Parsed `key = value` config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(k + 1, None, format!("expected `key = value`, found {raw:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::parse(k + 1, None, format!("unknown key {key:?}")));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::parse(k + 1, None, format!("key {key:?} given twice")));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| e.with_path(path))
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| v.parse().map_err(|_| Error::invalid(format!("config key {key:?}: cannot parse {v:?}"))))
            .transpose()
    }
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &ConfigFile, key: &str, default: T) -> Result<T> {
    Ok(match flag {
        Some(v) => v,
        None => file.get(key)?.unwrap_or(default),
    })
}

/// Everything a command needs after merging flags, config file and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub balance: BalanceConfig,
    pub target_fraction: Option<f64>,
    pub threshold: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Settings {
    pub fn resolve(solver: &SolverFlags, common: &CommonFlags, threshold: Option<f64>) -> Result<Self> {
        let file = match &common.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let d = BalanceConfig::default();
        let seed = pick(common.seed, &file, "seed", 0)?;
        let default_p = match d.p_ideal {
            TargetRatio::Uniform(p) => p,
            TargetRatio::PerLabel(_) => unreachable!("default target is uniform"),
        };
        let balance = BalanceConfig {
            p_ideal: TargetRatio::Uniform(pick(solver.p_ideal, &file, "p-ideal", default_p)?),
            lambda: pick(solver.lambda, &file, "lambda", d.lambda)?,
            learning_rate: pick(solver.lr, &file, "lr", d.learning_rate)?,
            iterations: pick(solver.iters, &file, "iters", d.iterations)?,
            scale_constant: pick(solver.scale, &file, "scale", d.scale_constant)?,
            seed,
        };
        balance.validate()?;
        let target_fraction = match solver.target_fraction {
            Some(f) => Some(f),
            None => file.get("target-fraction")?,
        };
        let threshold = pick(threshold, &file, "threshold", DEFAULT_THRESHOLD)?;
        let out = pick(common.out.clone(), &file, "out", PathBuf::from("."))?;
        Ok(Self { balance, target_fraction, threshold, seed, out })
    }
}

#[derive(Debug, Clone, Serialize)]
struct BalanceSnapshot {
    p_ideal: f64,
    lambda: f64,
    learning_rate: f64,
    iterations: usize,
    scale_constant: f64,
    target_fraction: Option<f64>,
    seed: u64,
}

impl BalanceSnapshot {
    fn of(s: &Settings) -> Self {
        let p_ideal = match &s.balance.p_ideal {
            TargetRatio::Uniform(p) => *p,
            TargetRatio::PerLabel(_) => f64::NAN,
        };
        Self {
            p_ideal,
            lambda: s.balance.lambda,
            learning_rate: s.balance.learning_rate,
            iterations: s.balance.iterations,
            scale_constant: s.balance.scale_constant,
            target_fraction: s.target_fraction,
            seed: s.balance.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct TrainSnapshot {
    epochs: usize,
    schedules: BTreeMap<String, String>,
    learning_rate: f64,
    focal_gamma: f64,
    batch_size: usize,
    seed: u64,
}

#[derive(Debug, Clone, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// Provenance record written next to every command's artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    /// Unix seconds.
    timestamp: u64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    balance: Option<BalanceSnapshot>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train: Option<TrainSnapshot>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    notes: BTreeMap<String, String>,
}

/// Per-invocation context supplied by the binary.
#[derive(Debug, Clone, Copy)]
pub struct RunContext {
    pub timestamp: u64,
}

impl RunContext {
    /// `SOURCE_DATE_EPOCH` if set, else the current time.
    pub fn from_env() -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs())
            });
        Self { timestamp }
    }
}

struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Outputs {
    fn new(dir: &Path, command: &'static str, ctx: RunContext, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                tool: "dai",
                version: env!("CARGO_PKG_VERSION"),
                command,
                timestamp: ctx.timestamp,
                seed,
                balance: None,
                threshold: None,
                train: None,
                inputs: Vec::new(),
                outputs: Vec::new(),
                notes: BTreeMap::new(),
            },
        })
    }

    fn input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.manifest.inputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.manifest.outputs.push(FileDigest { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(path)
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.manifest.notes.insert(key.to_string(), value.to_string());
    }

    fn finish(self) -> Result<()> {
        let path = self.dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn parse_labels(out: &mut Outputs, path: &Path) -> Result<LabelMatrix> {
    let bytes = out.input(path)?;
    LabelMatrix::from_csv_bytes(&bytes).map_err(|e| e.with_path(path))
}

fn parse_weights(out: &mut Outputs, path: &Path) -> Result<WeightsTable> {
    let bytes = out.input(path)?;
    WeightsTable::from_csv_bytes(&bytes).map_err(|e| e.with_path(path))
}

/// Reorder a weights table to the label matrix's sample order, checking ids match one-to-one.
pub fn align_weights(labels: &LabelMatrix, table: &WeightsTable) -> Result<WeightsTable> {
    let mut position = BTreeMap::new();
    for (k, id) in table.sample_ids.iter().enumerate() {
        if position.insert(id.as_str(), k).is_some() {
            return Err(Error::Consistency(format!("weights file lists sample {id:?} twice")));
        }
    }
    let mut weights = Vec::with_capacity(labels.n_samples());
    let mut counts = Vec::with_capacity(labels.n_samples());
    for id in labels.sample_ids() {
        let k = position
            .remove(id.as_str())
            .ok_or_else(|| Error::Consistency(format!("sample {id:?} has no row in the weights file")))?;
        weights.push(table.weights[k]);
        counts.push(table.counts[k]);
    }
    if let Some(extra) = position.keys().next() {
        return Err(Error::Consistency(format!("weights file has unknown sample {extra:?}")));
    }
    WeightsTable::new(
        labels.sample_ids().to_vec(),
        crate::optimizer::WeightVector::new(weights)?,
        crate::optimizer::ReplicationCounts::new(counts)?,
    )
}

/// Reorder predictions to the label matrix's sample order; attribute names must match exactly.
pub fn align_predictions(labels: &LabelMatrix, preds: &PredictionMatrix) -> Result<PredictionMatrix> {
    if preds.attribute_names() != labels.attribute_names() {
        return Err(Error::Consistency("prediction attributes differ from label attributes".into()));
    }
    if preds.n_samples() != labels.n_samples() {
        return Err(Error::Consistency(format!(
            "{} prediction rows for {} label rows",
            preds.n_samples(),
            labels.n_samples()
        )));
    }
    let n = labels.n_attributes();
    let mut position = BTreeMap::new();
    for (k, id) in preds.sample_ids().iter().enumerate() {
        if position.insert(id.as_str(), k).is_some() {
            return Err(Error::Consistency(format!("predictions list sample {id:?} twice")));
        }
    }
    let mut scores = Vec::with_capacity(preds.scores().len());
    for id in labels.sample_ids() {
        let k = *position
            .get(id.as_str())
            .ok_or_else(|| Error::Consistency(format!("sample {id:?} has no prediction")))?;
        scores.extend_from_slice(&preds.scores()[k * n..(k + 1) * n]);
    }
    PredictionMatrix::new(labels.sample_ids().to_vec(), labels.attribute_names().to_vec(), scores, preds.threshold())
}

fn ratio_line(label: &str, ratios: &[f64]) -> String {
    let cells: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    format!("{label:>8}: {}", cells.join(" "))
}

/// Parse arguments and run one command.
pub fn run(cli: Cli, ctx: RunContext) -> Result<()> {
    match cli.command {
        Command::Balance { labels, solver, common } => cmd_balance(&labels, &Settings::resolve(&solver, &common, None)?, ctx),
        Command::Sample { labels, weights, common } => {
            cmd_sample(&labels, &weights, &Settings::resolve(&SolverFlags::default(), &common, None)?, ctx)
        }
        Command::Eval { labels, predictions, threshold, common } => {
            cmd_eval(&labels, &predictions, &Settings::resolve(&SolverFlags::default(), &common, threshold)?, ctx)
        }
        Command::Report { before, after, weights, p_ideal, common } => {
            let solver = SolverFlags { p_ideal, ..Default::default() };
            let settings = Settings::resolve(&solver, &common, None)?;
            cmd_report(&before, after.as_deref(), weights.as_deref(), &settings, ctx)
        }
        Command::Synth { rows, labels, min_ratio, max_ratio, common } => {
            let settings = Settings::resolve(&SolverFlags::default(), &common, None)?;
            cmd_synth(rows, labels, min_ratio, max_ratio, &settings, ctx)
        }
        Command::Demo { solver, common } => {
            let mut settings = Settings::resolve(&solver, &common, None)?;
            if settings.target_fraction.is_none() && solver.scale.is_none() {
                settings.target_fraction = BenchmarkConfig::default().target_fraction;
            }
            cmd_demo(&settings, ctx)
        }
    }
}

/// Solve, integerize, and write `weights.csv`.
pub fn cmd_balance(labels_path: &Path, settings: &Settings, ctx: RunContext) -> Result<()> {
    let mut out = Outputs::new(&settings.out, "balance", ctx, settings.seed)?;
    out.manifest.balance = Some(BalanceSnapshot::of(settings));
    let labels = parse_labels(&mut out, labels_path)?;
    let weights = optimize(&labels, &settings.balance)?;
    let scale = match settings.target_fraction {
        Some(f) => {
            let choice = find_scale_for_fraction(&weights, f, labels.n_samples())?;
            out.note("target_fraction", f);
            out.note("achieved_fraction", format!("{:.6}", choice.achieved_fraction));
            choice.scale
        }
        None => settings.balance.scale_constant,
    };
    out.note("scale_used", scale);
    let counts = integerize(&weights, scale)?;
    let predicted = weighted_positive_ratio(&labels, &counts.as_weights())?;
    let table = WeightsTable::new(labels.sample_ids().to_vec(), weights, counts)?;
    out.write("weights.csv", &table.to_csv_bytes())?;

    let before = labels.column_means();
    println!("samples: {} -> {} (fraction {:.4}, scale {scale:.6})", labels.n_samples(), table.counts.total(), table.counts.total() as f64 / labels.n_samples() as f64);
    println!("{}", ratio_line("before", &before));
    println!("{}", ratio_line("after", &predicted));
    println!("std: {:.4} -> {:.4}; min: {:.4} -> {:.4}", before.std_dev(), predicted.std_dev(), before.min(), predicted.min());
    out.finish()
}

/// Materialize the sub-balance set described by a weights file.
pub fn cmd_sample(labels_path: &Path, weights_path: &Path, settings: &Settings, ctx: RunContext) -> Result<()> {
    let mut out = Outputs::new(&settings.out, "sample", ctx, settings.seed)?;
    let labels = parse_labels(&mut out, labels_path)?;
    let table = align_weights(&labels, &parse_weights(&mut out, weights_path)?)?;
    let (expanded, index) = materialize(&labels, &table.counts)?;
    out.write("sub_balance.csv", &expanded.to_csv_bytes())?;
    let index_path = out.dir.join("index.csv");
    save_index(&index, &index_path)?;
    out.manifest.outputs.push(FileDigest { path: "index.csv".into(), sha256: sha256_hex(&index.to_csv_bytes()) });
    out.note("source_sha256", index.source_checksum());
    println!("sub-balance rows: {}", expanded.n_samples());
    println!("{}", ratio_line("ratios", &expanded.column_means()));
    out.finish()
}

/// Write `metrics.json` and `metric_vs_ratio.csv`.
pub fn cmd_eval(labels_path: &Path, preds_path: &Path, settings: &Settings, ctx: RunContext) -> Result<()> {
    let mut out = Outputs::new(&settings.out, "eval", ctx, settings.seed)?;
    out.manifest.threshold = Some(settings.threshold);
    let labels = parse_labels(&mut out, labels_path)?;
    out.input(preds_path)?;
    let preds = align_predictions(&labels, &load_predictions_csv(preds_path, settings.threshold)?)?;
    let report = MetricsReport::evaluate(&preds, &labels)?;
    out.write("metrics.json", &report.to_json_bytes())?;
    out.write("metric_vs_ratio.csv", &metric_table_csv(&metric_vs_ratio_table(&preds, &labels)?))?;
    println!(
        "mA {:.4}  F1 {:.4}  Recall {:.4}  Prec {:.4}  Accu {:.4}",
        report.mean_accuracy, report.example_f1, report.example_recall, report.example_precision, report.example_accuracy
    );
    out.finish()
}

/// Write `balance_report.json` and `balance_report.csv`.
pub fn cmd_report(
    before_path: &Path,
    after_path: Option<&Path>,
    weights_path: Option<&Path>,
    settings: &Settings,
    ctx: RunContext,
) -> Result<()> {
    let mut out = Outputs::new(&settings.out, "report", ctx, settings.seed)?;
    let before = parse_labels(&mut out, before_path)?;
    let p_ideal = settings.balance.p_ideal.resolve(before.n_attributes())?;
    let report = match (after_path, weights_path) {
        (Some(a), _) => {
            let after = parse_labels(&mut out, a)?;
            BalanceReport::compare(&before, &after, &p_ideal)?
        }
        (None, Some(w)) => {
            let table = align_weights(&before, &parse_weights(&mut out, w)?)?;
            BalanceReport::from_counts(&before, &table.counts, &p_ideal)?
        }
        (None, None) => return Err(Error::invalid("report needs --after or --weights")),
    };
    out.write("balance_report.json", &report.to_json_bytes())?;
    out.write("balance_report.csv", &report.to_csv_bytes())?;
    println!("{}", ratio_line("before", &report.before));
    println!("{}", ratio_line("after", &report.after));
    out.finish()
}

/// Write a synthetic `labels.csv` with ratios evenly spread over `[min_ratio, max_ratio]`.
pub fn cmd_synth(rows: usize, labels: usize, min_ratio: f64, max_ratio: f64, settings: &Settings, ctx: RunContext) -> Result<()> {
    let mut out = Outputs::new(&settings.out, "synth", ctx, settings.seed)?;
    let ratios = RatioVector::linspace(min_ratio, max_ratio, labels)?;
    let matrix = synth_generate(rows, labels, &ratios, derive_seed(settings.seed, streams::GENERATION))?;
    let path = out.dir.join("labels.csv");
    save_label_csv(&matrix, &path)?;
    out.manifest.outputs.push(FileDigest { path: "labels.csv".into(), sha256: matrix.checksum() });
    out.note("rows", rows);
    out.note("labels", labels);
    out.note("min_ratio", min_ratio);
    out.note("max_ratio", max_ratio);
    println!("wrote {} ({} x {})", path.display(), rows, labels);
    out.finish()
}

/// Run the benchmark ablation and write the method table and plot data.
pub fn cmd_demo(settings: &Settings, ctx: RunContext) -> Result<()> {
    let mut out = Outputs::new(&settings.out, "demo", ctx, settings.seed)?;
    let config = BenchmarkConfig {
        balance: settings.balance.clone(),
        target_fraction: settings.target_fraction,
        ..BenchmarkConfig::default()
    };
    out.manifest.balance = Some(BalanceSnapshot::of(settings));
    let train = &config.train;
    let schedules = METHODS
        .iter()
        .map(|m| {
            let s = if *m == "dai" { TrainConfig { schedule: config.dai_schedule.clone(), ..train.clone() } } else { train.clone() };
            (m.to_string(), s.schedule_string())
        })
        .collect();
    out.manifest.train = Some(TrainSnapshot {
        epochs: train.epochs,
        schedules,
        learning_rate: train.learning_rate,
        focal_gamma: train.focal_gamma,
        batch_size: train.batch_size,
        seed: derive_seed(settings.seed, streams::SHUFFLE),
    });

    let outcome = run_benchmark(&config, settings.seed)?;
    out.note("samples", config.samples);
    out.note("labels", config.labels);
    out.note("features", config.features);
    out.note("scale_used", outcome.scale.scale);
    out.note("achieved_fraction", format!("{:.6}", outcome.scale.achieved_fraction));

    out.write("summary.json", &outcome.summary_json())?;
    out.write("balance_report.json", &outcome.balance.to_json_bytes())?;
    out.write("balance_report.csv", &outcome.balance.to_csv_bytes())?;
    out.write("per_label_ma.csv", &outcome.per_label_ma_csv())?;
    out.write("index.csv", &outcome.sub_index.to_csv_bytes())?;

    println!("{:<14} {:>7} {:>7} {:>7} {:>7} {:>7}", "method", "mA", "F1", "Recall", "Prec", "Accu");
    for r in outcome.summary().rows {
        println!(
            "{:<14} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4}",
            r.method, r.ma, r.f1, r.recall, r.precision, r.accuracy
        );
    }
    out.finish()
}
