//! The end-to-end ablation on a synthetic task: baseline, weighted loss,
//! focal loss, and alternating training on the sub-balance dataset.

use serde::Serialize;

use crate::dataset::{benchmark_ratios, LabelMatrix};
use crate::derive_seed;
use crate::error::Result;
use crate::json::{fixed6, to_json_bytes};
use crate::metrics::{BalanceReport, MetricsReport};
use crate::optimizer::{find_scale_for_fraction, integerize, optimize, BalanceConfig, ScaleChoice};
use crate::resample::SubBalanceIndex;
use crate::trainer::{evaluate, synth_task, train, LossKind, Phase, Task, TrainConfig};

/// Named sub-seed streams derived from one run seed.
pub mod streams {
    pub const GENERATION: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const SAMPLING: u64 = 3;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub samples: usize,
    pub labels: usize,
    pub features: usize,
    pub balance: BalanceConfig,
    /// Sub-balance size as a fraction of the training split; `None` uses `balance.scale_constant`.
    pub target_fraction: Option<f64>,
    /// Shared by every method; `loss` and `schedule` are overridden per method.
    pub train: TrainConfig,
    pub dai_schedule: Vec<Phase>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            samples: 5000,
            labels: 20,
            features: 40,
            balance: BalanceConfig::default(),
            target_fraction: Some(0.4),
            train: TrainConfig::default(),
            dai_schedule: vec![Phase::Sub, Phase::Full],
        }
    }
}

/// The four compared methods, in table order.
pub const METHODS: [&str; 4] = ["baseline", "weighted-loss", "focal", "dai"];

/// One row of the method × metric table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRow {
    pub method: String,
    #[serde(rename = "mA", serialize_with = "fixed6")]
    pub ma: f64,
    #[serde(rename = "F1", serialize_with = "fixed6")]
    pub f1: f64,
    #[serde(rename = "Recall", serialize_with = "fixed6")]
    pub recall: f64,
    #[serde(rename = "Prec", serialize_with = "fixed6")]
    pub precision: f64,
    #[serde(rename = "Accu", serialize_with = "fixed6")]
    pub accuracy: f64,
}

impl MethodRow {
    fn from_report(method: &str, r: &MetricsReport) -> Self {
        Self {
            method: method.to_string(),
            ma: r.mean_accuracy,
            f1: r.example_f1,
            recall: r.example_recall,
            precision: r.example_precision,
            accuracy: r.example_accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub rows: Vec<MethodRow>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub seed: u64,
    pub task: Task,
    pub scale: ScaleChoice,
    pub sub_index: SubBalanceIndex,
    pub balance: BalanceReport,
    /// Held-out reports, in [`METHODS`] order.
    pub reports: Vec<MetricsReport>,
}

impl BenchmarkOutcome {
    pub fn summary(&self) -> Summary {
        Summary {
            seed: self.seed,
            rows: METHODS.iter().zip(&self.reports).map(|(m, r)| MethodRow::from_report(m, r)).collect(),
        }
    }

    pub fn report(&self, method: &str) -> Option<&MetricsReport> {
        METHODS.iter().position(|m| *m == method).map(|k| &self.reports[k])
    }

    pub fn summary_json(&self) -> Vec<u8> {
        to_json_bytes(&self.summary())
    }

    /// Per-label held-out mA of every method: `attribute,positive_ratio,<methods...>`.
    pub fn per_label_ma_csv(&self) -> Vec<u8> {
        let base = &self.reports[0];
        let mut out = format!("attribute,positive_ratio,{}\n", METHODS.join(","));
        for (j, name) in base.attribute_names.iter().enumerate() {
            out.push_str(&format!("{name},{:.6}", self.balance.before[j]));
            for r in &self.reports {
                out.push_str(&format!(",{:.6}", r.per_label_ma[j]));
            }
            out.push('\n');
        }
        out.into_bytes()
    }
}

/// Build the sub-balance index of `labels` under `config`.
pub fn build_sub_balance(
    labels: &LabelMatrix,
    balance: &BalanceConfig,
    target_fraction: Option<f64>,
) -> Result<(ScaleChoice, SubBalanceIndex)> {
    let weights = optimize(labels, balance)?;
    let scale = match target_fraction {
        Some(f) => find_scale_for_fraction(&weights, f, labels.n_samples())?,
        None => {
            let counts = integerize(&weights, balance.scale_constant)?;
            let total = counts.total();
            ScaleChoice {
                scale: balance.scale_constant,
                total,
                achieved_fraction: total as f64 / labels.n_samples() as f64,
            }
        }
    };
    let counts = integerize(&weights, scale.scale)?;
    Ok((scale, SubBalanceIndex::from_counts(labels, &counts)?))
}

/// Generate the task for `seed`, train the four methods and score them on the held-out split.
pub fn run_benchmark(config: &BenchmarkConfig, seed: u64) -> Result<BenchmarkOutcome> {
    let task = synth_task(
        config.samples,
        config.labels,
        config.features,
        &benchmark_ratios(config.labels),
        derive_seed(seed, streams::GENERATION),
    )?;
    let (scale, sub_index) = build_sub_balance(&task.train_labels, &config.balance, config.target_fraction)?;
    let counts = sub_index.counts(task.train_labels.n_samples())?;
    let p_ideal = config.balance.p_ideal.resolve(config.labels)?;
    let balance = BalanceReport::from_counts(&task.train_labels, &counts, &p_ideal)?;

    let base = TrainConfig { seed: derive_seed(seed, streams::SHUFFLE), ..config.train.clone() };
    let runs = [
        (vec![Phase::Full], LossKind::PlainBce),
        (vec![Phase::Full], LossKind::WeightedBce),
        (vec![Phase::Full], LossKind::Focal),
        (config.dai_schedule.clone(), LossKind::PlainBce),
    ];
    let mut reports = Vec::with_capacity(runs.len());
    for (schedule, loss) in runs {
        let cfg = TrainConfig { schedule, loss, ..base.clone() };
        let model = train(&task.train_features, &task.train_labels, Some(&sub_index), &cfg)?;
        reports.push(evaluate(&model, &task.test_features, &task.test_labels)?);
    }
    Ok(BenchmarkOutcome { seed, task, scale, sub_index, balance, reports })
}
