//! Label-based mean accuracy, example-based accuracy/precision/recall/F1,
//! and per-label balance diagnostics.
//!
//! Conventions for empty sets and degenerate labels:
//!
//! * mA: when a label has no ground-truth positives, its TPR term is 1 if the
//!   label is never predicted positive and 0 otherwise; symmetrically for TNR
//!   when it has no negatives.
//! * Example-based: an example with empty truth and empty prediction scores 1
//!   on accuracy, precision and recall. Empty prediction with non-empty truth
//!   gives precision 0; empty truth with non-empty prediction gives recall 0.
//! * F1 is `2PR / (P + R)` over the averaged precision and recall, 0 when both are 0.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::dataset::{csv_error, weighted_positive_ratio, LabelMatrix, RatioVector};
use crate::error::{Error, Result};
use crate::json::{fixed6, fixed6_vec, to_json_bytes};
use crate::optimizer::ReplicationCounts;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Per-sample, per-label scores in `[0, 1]`; positive iff `score >= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    sample_ids: Vec<String>,
    attribute_names: Vec<String>,
    scores: Vec<f64>,
    threshold: f64,
}

impl PredictionMatrix {
    pub fn new(sample_ids: Vec<String>, attribute_names: Vec<String>, scores: Vec<f64>, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::invalid(format!("threshold must lie in (0, 1), got {threshold}")));
        }
        if scores.len() != sample_ids.len() * attribute_names.len() {
            return Err(Error::invalid(format!(
                "expected {} scores, got {}",
                sample_ids.len() * attribute_names.len(),
                scores.len()
            )));
        }
        if let Some(pos) = scores.iter().position(|s| !(0.0..=1.0).contains(s)) {
            let n = attribute_names.len().max(1);
            return Err(Error::invalid(format!(
                "score at row {}, column {} is {}, outside [0, 1]",
                pos / n,
                pos % n,
                scores[pos]
            )));
        }
        Ok(Self { sample_ids, attribute_names, scores, threshold })
    }

    /// Hard 0/1 predictions copied from a label matrix.
    pub fn from_labels(labels: &LabelMatrix, threshold: f64) -> Result<Self> {
        Self::new(
            labels.sample_ids().to_vec(),
            labels.attribute_names().to_vec(),
            labels.entries().iter().map(|&v| f64::from(v)).collect(),
            threshold,
        )
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::invalid(format!("threshold must lie in (0, 1), got {threshold}")));
        }
        self.threshold = threshold;
        Ok(self)
    }

    #[inline]
    pub fn predicted(&self, row: usize, col: usize) -> bool {
        self.scores[row * self.n_attributes() + col] >= self.threshold
    }

    /// Parse a prediction CSV: header `sample_id,<attrs>`, cells are reals in `[0, 1]`.
    pub fn from_csv_bytes(bytes: &[u8], threshold: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(bytes);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(rec) => rec.map_err(csv_error)?,
            None => return Err(Error::parse(1, None, "empty file, expected header `sample_id,<attributes...>`")),
        };
        if header.get(0) != Some("sample_id") || header.len() < 2 {
            return Err(Error::parse(1, Some(1), "header must be `sample_id` followed by attribute names"));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let n = names.len();
        let mut ids = Vec::new();
        let mut scores = Vec::new();
        for rec in records {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != n + 1 {
                return Err(Error::parse(line, None, format!("expected {} fields, found {}", n + 1, rec.len())));
            }
            for (j, cell) in rec.iter().enumerate().skip(1) {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::parse(line, Some(j + 1), format!("expected a real, found {cell:?}")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::parse(line, Some(j + 1), format!("score {v} outside [0, 1]")));
                }
                scores.push(v);
            }
            ids.push(rec[0].to_owned());
        }
        if ids.is_empty() {
            return Err(Error::parse(1, None, "no sample rows after header"));
        }
        Self::new(ids, names, scores, threshold)
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let header = std::iter::once("sample_id").chain(self.attribute_names.iter().map(String::as_str));
        wtr.write_record(header).expect("in-memory write");
        for (id, row) in self.sample_ids.iter().zip(self.scores.chunks_exact(self.n_attributes())) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|s| s.to_string()));
            wtr.write_record(&rec).expect("in-memory write");
        }
        wtr.into_inner().expect("in-memory flush")
    }
}

pub fn load_predictions_csv(path: impl AsRef<Path>, threshold: f64) -> Result<PredictionMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    PredictionMatrix::from_csv_bytes(&bytes, threshold).map_err(|e| e.with_path(path))
}

fn check_shapes(preds: &PredictionMatrix, labels: &LabelMatrix) -> Result<()> {
    if preds.n_samples() != labels.n_samples() || preds.n_attributes() != labels.n_attributes() {
        return Err(Error::Consistency(format!(
            "predictions are {}x{}, labels are {}x{}",
            preds.n_samples(),
            preds.n_attributes(),
            labels.n_samples(),
            labels.n_attributes()
        )));
    }
    Ok(())
}

/// Confusion counts of one label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn true_positive_rate(&self) -> f64 {
        rate(self.tp, self.positives(), self.fp == 0)
    }

    pub fn true_negative_rate(&self) -> f64 {
        rate(self.tn, self.negatives(), self.fn_ == 0)
    }

    /// `(TPR + TNR) / 2`.
    pub fn mean_accuracy(&self) -> f64 {
        0.5 * (self.true_positive_rate() + self.true_negative_rate())
    }

    pub fn precision(&self) -> f64 {
        rate(self.tp, self.tp + self.fp, self.fn_ == 0)
    }

    pub fn recall(&self) -> f64 {
        rate(self.tp, self.positives(), self.fp == 0)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }

    /// True when the label has no ground-truth positives or no negatives.
    pub fn is_degenerate(&self) -> bool {
        self.positives() == 0 || self.negatives() == 0
    }
}

/// `num / den`, or 1/0 by `empty_is_perfect` when `den` is 0.
fn rate(num: u64, den: u64, empty_is_perfect: bool) -> f64 {
    if den == 0 {
        if empty_is_perfect {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

pub fn confusion_per_label(preds: &PredictionMatrix, labels: &LabelMatrix) -> Result<Vec<Confusion>> {
    check_shapes(preds, labels)?;
    let mut out = vec![Confusion::default(); labels.n_attributes()];
    for i in 0..labels.n_samples() {
        for (j, c) in out.iter_mut().enumerate() {
            match (labels.get(i, j) == 1, preds.predicted(i, j)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    Ok(out)
}

/// Overall mA and the per-label values it averages.
pub fn mean_accuracy(preds: &PredictionMatrix, labels: &LabelMatrix) -> Result<(f64, Vec<f64>)> {
    let per_label: Vec<f64> = confusion_per_label(preds, labels)?.iter().map(Confusion::mean_accuracy).collect();
    let overall = per_label.iter().sum::<f64>() / per_label.len() as f64;
    Ok((overall, per_label))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExampleMetrics {
    #[serde(serialize_with = "fixed6")]
    pub accuracy: f64,
    #[serde(serialize_with = "fixed6")]
    pub precision: f64,
    #[serde(serialize_with = "fixed6")]
    pub recall: f64,
    #[serde(serialize_with = "fixed6")]
    pub f1: f64,
}

/// Set-overlap metrics per example, averaged over examples.
pub fn example_based(preds: &PredictionMatrix, labels: &LabelMatrix) -> Result<ExampleMetrics> {
    check_shapes(preds, labels)?;
    let (mut acc, mut prec, mut rec) = (0.0, 0.0, 0.0);
    for i in 0..labels.n_samples() {
        let (mut inter, mut union, mut truth, mut predicted) = (0u64, 0u64, 0u64, 0u64);
        for j in 0..labels.n_attributes() {
            let y = labels.get(i, j) == 1;
            let yhat = preds.predicted(i, j);
            inter += u64::from(y && yhat);
            union += u64::from(y || yhat);
            truth += u64::from(y);
            predicted += u64::from(yhat);
        }
        acc += rate(inter, union, true);
        prec += rate(inter, predicted, truth == 0);
        rec += rate(inter, truth, predicted == 0);
    }
    let m = labels.n_samples() as f64;
    let (precision, recall) = (prec / m, rec / m);
    Ok(ExampleMetrics { accuracy: acc / m, precision, recall, f1: f1(precision, recall) })
}

/// The five evaluation metrics plus per-label detail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    #[serde(serialize_with = "fixed6")]
    pub threshold: f64,
    #[serde(rename = "mA", serialize_with = "fixed6")]
    pub mean_accuracy: f64,
    #[serde(serialize_with = "fixed6")]
    pub example_accuracy: f64,
    #[serde(serialize_with = "fixed6")]
    pub example_precision: f64,
    #[serde(serialize_with = "fixed6")]
    pub example_recall: f64,
    #[serde(serialize_with = "fixed6")]
    pub example_f1: f64,
    pub attribute_names: Vec<String>,
    #[serde(rename = "per_label_mA", serialize_with = "fixed6_vec")]
    pub per_label_ma: Vec<f64>,
    #[serde(serialize_with = "fixed6_vec")]
    pub per_label_positive_ratio: Vec<f64>,
    /// Labels whose ground truth is all positive or all negative.
    pub degenerate_labels: Vec<String>,
}

impl MetricsReport {
    pub fn evaluate(preds: &PredictionMatrix, labels: &LabelMatrix) -> Result<Self> {
        let confusion = confusion_per_label(preds, labels)?;
        let (ma, per_label_ma) = mean_accuracy(preds, labels)?;
        let ex = example_based(preds, labels)?;
        let degenerate_labels = confusion
            .iter()
            .zip(labels.attribute_names())
            .filter(|(c, _)| c.is_degenerate())
            .map(|(_, name)| name.clone())
            .collect();
        Ok(Self {
            threshold: preds.threshold(),
            mean_accuracy: ma,
            example_accuracy: ex.accuracy,
            example_precision: ex.precision,
            example_recall: ex.recall,
            example_f1: ex.f1,
            attribute_names: labels.attribute_names().to_vec(),
            per_label_ma,
            per_label_positive_ratio: labels.column_means().into_inner(),
            degenerate_labels,
        })
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        to_json_bytes(self)
    }
}

/// One label's row of the metric-versus-positive-ratio table.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMetricRow {
    pub attribute: String,
    pub positive_ratio: f64,
    pub mean_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Label-based metrics next to each label's positive ratio.
pub fn metric_vs_ratio_table(preds: &PredictionMatrix, labels: &LabelMatrix) -> Result<Vec<LabelMetricRow>> {
    let confusion = confusion_per_label(preds, labels)?;
    let ratios = labels.column_means();
    Ok(confusion
        .iter()
        .zip(labels.attribute_names())
        .zip(ratios.iter())
        .map(|((c, name), &ratio)| LabelMetricRow {
            attribute: name.clone(),
            positive_ratio: ratio,
            mean_accuracy: c.mean_accuracy(),
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
        })
        .collect())
}

pub fn metric_table_csv(rows: &[LabelMetricRow]) -> Vec<u8> {
    let mut out = String::from("attribute,positive_ratio,mA,precision,recall,f1\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.attribute, r.positive_ratio, r.mean_accuracy, r.precision, r.recall, r.f1
        ));
    }
    out.into_bytes()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioSummary {
    #[serde(serialize_with = "fixed6")]
    pub min: f64,
    #[serde(serialize_with = "fixed6")]
    pub max: f64,
    #[serde(serialize_with = "fixed6")]
    pub std_dev: f64,
    pub below_target: usize,
}

impl RatioSummary {
    pub fn of(ratios: &RatioVector, p_ideal: &[f64]) -> Self {
        Self {
            min: ratios.min(),
            max: ratios.max(),
            std_dev: ratios.std_dev(),
            below_target: ratios.iter().zip(p_ideal).filter(|(p, t)| p < t).count(),
        }
    }
}

/// Per-label positive ratios before and after re-sampling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub attribute_names: Vec<String>,
    #[serde(serialize_with = "fixed6_vec")]
    pub p_ideal: Vec<f64>,
    pub samples_before: u64,
    pub samples_after: u64,
    #[serde(serialize_with = "fixed6_vec")]
    pub before: Vec<f64>,
    #[serde(serialize_with = "fixed6_vec")]
    pub after: Vec<f64>,
    pub summary_before: RatioSummary,
    pub summary_after: RatioSummary,
}

impl BalanceReport {
    /// Compare two matrices over the same attributes.
    pub fn compare(before: &LabelMatrix, after: &LabelMatrix, p_ideal: &[f64]) -> Result<Self> {
        if before.attribute_names() != after.attribute_names() {
            return Err(Error::Consistency("before and after matrices have different attributes".into()));
        }
        Self::build(before, after.column_means(), after.n_samples() as u64, p_ideal)
    }

    /// Compare a matrix with its replication by `counts`, without materializing it.
    pub fn from_counts(before: &LabelMatrix, counts: &ReplicationCounts, p_ideal: &[f64]) -> Result<Self> {
        let after = weighted_positive_ratio(before, &counts.as_weights())?;
        Self::build(before, after, counts.total(), p_ideal)
    }

    fn build(before: &LabelMatrix, after: RatioVector, samples_after: u64, p_ideal: &[f64]) -> Result<Self> {
        if p_ideal.len() != before.n_attributes() {
            return Err(Error::invalid(format!(
                "{} targets given for {} attributes",
                p_ideal.len(),
                before.n_attributes()
            )));
        }
        let before_ratios = before.column_means();
        Ok(Self {
            attribute_names: before.attribute_names().to_vec(),
            p_ideal: p_ideal.to_vec(),
            samples_before: before.n_samples() as u64,
            samples_after,
            summary_before: RatioSummary::of(&before_ratios, p_ideal),
            summary_after: RatioSummary::of(&after, p_ideal),
            before: before_ratios.into_inner(),
            after: after.into_inner(),
        })
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.after.iter().zip(&self.before).map(|(a, b)| a - b).collect()
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        to_json_bytes(self)
    }

    /// One row per label: `attribute,before,after,delta`.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = String::from("attribute,before,after,delta\n");
        for ((name, b), a) in self.attribute_names.iter().zip(&self.before).zip(&self.after) {
            out.push_str(&format!("{name},{b:.6},{a:.6},{:.6}\n", a - b));
        }
        out.into_bytes()
    }
}
