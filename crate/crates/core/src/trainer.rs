//! Multi-label logistic regression trained with mini-batch gradient descent,
//! used to measure how sub-balance sampling changes downstream metrics.
//!
//! One independent sigmoid output per label. A training schedule alternates
//! epochs over the sub-balance dataset ([`Phase::Sub`]) and the full training
//! set ([`Phase::Full`]).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::{LabelMatrix, RatioVector};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::metrics::{MetricsReport, PredictionMatrix, DEFAULT_THRESHOLD};
use crate::resample::SubBalanceIndex;

/// Real-valued per-sample features, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    sample_ids: Vec<String>,
    dim: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(sample_ids: Vec<String>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be positive"));
        }
        if values.len() != sample_ids.len() * dim {
            return Err(Error::invalid(format!(
                "expected {} feature values, got {}",
                sample_ids.len() * dim,
                values.len()
            )));
        }
        Ok(Self { sample_ids, dim, values })
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Which dataset an epoch trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Sub,
    Full,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Sub => "SUB",
            Phase::Full => "FULL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    PlainBce,
    /// Positive term of label `j` scaled by `(1 − q_j) / q_j`, `q_j` the training positive ratio.
    WeightedBce,
    /// `(1 − p_t)^γ · BCE`.
    Focal,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::PlainBce => "plain-bce",
            LossKind::WeightedBce => "weighted-bce",
            LossKind::Focal => "focal",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain-bce" => Ok(LossKind::PlainBce),
            "weighted-bce" => Ok(LossKind::WeightedBce),
            "focal" => Ok(LossKind::Focal),
            other => Err(Error::invalid(format!("unknown loss {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Cycled over epochs: epoch `e` uses `schedule[e % len]`.
    pub schedule: Vec<Phase>,
    pub learning_rate: f64,
    pub loss: LossKind,
    pub focal_gamma: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            schedule: vec![Phase::Full],
            learning_rate: 0.5,
            loss: LossKind::PlainBce,
            focal_gamma: 2.0,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return Err(Error::invalid("training schedule is empty"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.focal_gamma >= 0.0 && self.focal_gamma.is_finite()) {
            return Err(Error::invalid(format!("focal gamma must be nonnegative, got {}", self.focal_gamma)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        Ok(())
    }

    /// Schedule as text, e.g. `SUB,FULL`.
    pub fn schedule_string(&self) -> String {
        self.schedule.iter().map(Phase::to_string).collect::<Vec<_>>().join(",")
    }
}

/// `d × n` weights (row-major) and `n` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    dim: usize,
    n_labels: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(dim: usize, n_labels: usize) -> Self {
        Self { dim, n_labels, weights: vec![0.0; dim * n_labels], bias: vec![0.0; n_labels] }
    }

    /// Small Gaussian weights (σ = 0.01), zero bias.
    pub fn seeded(dim: usize, n_labels: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.01).expect("valid sigma");
        let weights = (0..dim * n_labels).map(|_| normal.sample(&mut rng)).collect();
        Self { dim, n_labels, weights, bias: vec![0.0; n_labels] }
    }

    pub fn from_parts(dim: usize, n_labels: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != dim * n_labels || bias.len() != n_labels {
            return Err(Error::invalid(format!(
                "model parts do not match d={dim}, n={n_labels}: {} weights, {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self { dim, n_labels, weights, bias })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for (k, &xk) in x.iter().enumerate() {
            let w = &self.weights[k * self.n_labels..(k + 1) * self.n_labels];
            for (o, &wkj) in out.iter_mut().zip(w) {
                *o += xk * wkj;
            }
        }
    }

    /// Sigmoid scores for every sample and label.
    pub fn predict_proba(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_dim(features)?;
        let mut out = vec![0.0; features.n_samples() * self.n_labels];
        for (i, chunk) in out.chunks_exact_mut(self.n_labels).enumerate() {
            self.logits_into(features.row(i), chunk);
            for z in chunk.iter_mut() {
                *z = sigmoid(*z);
            }
        }
        Ok(out)
    }

    fn check_dim(&self, features: &FeatureMatrix) -> Result<()> {
        if features.dim() != self.dim {
            return Err(Error::Consistency(format!(
                "model expects {} features, matrix has {}",
                self.dim,
                features.dim()
            )));
        }
        Ok(())
    }

    fn axpy(&mut self, alpha: f64, other: &LinearModel) {
        for (w, g) in self.weights.iter_mut().zip(&other.weights) {
            *w += alpha * g;
        }
        for (b, g) in self.bias.iter_mut().zip(&other.bias) {
            *b += alpha * g;
        }
    }

    /// Model file: `# d=<d> n=<n>`, `d` rows of `n` weights, one bias row.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = format!("# d={} n={}\n", self.dim, self.n_labels);
        let join = |row: &[f64]| row.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        for row in self.weights.chunks_exact(self.n_labels) {
            out.push_str(&join(row));
            out.push('\n');
        }
        out.push_str(&join(&self.bias));
        out.push('\n');
        out.into_bytes()
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::parse(1, None, format!("not UTF-8: {e}")))?;
        let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
        let header = lines.next().unwrap_or_default();
        let (dim, n) = parse_model_header(header).ok_or_else(|| Error::parse(1, None, "expected `# d=<d> n=<n>`"))?;
        let mut rows = Vec::with_capacity(dim + 1);
        for (k, line) in lines.enumerate() {
            let lineno = k + 2;
            let row: Vec<f64> = line
                .split(',')
                .enumerate()
                .map(|(j, cell)| {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(lineno, Some(j + 1), format!("expected a finite real, found {cell:?}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::parse(lineno, None, format!("expected {n} values, found {}", row.len())));
            }
            rows.push(row);
        }
        if rows.len() != dim + 1 {
            return Err(Error::parse(rows.len() + 1, None, format!("expected {} rows, found {}", dim + 1, rows.len())));
        }
        let bias = rows.pop().expect("dim + 1 >= 1 rows");
        Self::from_parts(dim, n, rows.concat(), bias)
    }
}

fn parse_model_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix("# d=")?;
    let (d, n) = rest.split_once(" n=")?;
    let (d, n) = (d.parse().ok()?, n.parse().ok()?);
    (d > 0 && n > 0).then_some((d, n))
}

pub fn save_model(model: &LinearModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_csv_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LinearModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    LinearModel::from_csv_bytes(&bytes).map_err(|e| e.with_path(path))
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// A loss with its training-set statistics resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Loss {
    Plain,
    /// Per-label multiplier on the positive term.
    Weighted(Vec<f64>),
    Focal { gamma: f64 },
}

impl Loss {
    /// Resolve `kind` against training labels (for the weighted loss).
    pub fn resolve(kind: LossKind, focal_gamma: f64, train_labels: &LabelMatrix) -> Self {
        match kind {
            LossKind::PlainBce => Loss::Plain,
            LossKind::WeightedBce => Loss::Weighted(positive_weights(&train_labels.column_means())),
            LossKind::Focal => Loss::Focal { gamma: focal_gamma },
        }
    }

    /// Loss of one logit `z` against label `y`, and its derivative in `z`.
    fn point(&self, z: f64, y: bool, label: usize) -> (f64, f64) {
        let p = sigmoid(z);
        match self {
            Loss::Plain => {
                if y {
                    (softplus(-z), p - 1.0)
                } else {
                    (softplus(z), p)
                }
            }
            Loss::Weighted(w) => {
                if y {
                    (w[label] * softplus(-z), w[label] * (p - 1.0))
                } else {
                    (softplus(z), p)
                }
            }
            Loss::Focal { gamma } => {
                // p_t = σ(s z), s = ±1; L = −(1 − p_t)^γ log p_t.
                let s = if y { 1.0 } else { -1.0 };
                let pt = sigmoid(s * z);
                let log_pt = -softplus(-s * z);
                let one_minus = 1.0 - pt;
                let modulator = one_minus.powf(*gamma);
                let loss = -modulator * log_pt;
                let dl_dz = s * (gamma * pt * modulator * log_pt - modulator * one_minus);
                (loss, dl_dz)
            }
        }
    }
}

/// `(1 − q_j) / q_j`, or 1 where `q_j` is 0 or 1.
pub fn positive_weights(train_ratios: &RatioVector) -> Vec<f64> {
    train_ratios.iter().map(|&q| if q > 0.0 && q < 1.0 { (1.0 - q) / q } else { 1.0 }).collect()
}

/// Mean loss over every (sample, label) entry of the batch `rows`, and its
/// gradient with respect to the model parameters.
pub fn loss_value(
    model: &LinearModel,
    features: &FeatureMatrix,
    labels: &LabelMatrix,
    rows: &[usize],
    loss: &Loss,
) -> Result<(f64, LinearModel)> {
    if rows.is_empty() {
        return Err(Error::invalid("batch is empty"));
    }
    model.check_dim(features)?;
    if labels.n_attributes() != model.n_labels() {
        return Err(Error::Consistency(format!(
            "model has {} outputs, labels have {} attributes",
            model.n_labels(),
            labels.n_attributes()
        )));
    }
    let n = model.n_labels();
    let scale = 1.0 / (rows.len() * n) as f64;
    let mut grad = LinearModel::zeros(model.dim(), n);
    let mut logits = vec![0.0; n];
    let mut dz = vec![0.0; n];
    let mut total = 0.0;
    for &i in rows {
        model.logits_into(features.row(i), &mut logits);
        let y = labels.row(i);
        for j in 0..n {
            let (l, d) = loss.point(logits[j], y[j] == 1, j);
            total += l;
            dz[j] = d * scale;
        }
        for (k, &xk) in features.row(i).iter().enumerate() {
            let g = &mut grad.weights[k * n..(k + 1) * n];
            for (gj, &dj) in g.iter_mut().zip(&dz) {
                *gj += xk * dj;
            }
        }
        for (b, &dj) in grad.bias.iter_mut().zip(&dz) {
            *b += dj;
        }
    }
    Ok((total * scale, grad))
}

/// Train from [`LinearModel::seeded`] following `config.schedule`.
///
/// Each epoch shuffles its dataset with a seed derived from `config.seed` and
/// the epoch number, then takes one plain gradient step per mini-batch. The
/// sub-balance index must have been built from `labels`.
pub fn train(
    features: &FeatureMatrix,
    labels: &LabelMatrix,
    sub_index: Option<&SubBalanceIndex>,
    config: &TrainConfig,
) -> Result<LinearModel> {
    config.validate()?;
    if features.n_samples() != labels.n_samples() {
        return Err(Error::Consistency(format!(
            "{} feature rows but {} label rows",
            features.n_samples(),
            labels.n_samples()
        )));
    }
    let sub_rows: Option<Vec<usize>> = match sub_index {
        Some(index) => {
            if index.source_checksum() != labels.checksum() {
                return Err(Error::Consistency("sub-balance index was built from different labels".into()));
            }
            Some(index.source_rows().collect())
        }
        None if config.schedule.contains(&Phase::Sub) => {
            return Err(Error::invalid("schedule includes SUB epochs but no sub-balance index was given"));
        }
        None => None,
    };
    let full_rows: Vec<usize> = (0..labels.n_samples()).collect();
    let loss = Loss::resolve(config.loss, config.focal_gamma, labels);
    let mut model = LinearModel::seeded(features.dim(), labels.n_attributes(), derive_seed(config.seed, 0));

    for epoch in 0..config.epochs {
        let mut order = match config.schedule[epoch % config.schedule.len()] {
            Phase::Full => full_rows.clone(),
            Phase::Sub => sub_rows.clone().expect("checked above"),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1 + epoch as u64));
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let (value, grad) = loss_value(&model, features, labels, batch, &loss)?;
            if !value.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            model.axpy(-config.learning_rate, &grad);
        }
        if !model.is_finite() {
            return Err(Error::Divergence { epoch });
        }
    }
    Ok(model)
}

/// Score with sigmoid outputs at threshold 0.5 and compute every metric.
pub fn evaluate(model: &LinearModel, features: &FeatureMatrix, labels: &LabelMatrix) -> Result<MetricsReport> {
    let preds = predict(model, features, labels)?;
    MetricsReport::evaluate(&preds, labels)
}

/// Sigmoid scores as a prediction matrix named after `labels`.
pub fn predict(model: &LinearModel, features: &FeatureMatrix, labels: &LabelMatrix) -> Result<PredictionMatrix> {
    if features.n_samples() != labels.n_samples() {
        return Err(Error::Consistency(format!(
            "{} feature rows but {} label rows",
            features.n_samples(),
            labels.n_samples()
        )));
    }
    PredictionMatrix::new(
        labels.sample_ids().to_vec(),
        labels.attribute_names().to_vec(),
        model.predict_proba(features)?,
        DEFAULT_THRESHOLD,
    )
}

/// Standard deviation of the Gaussian noise added to ground-truth scores.
pub const LABEL_NOISE: f64 = 0.5;

/// Fraction of rows in the training split.
pub const TRAIN_FRACTION: f64 = 0.8;

/// A synthetic task with a train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub train_features: FeatureMatrix,
    pub train_labels: LabelMatrix,
    pub test_features: FeatureMatrix,
    pub test_labels: LabelMatrix,
    /// Score cut-off of each label.
    pub thresholds: Vec<f64>,
}

/// Draw a noisy linear multi-label task.
///
/// Features are i.i.d. standard normal. Label `j` is positive when
/// `x·w_j / √d + ε` clears a cut-off, where `w_j` is standard normal and
/// `ε ~ N(0, LABEL_NOISE²)`. Cut-offs are set on the training split (the first
/// 80% of rows) so its positive ratios equal `target_ratios` up to rounding;
/// the test split reuses them.
pub fn synth_task(m: usize, n: usize, d: usize, target_ratios: &RatioVector, seed: u64) -> Result<Task> {
    if m < 2 || n == 0 || d == 0 {
        return Err(Error::invalid("task needs m >= 2, n >= 1, d >= 1"));
    }
    if target_ratios.len() != n {
        return Err(Error::invalid(format!("{} target ratios given for {n} labels", target_ratios.len())));
    }
    let m_train = ((m as f64) * TRAIN_FRACTION).round() as usize;
    if m_train == 0 || m_train == m {
        return Err(Error::invalid(format!("{m} samples cannot be split 80/20")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..d * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x: Vec<f64> = (0..m * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let noise = Normal::new(0.0, LABEL_NOISE).expect("valid sigma");
    let norm = (d as f64).sqrt();
    let mut scores = vec![0.0; m * n];
    for i in 0..m {
        let xi = &x[i * d..(i + 1) * d];
        for j in 0..n {
            let s: f64 = xi.iter().enumerate().map(|(k, &v)| v * truth[k * n + j]).sum();
            scores[i * n + j] = s / norm + noise.sample(&mut rng);
        }
    }

    let mut thresholds = Vec::with_capacity(n);
    for (j, &q) in target_ratios.iter().enumerate() {
        let positives = (q * m_train as f64).round() as usize;
        if positives == 0 || positives == m_train {
            return Err(Error::Unreachable(format!(
                "target ratio {q} for label {j} rounds to {positives} of {m_train} training samples"
            )));
        }
        let mut col: Vec<f64> = (0..m_train).map(|i| scores[i * n + j]).collect();
        col.sort_by(|a, b| b.total_cmp(a));
        thresholds.push(0.5 * (col[positives - 1] + col[positives]));
    }

    let labels: Vec<u8> = scores.iter().enumerate().map(|(k, &s)| u8::from(s >= thresholds[k % n])).collect();
    let ids: Vec<String> = (0..m).map(|i| format!("s{i}")).collect();
    let names: Vec<String> = (0..n).map(|j| format!("attr{j}")).collect();
    let split = |lo: usize, hi: usize| -> Result<(FeatureMatrix, LabelMatrix)> {
        Ok((
            FeatureMatrix::new(ids[lo..hi].to_vec(), d, x[lo * d..hi * d].to_vec())?,
            LabelMatrix::new(ids[lo..hi].to_vec(), names.clone(), labels[lo * n..hi * n].to_vec())?,
        ))
    };
    let (train_features, train_labels) = split(0, m_train)?;
    let (test_features, test_labels) = split(m_train, m)?;
    Ok(Task { train_features, train_labels, test_features, test_labels, thresholds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (FeatureMatrix, LabelMatrix) {
        let task = synth_task(20, 3, 4, &RatioVector::new(vec![0.3, 0.5, 0.7]).unwrap(), 3).unwrap();
        (task.train_features, task.train_labels)
    }

    #[test]
    fn weighted_loss_with_even_ratios_is_plain() {
        let (x, y) = toy();
        let model = LinearModel::seeded(4, 3, 9);
        let rows: Vec<usize> = (0..10).collect();
        let plain = loss_value(&model, &x, &y, &rows, &Loss::Plain).unwrap();
        let weighted = loss_value(&model, &x, &y, &rows, &Loss::Weighted(positive_weights(&RatioVector::uniform(0.5, 3).unwrap()))).unwrap();
        assert_eq!(plain, weighted);
    }

    #[test]
    fn focal_with_zero_gamma_is_plain() {
        let (x, y) = toy();
        let model = LinearModel::seeded(4, 3, 9);
        let rows: Vec<usize> = (0..10).collect();
        let (lp, gp) = loss_value(&model, &x, &y, &rows, &Loss::Plain).unwrap();
        let (lf, gf) = loss_value(&model, &x, &y, &rows, &Loss::Focal { gamma: 0.0 }).unwrap();
        assert!((lp - lf).abs() < 1e-14);
        for (a, b) in gp.weights().iter().chain(gp.bias()).zip(gf.weights().iter().chain(gf.bias())) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn plain_loss_of_zero_model_is_ln2() {
        let (x, y) = toy();
        let (l, _) = loss_value(&LinearModel::zeros(4, 3), &x, &y, &[0, 1, 2], &Loss::Plain).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let (x, y) = toy();
        let cfg = TrainConfig { epochs: 0, seed: 4, ..Default::default() };
        assert_eq!(train(&x, &y, None, &cfg).unwrap(), LinearModel::seeded(4, 3, derive_seed(4, 0)));
    }

    #[test]
    fn sub_schedule_requires_index() {
        let (x, y) = toy();
        let cfg = TrainConfig { schedule: vec![Phase::Sub, Phase::Full], ..Default::default() };
        assert!(matches!(train(&x, &y, None, &cfg), Err(Error::InvalidInput(_))));
        let bad = TrainConfig { schedule: vec![], ..Default::default() };
        assert!(train(&x, &y, None, &bad).is_err());
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let (_, y) = toy();
        let x = FeatureMatrix::new(y.sample_ids().to_vec(), 4, vec![1e200; y.n_samples() * 4]).unwrap();
        let cfg = TrainConfig { learning_rate: 1e200, epochs: 5, ..Default::default() };
        match train(&x, &y, None, &cfg) {
            Err(Error::Divergence { epoch }) => assert_eq!(epoch, 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_model_predicts_everything_positive() {
        // Every row has at least one positive, so example recall is exactly 1.
        let y = LabelMatrix::from_rows(&[vec![1, 0, 0], vec![1, 1, 0], vec![0, 0, 1], vec![1, 1, 1]]).unwrap();
        let x = FeatureMatrix::new(y.sample_ids().to_vec(), 2, vec![0.3, -1.0, 2.0, 0.5, -0.7, 0.1, 1.1, 1.2]).unwrap();
        let report = evaluate(&LinearModel::zeros(2, 3), &x, &y).unwrap();
        assert_eq!(report.example_recall, 1.0);
        let mean_rate = (1.0 + 2.0 + 1.0 + 3.0) / 12.0;
        assert!((report.example_precision - mean_rate).abs() < 1e-15);
        assert_eq!(report.mean_accuracy, 0.5);

        let direct = PredictionMatrix::new(y.sample_ids().to_vec(), y.attribute_names().to_vec(), vec![0.5; 12], 0.5).unwrap();
        assert_eq!(report, MetricsReport::evaluate(&direct, &y).unwrap());
    }

    #[test]
    fn synth_task_ratios_and_determinism() {
        let targets = RatioVector::new(vec![0.05, 0.5, 0.9]).unwrap();
        let a = synth_task(5000, 3, 6, &targets, 1).unwrap();
        assert_eq!(a, synth_task(5000, 3, 6, &targets, 1).unwrap());
        assert_eq!(a.train_labels.n_samples(), 4000);
        assert_eq!(a.test_labels.n_samples(), 1000);
        for (p, q) in a.train_labels.column_means().iter().zip(targets.iter()) {
            assert!((p - q).abs() <= 0.02, "{p} vs {q}");
        }
        // Scores are symmetric around 0, so the median cut-off sits near 0.
        assert!(a.thresholds[1].abs() < 0.1, "{}", a.thresholds[1]);
    }

    #[test]
    fn synth_task_rejects_unreachable_ratio() {
        let targets = RatioVector::new(vec![0.0001]).unwrap();
        assert!(matches!(synth_task(100, 1, 2, &targets, 0), Err(Error::Unreachable(_))));
    }

    #[test]
    fn model_file_round_trip() {
        let m = LinearModel::seeded(3, 2, 5);
        let bytes = m.to_csv_bytes();
        assert!(bytes.starts_with(b"# d=3 n=2\n"));
        assert_eq!(LinearModel::from_csv_bytes(&bytes).unwrap(), m);
        assert!(LinearModel::from_csv_bytes(b"# d=1 n=1\n0.5\n").is_err());
        assert!(LinearModel::from_csv_bytes(b"# d=1 n=2\n0.5,1\n0,nan\n").is_err());
    }

    #[test]
    fn loss_kind_parsing() {
        for k in [LossKind::PlainBce, LossKind::WeightedBce, LossKind::Focal] {
            assert_eq!(k.to_string().parse::<LossKind>().unwrap(), k);
        }
        assert!("hinge".parse::<LossKind>().is_err());
    }
}
