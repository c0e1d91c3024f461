//! Solving for per-sample replication weights.
//!
//! The balance objective is
//!
//! ```text
//! f(r) = Σ_j max(0, p_ideal_j − p_j(r))³ − λ Σ_i r_i,      r ≥ 0
//! ```
//!
//! where `p(r)` is the weighted positive ratio of every label. The hinge term
//! only penalizes labels whose positive share is below target. Since `p` is
//! invariant to scaling `r`, the `−λ Σ r` term makes `f` unbounded below, so
//! [`optimize`] runs a fixed iteration budget of projected Adam rather than
//! testing for convergence.

use crate::dataset::{check_weights, csv_error, weighted_positive_ratio, LabelMatrix, RatioVector};
use crate::error::{Error, Result};

/// Nonnegative per-sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, w)) = values.iter().enumerate().find(|(_, w)| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid(format!("weight {i} is {w}; weights must be finite and nonnegative")));
        }
        Ok(Self(values))
    }

    pub fn ones(m: usize) -> Self {
        Self(vec![1.0; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|w| w * factor).collect())
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-label target positive proportion.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetRatio {
    Uniform(f64),
    PerLabel(RatioVector),
}

impl TargetRatio {
    /// Expand to one target per label, validating each lies in (0, 1).
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        let values = match self {
            TargetRatio::Uniform(p) => vec![*p; n],
            TargetRatio::PerLabel(v) if v.len() == n => v.values().to_vec(),
            TargetRatio::PerLabel(v) => {
                return Err(Error::invalid(format!("{} target ratios given for {n} labels", v.len())))
            }
        };
        if let Some((j, p)) = values.iter().enumerate().find(|(_, p)| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::invalid(format!("p_ideal for label {j} is {p}; must lie strictly between 0 and 1")));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceConfig {
    pub p_ideal: TargetRatio,
    /// Weight of the `−λ Σ r` term. Must be positive.
    pub lambda: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    /// Multiplier applied to solved weights before rounding to counts.
    pub scale_constant: f64,
    /// Recorded for provenance; the solver itself draws no random numbers.
    pub seed: u64,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            p_ideal: TargetRatio::Uniform(0.6),
            lambda: 1e-5,
            learning_rate: 0.05,
            iterations: 2000,
            scale_constant: 10.0,
            seed: 0,
        }
    }
}

impl BalanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if !(self.scale_constant > 0.0 && self.scale_constant.is_finite()) {
            return Err(Error::invalid(format!("scale constant must be positive, got {}", self.scale_constant)));
        }
        if let TargetRatio::Uniform(_) = self.p_ideal {
            self.p_ideal.resolve(1)?;
        }
        Ok(())
    }
}

/// `Σ_j max(0, p_ideal_j − p_j)³`. Invariant under positive scaling of `weights`.
pub fn hinge_term(weights: &[f64], matrix: &LabelMatrix, p_ideal: &[f64]) -> Result<f64> {
    let p = weighted_positive_ratio(matrix, weights)?;
    check_targets(p_ideal, matrix)?;
    Ok(p_ideal.iter().zip(p.iter()).map(|(t, p)| (t - p).max(0.0).powi(3)).sum())
}

/// Full regularized objective `hinge − λ Σ r`.
pub fn objective(weights: &[f64], matrix: &LabelMatrix, config: &BalanceConfig) -> Result<f64> {
    let p_ideal = config.p_ideal.resolve(matrix.n_attributes())?;
    let hinge = hinge_term(weights, matrix, &p_ideal)?;
    Ok(hinge - config.lambda * weights.iter().sum::<f64>())
}

/// Analytic gradient of [`objective`] with respect to every weight.
///
/// With `S = Σ r`, `d_j = p_ideal_j − p_j` and `∂p_j/∂r_i = (A_ij − p_j)/S`:
/// `g_i = −(3/S) Σ_j max(0, d_j)² (A_ij − p_j) − λ`.
pub fn gradient(weights: &[f64], matrix: &LabelMatrix, config: &BalanceConfig) -> Result<Vec<f64>> {
    let p_ideal = config.p_ideal.resolve(matrix.n_attributes())?;
    gradient_with_targets(weights, matrix, &p_ideal, config.lambda)
}

fn gradient_with_targets(weights: &[f64], matrix: &LabelMatrix, p_ideal: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_weights(matrix, weights)?;
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroWeightSum);
    }
    let p = weighted_positive_ratio(matrix, weights)?;
    // coef_j = 3 max(0, d_j)² / S, so g_i = −(Σ_{j: A_ij = 1} coef_j − Σ_j coef_j p_j) − λ.
    let coef: Vec<f64> = p_ideal.iter().zip(p.iter()).map(|(t, p)| 3.0 * (t - p).max(0.0).powi(2) / total).collect();
    let baseline: f64 = coef.iter().zip(p.iter()).map(|(c, p)| c * p).sum();
    Ok(matrix
        .rows()
        .map(|row| {
            let active: f64 = row.iter().zip(&coef).filter(|(&a, _)| a == 1).map(|(_, c)| c).sum();
            -(active - baseline) - lambda
        })
        .collect())
}

fn check_targets(p_ideal: &[f64], matrix: &LabelMatrix) -> Result<()> {
    if p_ideal.len() != matrix.n_attributes() {
        return Err(Error::invalid(format!(
            "{} target ratios given for {} labels",
            p_ideal.len(),
            matrix.n_attributes()
        )));
    }
    Ok(())
}

/// Adam first-order optimizer state for a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(len: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step: 0,
        }
    }

    /// One bias-corrected update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        for (((x, &g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *x -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Minimize [`objective`] from `r = 1` with `config.iterations` Adam steps,
/// clamping every weight at 0 after each step.
pub fn optimize(matrix: &LabelMatrix, config: &BalanceConfig) -> Result<WeightVector> {
    config.validate()?;
    let p_ideal = config.p_ideal.resolve(matrix.n_attributes())?;
    let mut weights = vec![1.0; matrix.n_samples()];
    let mut adam = Adam::new(weights.len(), config.learning_rate);
    let degenerate = || Error::DegenerateSolution { lambda: config.lambda, learning_rate: config.learning_rate };
    for _ in 0..config.iterations {
        let grad = gradient_with_targets(&weights, matrix, &p_ideal, config.lambda).map_err(|e| match e {
            Error::ZeroWeightSum => degenerate(),
            other => other,
        })?;
        adam.step(&mut weights, &grad);
        for w in &mut weights {
            *w = w.max(0.0);
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(degenerate());
        }
    }
    WeightVector::new(weights)
}

/// Integer number of copies of each sample in the sub-balance dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicationCounts(Vec<u64>);

impl ReplicationCounts {
    /// At least one count must be positive.
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::invalid("replication counts are all zero"));
        }
        Ok(Self(counts))
    }

    pub fn ones(m: usize) -> Self {
        Self(vec![1; m])
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Size of the sub-balance dataset.
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn as_weights(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }
}

impl std::ops::Deref for ReplicationCounts {
    type Target = [u64];

    fn deref(&self) -> &[u64] {
        &self.0
    }
}

#[inline]
fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

fn rounded_total(weights: &[f64], scale: f64) -> u64 {
    weights.iter().map(|&w| round_half_up(scale * w)).sum()
}

/// `counts_i = round_half_up(scale_constant · r_i)`.
pub fn integerize(weights: &WeightVector, scale_constant: f64) -> Result<ReplicationCounts> {
    if !(scale_constant > 0.0 && scale_constant.is_finite()) {
        return Err(Error::invalid(format!("scale constant must be positive, got {scale_constant}")));
    }
    let counts: Vec<u64> = weights.iter().map(|&w| round_half_up(scale_constant * w)).collect();
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::AllZeroCounts { scale: scale_constant });
    }
    Ok(ReplicationCounts(counts))
}

/// Steps per decade of the scale sweep grid.
pub const SCALE_GRID_STEPS_PER_DECADE: i32 = 200;
/// The sweep covers `10^SCALE_GRID_DECADES.0 ..= 10^SCALE_GRID_DECADES.1`.
pub const SCALE_GRID_DECADES: (i32, i32) = (-6, 9);

/// Result of a scale sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleChoice {
    pub scale: f64,
    pub total: u64,
    /// `total / m`.
    pub achieved_fraction: f64,
}

/// Smallest grid value `c = 10^(k/200)` for which `Σ round_half_up(c · r_i) ≥ target_fraction · m`.
pub fn find_scale_for_fraction(weights: &WeightVector, target_fraction: f64, m: usize) -> Result<ScaleChoice> {
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::invalid(format!("target fraction must lie in (0, 1], got {target_fraction}")));
    }
    if m == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::invalid("weights are all zero"));
    }
    let needed = target_fraction * m as f64;
    let (lo, hi) = SCALE_GRID_DECADES;
    let grid = |k: i32| 10f64.powf(f64::from(k) / f64::from(SCALE_GRID_STEPS_PER_DECADE));
    let (mut a, mut b) = (lo * SCALE_GRID_STEPS_PER_DECADE, hi * SCALE_GRID_STEPS_PER_DECADE);
    if (rounded_total(weights, grid(b)) as f64) < needed {
        return Err(Error::Unreachable(format!(
            "even the largest scale {:e} yields fewer than {needed} samples",
            grid(b)
        )));
    }
    // The rounded total is nondecreasing in the scale, so bisect for the first grid hit.
    if (rounded_total(weights, grid(a)) as f64) < needed {
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            if (rounded_total(weights, grid(mid)) as f64) >= needed {
                b = mid;
            } else {
                a = mid;
            }
        }
    } else {
        b = a;
    }
    let scale = grid(b);
    let total = rounded_total(weights, scale);
    Ok(ScaleChoice { scale, total, achieved_fraction: total as f64 / m as f64 })
}

/// Contents of a weights file: one `(sample_id, weight, count)` per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightsTable {
    pub sample_ids: Vec<String>,
    pub weights: WeightVector,
    pub counts: ReplicationCounts,
}

impl WeightsTable {
    pub fn new(sample_ids: Vec<String>, weights: WeightVector, counts: ReplicationCounts) -> Result<Self> {
        if sample_ids.len() != weights.len() || weights.len() != counts.len() {
            return Err(Error::invalid(format!(
                "{} ids, {} weights and {} counts",
                sample_ids.len(),
                weights.len(),
                counts.len()
            )));
        }
        Ok(Self { sample_ids, weights, counts })
    }

    /// `sample_id,weight,count` with weights at 17 significant digits.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        wtr.write_record(["sample_id", "weight", "count"]).expect("in-memory write");
        for ((id, w), c) in self.sample_ids.iter().zip(self.weights.iter()).zip(self.counts.iter()) {
            wtr.write_record([id.as_str(), &format!("{w:.16e}"), &c.to_string()]).expect("in-memory write");
        }
        wtr.into_inner().expect("in-memory flush")
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(bytes);
        let mut records = rdr.records();
        match records.next() {
            Some(Ok(h)) if h.iter().eq(["sample_id", "weight", "count"]) => {}
            Some(Err(e)) => return Err(csv_error(e)),
            _ => return Err(Error::parse(1, None, "expected header `sample_id,weight,count`")),
        }
        let (mut ids, mut weights, mut counts) = (Vec::new(), Vec::new(), Vec::new());
        for rec in records {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 3 {
                return Err(Error::parse(line, None, format!("expected 3 fields, found {}", rec.len())));
            }
            let w: f64 = rec[1]
                .parse()
                .ok()
                .filter(|w: &f64| *w >= 0.0 && w.is_finite())
                .ok_or_else(|| Error::parse(line, Some(2), format!("expected a nonnegative real, found {:?}", &rec[1])))?;
            let c: u64 = rec[2]
                .parse()
                .map_err(|_| Error::parse(line, Some(3), format!("expected a nonnegative integer, found {:?}", &rec[2])))?;
            ids.push(rec[0].to_owned());
            weights.push(w);
            counts.push(c);
        }
        let counts = ReplicationCounts::new(counts).map_err(|_| Error::parse(1, None, "every count is zero"))?;
        Self::new(ids, WeightVector::new(weights)?, counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(lambda: f64) -> BalanceConfig {
        BalanceConfig { lambda, ..BalanceConfig::default() }
    }

    #[test]
    fn hand_computed_objective_and_gradient() {
        let a = LabelMatrix::from_rows(&[vec![1], vec![0]]).unwrap();
        let cfg = config(0.01);
        let f = objective(&[1.0, 1.0], &a, &cfg).unwrap();
        assert!((f - (0.001 - 0.02)).abs() < 1e-15, "{f}");

        let g = gradient(&[1.0, 1.0], &a, &cfg).unwrap();
        assert!((g[0] - (-0.0075 - 0.01)).abs() < 1e-15, "{}", g[0]);
        // Row 2 pulls the ratio down: ∂p/∂r₂ = (0 − 0.5)/2.
        assert!((g[1] - (0.0075 - 0.01)).abs() < 1e-15, "{}", g[1]);
    }

    #[test]
    fn hinge_vanishes_when_labels_meet_target() {
        let a = LabelMatrix::from_rows(&[vec![1, 1], vec![1, 0], vec![0, 1]]).unwrap();
        let cfg = config(1e-12);
        assert_eq!(hinge_term(&[1.0; 3], &a, &[0.6, 0.6]).unwrap(), 0.0);
        for g in gradient(&[1.0; 3], &a, &cfg).unwrap() {
            assert_eq!(g, -1e-12);
        }
    }

    #[test]
    fn regularizer_is_linear_in_lambda() {
        let a = LabelMatrix::from_rows(&[vec![1, 0], vec![0, 0], vec![0, 1]]).unwrap();
        let r = [0.5, 2.0, 1.25];
        let fa = objective(&r, &a, &config(0.3)).unwrap();
        let fb = objective(&r, &a, &config(0.7)).unwrap();
        assert!(((fa - fb) - 0.4 * 3.75).abs() < 1e-14);
    }

    #[test]
    fn zero_weight_sum_is_an_error() {
        let a = LabelMatrix::from_rows(&[vec![1], vec![0]]).unwrap();
        assert!(matches!(objective(&[0.0, 0.0], &a, &config(0.1)), Err(Error::ZeroWeightSum)));
        assert!(matches!(gradient(&[0.0, 0.0], &a, &config(0.1)), Err(Error::ZeroWeightSum)));
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(2, 0.1);
        let mut x = [1.0, 1.0];
        adam.step(&mut x, &[3.0, -0.5]);
        assert!((x[0] - 0.9).abs() < 1e-7);
        assert!((x[1] - 1.1).abs() < 1e-7);
    }

    #[test]
    fn balanced_matrix_stays_near_uniform() {
        let a = LabelMatrix::from_rows(&[vec![1, 1], vec![1, 0], vec![0, 1], vec![1, 1], vec![1, 1]]).unwrap();
        let cfg = BalanceConfig { iterations: 50, ..BalanceConfig::default() };
        let r = optimize(&a, &cfg).unwrap();
        assert!(r.iter().all(|&w| w > 0.0));
        let first = r[0];
        assert!(r.iter().all(|&w| (w - first).abs() < 1e-12), "{r:?}");
        assert!(first > 1.0);
    }

    #[test]
    fn optimize_rejects_bad_config() {
        let a = LabelMatrix::from_rows(&[vec![1], vec![0]]).unwrap();
        for cfg in [
            BalanceConfig { lambda: 0.0, ..Default::default() },
            BalanceConfig { learning_rate: -1.0, ..Default::default() },
            BalanceConfig { iterations: 0, ..Default::default() },
            BalanceConfig { scale_constant: 0.0, ..Default::default() },
            BalanceConfig { p_ideal: TargetRatio::Uniform(1.0), ..Default::default() },
        ] {
            assert!(matches!(optimize(&a, &cfg), Err(Error::InvalidInput(_))), "{cfg:?}");
        }
    }

    #[test]
    fn integerize_rounds_half_up() {
        let r = WeightVector::new(vec![0.24, 0.5, 1.3]).unwrap();
        assert_eq!(integerize(&r, 10.0).unwrap().counts(), &[2, 5, 13]);
        let r = WeightVector::new(vec![0.05, 0.15]).unwrap();
        assert_eq!(integerize(&r, 10.0).unwrap().counts(), &[1, 2]);
    }

    #[test]
    fn integerize_all_zero_fails() {
        let r = WeightVector::new(vec![0.04, 0.04]).unwrap();
        let err = integerize(&r, 10.0).unwrap_err();
        assert!(matches!(err, Error::AllZeroCounts { .. }));
        assert!(err.to_string().contains("larger"));
    }

    #[test]
    fn weights_table_round_trip() {
        let t = WeightsTable::new(
            vec!["a".into(), "b".into()],
            WeightVector::new(vec![0.1, 12.345678901234567]).unwrap(),
            ReplicationCounts::new(vec![1, 123]).unwrap(),
        )
        .unwrap();
        let bytes = t.to_csv_bytes();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "a,1.0000000000000001e-1,1");
        assert_eq!(WeightsTable::from_csv_bytes(&bytes).unwrap(), t);
        assert!(WeightsTable::from_csv_bytes(b"id,weight,count\na,1,1\n").is_err());
        assert!(WeightsTable::from_csv_bytes(b"sample_id,weight,count\na,-1,1\n").is_err());
        assert!(WeightsTable::from_csv_bytes(b"sample_id,weight,count\na,1,1.5\n").is_err());
        assert!(WeightsTable::from_csv_bytes(b"sample_id,weight,count\na,1,0\n").is_err());
    }

    #[test]
    fn uniform_scale_search() {
        let r = WeightVector::ones(100);
        let choice = find_scale_for_fraction(&r, 0.4, 100).unwrap();
        // The first grid value that rounds 1·c up to 1 is the first one ≥ 0.5.
        let k = (0.5f64.log10() * 200.0).ceil() as i32;
        assert_eq!(choice.scale, 10f64.powf(f64::from(k) / 200.0));
        assert!(choice.scale >= 0.5);
        assert_eq!(choice.total, 100);
        assert_eq!(choice.achieved_fraction, 1.0);
    }

    #[test]
    fn scale_search_errors() {
        let r = WeightVector::new(vec![0.0, 0.0]).unwrap();
        assert!(find_scale_for_fraction(&r, 0.4, 2).is_err());
        let r = WeightVector::ones(2);
        assert!(find_scale_for_fraction(&r, 0.0, 2).is_err());
        assert!(find_scale_for_fraction(&r, 1.5, 2).is_err());
        let tiny = WeightVector::new(vec![1e-12, 0.0]).unwrap();
        assert!(matches!(find_scale_for_fraction(&tiny, 1.0, 1_000_000), Err(Error::Unreachable(_))));
    }
}
