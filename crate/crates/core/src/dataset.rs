//! Binary label matrices: construction, CSV I/O, positive ratios and
//! synthetic generation.
//!
//! A [`LabelMatrix`] is an `m × n` table of 0/1 attribute labels, one row per
//! sample. Everything downstream (the reweighting solver, the resamplers and
//! the metrics) consumes this type.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// An `m × n` binary label matrix with named rows and columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    sample_ids: Vec<String>,
    attribute_names: Vec<String>,
    /// Row-major, `m * n` entries, each 0 or 1.
    entries: Vec<u8>,
}

impl LabelMatrix {
    /// Build a matrix from row-major entries, checking every invariant.
    pub fn new(sample_ids: Vec<String>, attribute_names: Vec<String>, entries: Vec<u8>) -> Result<Self> {
        if sample_ids.is_empty() {
            return Err(Error::invalid("label matrix needs at least one sample"));
        }
        if attribute_names.is_empty() {
            return Err(Error::invalid("label matrix needs at least one attribute"));
        }
        if entries.len() != sample_ids.len() * attribute_names.len() {
            return Err(Error::invalid(format!(
                "expected {} entries for {} samples x {} attributes, got {}",
                sample_ids.len() * attribute_names.len(),
                sample_ids.len(),
                attribute_names.len(),
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|&v| v > 1) {
            let n = attribute_names.len();
            return Err(Error::invalid(format!(
                "entry at row {}, column {} is {}, expected 0 or 1",
                pos / n,
                pos % n,
                entries[pos]
            )));
        }
        if let Some(dup) = first_duplicate(&sample_ids) {
            return Err(Error::invalid(format!("duplicate sample id {dup:?}")));
        }
        if let Some(dup) = first_duplicate(&attribute_names) {
            return Err(Error::invalid(format!("duplicate attribute name {dup:?}")));
        }
        Ok(Self { sample_ids, attribute_names, entries })
    }

    /// Build from nested rows with generated ids `s0, s1, ...` and names `a0, a1, ...`.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::invalid(format!("row {i} has {} entries, expected {n}", rows[i].len())));
        }
        let ids = (0..rows.len()).map(|i| format!("s{i}")).collect();
        let names = (0..n).map(|j| format!("a{j}")).collect();
        Self::new(ids, names, rows.concat())
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

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.entries[row * self.n_attributes() + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        let n = self.n_attributes();
        &self.entries[row * n..(row + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.entries.chunks_exact(self.n_attributes())
    }

    /// Number of positive entries per attribute.
    pub fn positive_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_attributes()];
        for row in self.rows() {
            for (c, &v) in counts.iter_mut().zip(row) {
                *c += u64::from(v);
            }
        }
        counts
    }

    /// Unweighted positive ratio of every attribute.
    pub fn column_means(&self) -> RatioVector {
        let m = self.n_samples() as f64;
        RatioVector(self.positive_counts().into_iter().map(|c| c as f64 / m).collect())
    }

    /// Select rows by index (repetitions allowed), keeping ids as they are.
    ///
    /// Fails if the selection would repeat an id; use
    /// [`crate::resample::materialize`] for replication.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows.len() * self.n_attributes());
        let mut ids = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.n_samples() {
                return Err(Error::invalid(format!("row index {r} out of range for {} samples", self.n_samples())));
            }
            entries.extend_from_slice(self.row(r));
            ids.push(self.sample_ids[r].clone());
        }
        Self::new(ids, self.attribute_names.clone(), entries)
    }

    /// Serialize to the label CSV format (LF line endings).
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let header = std::iter::once("sample_id").chain(self.attribute_names.iter().map(String::as_str));
        // Writing into a Vec cannot fail.
        wtr.write_record(header).expect("in-memory write");
        let mut record = Vec::with_capacity(self.n_attributes() + 1);
        for (id, row) in self.sample_ids.iter().zip(self.rows()) {
            record.clear();
            record.push(id.as_str());
            record.extend(row.iter().map(|&v| if v == 1 { "1" } else { "0" }));
            wtr.write_record(&record).expect("in-memory write");
        }
        wtr.into_inner().expect("in-memory flush")
    }

    /// Parse the label CSV format. Strict: header must start with
    /// `sample_id`, cells must be exactly `0` or `1`.
    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(bytes);
        let mut records = rdr.records();

        let header = match records.next() {
            Some(rec) => rec.map_err(csv_error)?,
            None => return Err(Error::parse(1, None, "empty file, expected header `sample_id,<attributes...>`")),
        };
        if header.get(0) != Some("sample_id") {
            return Err(Error::parse(1, Some(1), "header must start with `sample_id`"));
        }
        if header.len() < 2 {
            return Err(Error::parse(1, None, "header names no attributes"));
        }
        let attribute_names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut seen_names = HashSet::new();
        for (j, name) in attribute_names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::parse(1, Some(j + 2), "empty attribute name"));
            }
            if !seen_names.insert(name.as_str()) {
                return Err(Error::parse(1, Some(j + 2), format!("duplicate attribute name {name:?}")));
            }
        }
        let n = attribute_names.len();

        let mut sample_ids = Vec::new();
        let mut entries = Vec::new();
        let mut seen_ids = HashSet::new();
        for rec in records {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != n + 1 {
                return Err(Error::parse(line, None, format!("expected {} fields, found {}", n + 1, rec.len())));
            }
            let id = &rec[0];
            if id.is_empty() {
                return Err(Error::parse(line, Some(1), "empty sample id"));
            }
            if !seen_ids.insert(id.to_owned()) {
                return Err(Error::parse(line, Some(1), format!("duplicate sample id {id:?}")));
            }
            for (j, cell) in rec.iter().skip(1).enumerate() {
                let v = match cell {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(Error::parse(
                            line,
                            Some(j + 2),
                            format!("attribute {:?}: expected 0 or 1, found {other:?}", attribute_names[j]),
                        ))
                    }
                };
                entries.push(v);
            }
            sample_ids.push(id.to_owned());
        }
        if sample_ids.is_empty() {
            return Err(Error::parse(1, None, "no sample rows after header"));
        }
        Self::new(sample_ids, attribute_names, entries)
    }

    /// SHA-256 of the canonical CSV serialization, hex encoded.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv_bytes()))
    }
}

fn first_duplicate(values: &[String]) -> Option<&str> {
    let mut seen = HashSet::with_capacity(values.len());
    values.iter().find(|v| !seen.insert(v.as_str())).map(String::as_str)
}

pub(crate) fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    Error::parse(line, None, err.to_string())
}

pub fn load_label_csv(path: impl AsRef<Path>) -> Result<LabelMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    LabelMatrix::from_csv_bytes(&bytes).map_err(|e| e.with_path(path))
}

pub fn save_label_csv(matrix: &LabelMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, matrix.to_csv_bytes()).map_err(|e| Error::io(path, e))
}

/// Per-attribute proportions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioVector(Vec<f64>);

impl RatioVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("ratio {j} is {v}, outside [0, 1]")));
        }
        Ok(Self(values))
    }

    /// Same value for every one of `n` attributes.
    pub fn uniform(value: f64, n: usize) -> Result<Self> {
        Self::new(vec![value; n])
    }

    /// `n` ratios evenly spaced from `low` to `high` inclusive.
    pub fn linspace(low: f64, high: f64, n: usize) -> Result<Self> {
        let values = match n {
            0 => Vec::new(),
            1 => vec![low],
            _ => (0..n).map(|j| low + (high - low) * j as f64 / (n - 1) as f64).collect(),
        };
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        (self.0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.0.len() as f64).sqrt()
    }
}

impl std::ops::Deref for RatioVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Positive ratio of every attribute when sample `i` carries weight `weights[i]`:
/// `p_j = Σ_i r_i A_ij / Σ_i r_i`.
pub fn weighted_positive_ratio(matrix: &LabelMatrix, weights: &[f64]) -> Result<RatioVector> {
    check_weights(matrix, weights)?;
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroWeightSum);
    }
    let mut numer = vec![0.0; matrix.n_attributes()];
    for (row, &w) in matrix.rows().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (acc, &a) in numer.iter_mut().zip(row) {
            if a == 1 {
                *acc += w;
            }
        }
    }
    // Rounding can push a ratio a hair past 1 when a column is all ones.
    Ok(RatioVector(numer.into_iter().map(|s| (s / total).clamp(0.0, 1.0)).collect()))
}

pub(crate) fn check_weights(matrix: &LabelMatrix, weights: &[f64]) -> Result<()> {
    if weights.len() != matrix.n_samples() {
        return Err(Error::invalid(format!(
            "weight vector has length {}, label matrix has {} samples",
            weights.len(),
            matrix.n_samples()
        )));
    }
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0 && w.is_finite())) {
        return Err(Error::invalid(format!("weight {i} is {w}; weights must be finite and nonnegative")));
    }
    Ok(())
}

/// Exact positive ratios for integer weights.
pub fn exact_positive_ratio(matrix: &LabelMatrix, counts: &[u64]) -> Result<Vec<Ratio<u64>>> {
    if counts.len() != matrix.n_samples() {
        return Err(Error::invalid(format!(
            "count vector has length {}, label matrix has {} samples",
            counts.len(),
            matrix.n_samples()
        )));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::ZeroWeightSum);
    }
    let mut numer = vec![0u64; matrix.n_attributes()];
    for (row, &c) in matrix.rows().zip(counts) {
        for (acc, &a) in numer.iter_mut().zip(row) {
            *acc += c * u64::from(a);
        }
    }
    Ok(numer.into_iter().map(|s| Ratio::new(s, total)).collect())
}

/// Draw an `m × n` matrix whose column `j` is i.i.d. Bernoulli(`target_ratios[j]`).
///
/// Columns are independent. Ids are `s<i>`, attribute names `attr<j>`.
pub fn synth_generate(m: usize, n: usize, target_ratios: &RatioVector, seed: u64) -> Result<LabelMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("synthetic matrix needs m >= 1 and n >= 1"));
    }
    if target_ratios.len() != n {
        return Err(Error::invalid(format!("{} target ratios given for {n} attributes", target_ratios.len())));
    }
    if let Some((j, p)) = target_ratios.iter().enumerate().find(|(_, p)| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::invalid(format!("target ratio {j} is {p}; must lie strictly between 0 and 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(m * n);
    for _ in 0..m {
        for &p in target_ratios.iter() {
            entries.push(u8::from(rng.gen::<f64>() < p));
        }
    }
    let ids = (0..m).map(|i| format!("s{i}")).collect();
    let names = (0..n).map(|j| format!("attr{j}")).collect();
    LabelMatrix::new(ids, names, entries)
}

/// Lowest and highest column ratio of the standard imbalanced benchmark.
pub const BENCHMARK_RATIO_RANGE: (f64, f64) = (0.03, 0.9);

/// Fixed seed of the standard imbalanced benchmark matrix.
pub const BENCHMARK_SEED: u64 = 2019;

/// Ratios spread evenly over [`BENCHMARK_RATIO_RANGE`], mimicking the skew of
/// pedestrian-attribute label tables.
pub fn benchmark_ratios(n: usize) -> RatioVector {
    let (lo, hi) = BENCHMARK_RATIO_RANGE;
    RatioVector::linspace(lo, hi, n).expect("benchmark range lies in [0, 1]")
}

/// The standard 2000 × 20 imbalanced label matrix.
pub fn benchmark_matrix() -> LabelMatrix {
    synth_generate(2000, 20, &benchmark_ratios(20), BENCHMARK_SEED).expect("benchmark parameters are valid")
}
