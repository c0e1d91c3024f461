//! Building the sub-balance dataset from replication counts, plus naive
//! single-label over/under-sampling baselines.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{csv_error, LabelMatrix};
use crate::error::{Error, Result};
use crate::optimizer::ReplicationCounts;

/// Which source row each sub-balance row copies, tied to the source by checksum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubBalanceIndex {
    /// `(source_row, repetition_ordinal)`, ascending by source row then ordinal.
    entries: Vec<(usize, usize)>,
    source_checksum: String,
}

impl SubBalanceIndex {
    pub fn from_counts(source: &LabelMatrix, counts: &ReplicationCounts) -> Result<Self> {
        if counts.len() != source.n_samples() {
            return Err(Error::invalid(format!(
                "{} replication counts given for {} samples",
                counts.len(),
                source.n_samples()
            )));
        }
        if counts.total() == 0 {
            return Err(Error::invalid("replication counts are all zero"));
        }
        let entries = counts
            .iter()
            .enumerate()
            .flat_map(|(row, &c)| (0..c as usize).map(move |ord| (row, ord)))
            .collect();
        Ok(Self { entries, source_checksum: source.checksum() })
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn source_checksum(&self) -> &str {
        &self.source_checksum
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Source row of every sub-balance row, in order.
    pub fn source_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(r, _)| r)
    }

    /// Recover replication counts for a source of `m` rows.
    pub fn counts(&self, m: usize) -> Result<ReplicationCounts> {
        let mut counts = vec![0u64; m];
        for &(row, _) in &self.entries {
            *counts
                .get_mut(row)
                .ok_or_else(|| Error::Consistency(format!("index references row {row}, source has {m} rows")))? += 1;
        }
        ReplicationCounts::new(counts)
    }

    /// Rebuild the sub-balance matrix from its source. The source must match the recorded checksum.
    pub fn expand(&self, source: &LabelMatrix) -> Result<LabelMatrix> {
        let actual = source.checksum();
        if actual != self.source_checksum {
            return Err(Error::Consistency(format!(
                "source checksum {actual} does not match index checksum {}",
                self.source_checksum
            )));
        }
        let n = source.n_attributes();
        let mut ids = Vec::with_capacity(self.entries.len());
        let mut entries = Vec::with_capacity(self.entries.len() * n);
        for &(row, ord) in &self.entries {
            if row >= source.n_samples() {
                return Err(Error::Consistency(format!(
                    "index references row {row}, source has {} rows",
                    source.n_samples()
                )));
            }
            ids.push(format!("{}#{ord}", source.sample_ids()[row]));
            entries.extend_from_slice(source.row(row));
        }
        LabelMatrix::new(ids, source.attribute_names().to_vec(), entries)
    }

    /// Index file: checksum comment line, `source_row,ordinal` header, one row per entry.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut out = format!("# source_sha256={}\nsource_row,ordinal\n", self.source_checksum).into_bytes();
        for &(row, ord) in &self.entries {
            out.extend_from_slice(format!("{row},{ord}\n").as_bytes());
        }
        out
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::parse(1, None, format!("not UTF-8: {e}")))?;
        let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
        let checksum = lines
            .next()
            .and_then(|l| l.strip_prefix("# source_sha256="))
            .ok_or_else(|| Error::parse(1, None, "expected `# source_sha256=<hex>`"))?;
        if checksum.len() != 64 || !checksum.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::parse(1, None, "checksum must be 64 hex digits"));
        }
        let rest: String = lines.collect::<Vec<_>>().join("\n");
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(rest.as_bytes());
        let mut records = rdr.records();
        match records.next() {
            Some(Ok(h)) if h.len() == 2 && &h[0] == "source_row" && &h[1] == "ordinal" => {}
            Some(Err(e)) => return Err(csv_error(e)),
            _ => return Err(Error::parse(2, None, "expected header `source_row,ordinal`")),
        }
        let mut entries: Vec<(usize, usize)> = Vec::new();
        for rec in records {
            // +1 for the checksum line stripped above.
            let rec = rec.map_err(|e| match csv_error(e) {
                Error::Parse { line, column, message, .. } => Error::parse(line + 1, column, message),
                other => other,
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize) + 1;
            let field = |k: usize| -> Result<usize> {
                rec[k].parse().map_err(|_| Error::parse(line, Some(k + 1), format!("expected an integer, found {:?}", &rec[k])))
            };
            let (row, ord) = (field(0)?, field(1)?);
            let expected = match entries.last() {
                Some(&(prev, prev_ord)) if prev == row => prev_ord + 1,
                Some(&(prev, _)) if prev > row => {
                    return Err(Error::parse(line, Some(1), "source rows must be ascending"));
                }
                _ => 0,
            };
            if ord != expected {
                return Err(Error::parse(line, Some(2), format!("expected ordinal {expected}, found {ord}")));
            }
            entries.push((row, ord));
        }
        if entries.is_empty() {
            return Err(Error::parse(2, None, "index has no entries"));
        }
        Ok(Self { entries, source_checksum: checksum.to_ascii_lowercase() })
    }
}

pub fn save_index(index: &SubBalanceIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, index.to_csv_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<SubBalanceIndex> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    SubBalanceIndex::from_csv_bytes(&bytes).map_err(|e| e.with_path(path))
}

/// Replicate row `i` of `matrix` `counts[i]` times.
///
/// Rows come out in ascending source order; copies get ids `<id>#<ordinal>`.
pub fn materialize(matrix: &LabelMatrix, counts: &ReplicationCounts) -> Result<(LabelMatrix, SubBalanceIndex)> {
    let index = SubBalanceIndex::from_counts(matrix, counts)?;
    let expanded = index.expand(matrix)?;
    Ok((expanded, index))
}

fn column_counts(matrix: &LabelMatrix, label: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if label >= matrix.n_attributes() {
        return Err(Error::invalid(format!(
            "label index {label} out of range for {} attributes",
            matrix.n_attributes()
        )));
    }
    let (pos, neg) = (0..matrix.n_samples()).partition(|&i| matrix.get(i, label) == 1);
    Ok((pos, neg))
}

/// Duplicate random positive rows of one label until its ratio reaches `target_ratio`.
///
/// Adds the fewest duplicates that reach the target; every other row keeps count 1.
pub fn random_oversample(matrix: &LabelMatrix, label: usize, target_ratio: f64, seed: u64) -> Result<ReplicationCounts> {
    let (pos, neg) = column_counts(matrix, label)?;
    if pos.is_empty() {
        return Err(Error::invalid(format!("label {label} has no positive samples to duplicate")));
    }
    let mut counts = vec![1u64; matrix.n_samples()];
    let (mut p, mut total) = (pos.len() as f64, matrix.n_samples() as f64);
    if p / total < target_ratio && !neg.is_empty() && target_ratio >= 1.0 {
        return Err(Error::Unreachable(format!(
            "label {label} has negatives, so duplicating positives never reaches ratio {target_ratio}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while p / total < target_ratio {
        counts[pos[rng.gen_range(0..pos.len())]] += 1;
        p += 1.0;
        total += 1.0;
    }
    ReplicationCounts::new(counts)
}

/// Drop random negative rows of one label until its ratio reaches `target_ratio`.
///
/// Drops the fewest rows that reach the target; dropped rows get count 0.
pub fn random_undersample(matrix: &LabelMatrix, label: usize, target_ratio: f64, seed: u64) -> Result<ReplicationCounts> {
    let (pos, mut neg) = column_counts(matrix, label)?;
    if neg.is_empty() {
        return Err(Error::invalid(format!("label {label} has no negative samples to drop")));
    }
    if pos.is_empty() && target_ratio > 0.0 {
        return Err(Error::Unreachable(format!(
            "label {label} has no positives; dropping negatives never reaches ratio {target_ratio}"
        )));
    }
    let mut counts = vec![1u64; matrix.n_samples()];
    let p = pos.len() as f64;
    let mut total = matrix.n_samples() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    neg.shuffle(&mut rng);
    let mut dropped = neg.into_iter();
    while p / total < target_ratio {
        // With at least one positive, dropping every negative gives ratio 1.
        let row = dropped.next().expect("ratio reaches 1 once all negatives are dropped");
        counts[row] = 0;
        total -= 1.0;
    }
    ReplicationCounts::new(counts)
}
