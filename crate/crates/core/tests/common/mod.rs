//! Shared fixtures and definitional reference implementations.

#![allow(dead_code)]

use std::collections::BTreeSet;

use dai::dataset::LabelMatrix;
use dai::metrics::PredictionMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random binary matrix with per-entry positive probability `density`.
pub fn random_labels(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> LabelMatrix {
    let rows: Vec<Vec<u8>> = (0..m).map(|_| (0..n).map(|_| u8::from(rng.gen_bool(density))).collect()).collect();
    LabelMatrix::from_rows(&rows).unwrap()
}

/// Random scores in [0, 1] sharing ids and names with `labels`.
pub fn random_scores(rng: &mut ChaCha8Rng, labels: &LabelMatrix) -> PredictionMatrix {
    let scores = (0..labels.n_samples() * labels.n_attributes()).map(|_| rng.gen::<f64>()).collect();
    PredictionMatrix::new(labels.sample_ids().to_vec(), labels.attribute_names().to_vec(), scores, 0.5).unwrap()
}

/// Column `j` of a matrix as a plain 0/1 vector.
fn column(labels: &LabelMatrix, j: usize) -> Vec<bool> {
    (0..labels.n_samples()).map(|i| labels.get(i, j) == 1).collect()
}

/// Objective written directly from its definition.
pub fn reference_objective(a: &LabelMatrix, r: &[f64], p_ideal: f64, lambda: f64) -> f64 {
    let total: f64 = r.iter().sum();
    let mut hinge = 0.0;
    for j in 0..a.n_attributes() {
        let weighted: f64 = column(a, j).iter().zip(r).filter(|(y, _)| **y).map(|(_, w)| *w).sum();
        let gap = p_ideal - weighted / total;
        if gap > 0.0 {
            hinge += gap * gap * gap;
        }
    }
    hinge - lambda * total
}

/// Bits after the binary point needed to hold `x` exactly.
fn fraction_bits(x: f64) -> usize {
    let q = BigRational::from_float(x).expect("finite input");
    q.denom().bits() as usize - 1
}

fn fixed(x: f64, bits: usize) -> BigInt {
    let q = BigRational::from_float(x).expect("finite input") * BigRational::from_integer(BigInt::one() << bits);
    assert!(q.is_integer());
    q.to_integer()
}

/// Hinge numerator and weight total, both exact: hinge = numerator / (2^(3E) S^3).
fn exact_hinge_parts(a: &LabelMatrix, r: &[BigInt], p_ideal: &BigInt, bits: usize) -> (BigInt, BigInt) {
    let total: BigInt = r.iter().sum();
    let mut numerator = BigInt::zero();
    for j in 0..a.n_attributes() {
        let weighted: BigInt = column(a, j).iter().zip(r).filter(|(y, _)| **y).map(|(_, w)| w.clone()).sum();
        let gap = p_ideal * &total - (weighted << bits);
        if gap.is_positive() {
            numerator += &gap * &gap * &gap;
        }
    }
    (numerator, total)
}

/// Central difference of the objective in coordinate `i`, free of rounding error.
pub fn exact_central_difference(a: &LabelMatrix, r: &[f64], i: usize, h: f64, p_ideal: f64, lambda: f64) -> f64 {
    let bits = r.iter().chain([&h, &p_ideal]).map(|&x| fraction_bits(x)).max().unwrap();
    let base: Vec<BigInt> = r.iter().map(|&x| fixed(x, bits)).collect();
    let (step, p_ideal) = (fixed(h, bits), fixed(p_ideal, bits));
    let (mut up, mut down) = (base.clone(), base);
    up[i] += &step;
    down[i] -= &step;
    let (n_up, s_up) = exact_hinge_parts(a, &up, &p_ideal, bits);
    let (n_down, s_down) = exact_hinge_parts(a, &down, &p_ideal, bits);
    let unit = BigInt::one() << (3 * bits);
    let cube = |s: &BigInt| s * s * s;
    let hinge_diff = BigRational::new(n_up * cube(&s_down) - n_down * cube(&s_up), unit * cube(&s_up) * cube(&s_down));
    // The penalty is linear, so its difference is exactly lambda * 2h.
    let diff = hinge_diff / BigRational::from_float(2.0 * h).unwrap() - BigRational::from_float(lambda).unwrap();
    diff.to_f64().expect("representable")
}

/// Mean accuracy from explicit index sets.
pub fn reference_mean_accuracy(labels: &LabelMatrix, preds: &PredictionMatrix) -> f64 {
    let (m, n) = (labels.n_samples(), labels.n_attributes());
    let mut sum = 0.0;
    for j in 0..n {
        let pos: BTreeSet<usize> = (0..m).filter(|&i| labels.get(i, j) == 1).collect();
        let neg: BTreeSet<usize> = (0..m).filter(|&i| labels.get(i, j) == 0).collect();
        let hit: BTreeSet<usize> = (0..m).filter(|&i| preds.predicted(i, j)).collect();
        let miss: BTreeSet<usize> = (0..m).filter(|&i| !preds.predicted(i, j)).collect();
        let tpr = if pos.is_empty() {
            if hit.is_empty() { 1.0 } else { 0.0 }
        } else {
            pos.intersection(&hit).count() as f64 / pos.len() as f64
        };
        let tnr = if neg.is_empty() {
            if miss.is_empty() { 1.0 } else { 0.0 }
        } else {
            neg.intersection(&miss).count() as f64 / neg.len() as f64
        };
        sum += (tpr + tnr) / 2.0;
    }
    sum / n as f64
}

/// Example-based accuracy, precision, recall and F1 from explicit label sets.
pub fn reference_example_metrics(labels: &LabelMatrix, preds: &PredictionMatrix) -> [f64; 4] {
    let (m, n) = (labels.n_samples(), labels.n_attributes());
    let (mut acc, mut prec, mut rec) = (0.0, 0.0, 0.0);
    for i in 0..m {
        let truth: BTreeSet<usize> = (0..n).filter(|&j| labels.get(i, j) == 1).collect();
        let guess: BTreeSet<usize> = (0..n).filter(|&j| preds.predicted(i, j)).collect();
        let inter = truth.intersection(&guess).count() as f64;
        let union = truth.union(&guess).count();
        acc += if union == 0 { 1.0 } else { inter / union as f64 };
        prec += if guess.is_empty() {
            if truth.is_empty() { 1.0 } else { 0.0 }
        } else {
            inter / guess.len() as f64
        };
        rec += if truth.is_empty() {
            if guess.is_empty() { 1.0 } else { 0.0 }
        } else {
            inter / truth.len() as f64
        };
    }
    let (acc, p, r) = (acc / m as f64, prec / m as f64, rec / m as f64);
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    [acc, p, r, f1]
}

/// `|a - b| / max(|a|, |b|)`, or 0 when both are 0.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
