//! Per-label positive ratio under sample weights, in floating point and exactly.

use dai::dataset::{exact_positive_ratio, weighted_positive_ratio, LabelMatrix};

fn main() -> dai::Result<()> {
    let labels = LabelMatrix::from_rows(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1], vec![0, 1, 1]])?;
    println!("unweighted: {:?}", labels.column_means().values());

    let weights = [3.0, 1.0, 0.5, 0.5];
    println!("weighted:   {:?}", weighted_positive_ratio(&labels, &weights)?.values());

    // Scaling every weight by the same factor leaves the ratios unchanged.
    let tripled: Vec<f64> = weights.iter().map(|w| 3.0 * w).collect();
    println!("tripled:    {:?}", weighted_positive_ratio(&labels, &tripled)?.values());

    let exact = exact_positive_ratio(&labels, &[6, 2, 1, 1])?;
    let cells: Vec<String> = exact.iter().map(ToString::to_string).collect();
    println!("exact:      [{}]", cells.join(", "));
    Ok(())
}
