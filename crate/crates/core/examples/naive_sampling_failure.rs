//! Why per-label over- and under-sampling break down on multi-label data:
//! duplicating rows for one label drags its co-occurring labels along.

use dai::dataset::{weighted_positive_ratio, LabelMatrix};
use dai::optimizer::{integerize, optimize, BalanceConfig};
use dai::resample::{random_oversample, random_undersample};

fn show(name: &str, labels: &LabelMatrix, weights: &[f64]) -> dai::Result<()> {
    let ratios = weighted_positive_ratio(labels, weights)?;
    let cells: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    println!("{name:<14} {}", cells.join("  "));
    Ok(())
}

fn main() -> dai::Result<()> {
    // Label 0 is rare and always appears with the common label 1; label 2 never does.
    let mut rows = vec![vec![1, 1, 0]; 4];
    rows.extend(vec![vec![0, 1, 0]; 56]);
    rows.extend(vec![vec![0, 0, 1]; 40]);
    let labels = LabelMatrix::from_rows(&rows)?;

    show("source", &labels, &vec![1.0; labels.n_samples()])?;
    let up = random_oversample(&labels, 0, 0.4, 1)?;
    show("oversample a0", &labels, &up.as_weights())?;
    let down = random_undersample(&labels, 0, 0.4, 1)?;
    show("undersample a0", &labels, &down.as_weights())?;

    let config = BalanceConfig::default();
    let counts = integerize(&optimize(&labels, &config)?, config.scale_constant)?;
    show("joint weights", &labels, &counts.as_weights())?;
    Ok(())
}
