//! Solve for replication weights on the standard synthetic matrix and show
//! how every label's positive ratio moves.

use dai::dataset::benchmark_matrix;
use dai::optimizer::{integerize, objective, optimize, BalanceConfig, WeightVector};
use dai::resample::materialize;

fn main() -> dai::Result<()> {
    let labels = benchmark_matrix();
    let config = BalanceConfig::default();
    let start = objective(&WeightVector::ones(labels.n_samples()), &labels, &config)?;
    let weights = optimize(&labels, &config)?;
    let end = objective(&weights, &labels, &config)?;
    println!("objective {start:.6} -> {end:.6}");

    let counts = integerize(&weights, config.scale_constant)?;
    let (balanced, _) = materialize(&labels, &counts)?;
    let (before, after) = (labels.column_means(), balanced.column_means());
    println!("rows {} -> {}", labels.n_samples(), balanced.n_samples());
    println!("{:<8} {:>7} {:>7}", "label", "before", "after");
    for (j, name) in labels.attribute_names().iter().enumerate() {
        println!("{name:<8} {:>7.3} {:>7.3}", before[j], after[j]);
    }
    println!("std {:.4} -> {:.4}", before.std_dev(), after.std_dev());
    Ok(())
}
