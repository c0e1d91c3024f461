//! Pick the integerization scale that yields a sub-balance set of a given
//! size relative to the source.

use dai::dataset::benchmark_matrix;
use dai::optimizer::{find_scale_for_fraction, optimize, BalanceConfig};

fn main() -> dai::Result<()> {
    let labels = benchmark_matrix();
    let weights = optimize(&labels, &BalanceConfig::default())?;
    println!("{:>8} {:>10} {:>7} {:>9}", "target", "scale", "rows", "achieved");
    for target in [0.1, 0.25, 0.4, 0.6, 1.0] {
        let choice = find_scale_for_fraction(&weights, target, labels.n_samples())?;
        println!("{target:>8.2} {:>10.4} {:>7} {:>9.4}", choice.scale, choice.total, choice.achieved_fraction);
    }
    Ok(())
}
