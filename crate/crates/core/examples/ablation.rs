//! The four-method comparison on the synthetic task for a few seeds.

use dai::experiment::{run_benchmark, BenchmarkConfig};

fn main() -> dai::Result<()> {
    let config = BenchmarkConfig::default();
    for seed in 1..=3 {
        let outcome = run_benchmark(&config, seed)?;
        println!("seed {seed}");
        for row in outcome.summary().rows {
            println!("  {:<14} mA {:.4}  F1 {:.4}", row.method, row.ma, row.f1);
        }
    }
    Ok(())
}
