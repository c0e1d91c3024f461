//! Score noisy predictions with label-based and example-based metrics.

use dai::dataset::{synth_generate, RatioVector};
use dai::metrics::{metric_table_csv, metric_vs_ratio_table, MetricsReport, PredictionMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> dai::Result<()> {
    let labels = synth_generate(500, 6, &RatioVector::linspace(0.05, 0.8, 6)?, 4)?;
    // Scores lean toward the truth, with noise.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scores = labels.entries().iter().map(|&y| (0.3 * f64::from(y) + rng.gen::<f64>() * 0.7).min(1.0)).collect();
    let preds = PredictionMatrix::new(labels.sample_ids().to_vec(), labels.attribute_names().to_vec(), scores, 0.5)?;

    let report = MetricsReport::evaluate(&preds, &labels)?;
    print!("{}", String::from_utf8_lossy(&report.to_json_bytes()));
    print!("{}", String::from_utf8_lossy(&metric_table_csv(&metric_vs_ratio_table(&preds, &labels)?)));
    Ok(())
}
