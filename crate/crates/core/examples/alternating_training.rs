//! Train the logistic model on the full set alone and with sub-balance
//! epochs interleaved, and compare held-out mA on the rarest labels.

use dai::dataset::benchmark_ratios;
use dai::experiment::build_sub_balance;
use dai::optimizer::BalanceConfig;
use dai::trainer::{evaluate, synth_task, train, Phase, TrainConfig};

fn main() -> dai::Result<()> {
    let task = synth_task(5000, 20, 40, &benchmark_ratios(20), 11)?;
    let (scale, index) = build_sub_balance(&task.train_labels, &BalanceConfig::default(), Some(0.4))?;
    println!("sub-balance rows: {} (scale {:.4})", index.len(), scale.scale);

    let full = TrainConfig { seed: 3, ..TrainConfig::default() };
    let alternating = TrainConfig { schedule: vec![Phase::Sub, Phase::Full], ..full.clone() };
    let a = evaluate(&train(&task.train_features, &task.train_labels, Some(&index), &full)?, &task.test_features, &task.test_labels)?;
    let b = evaluate(&train(&task.train_features, &task.train_labels, Some(&index), &alternating)?, &task.test_features, &task.test_labels)?;

    println!("{:<8} {:>7} {:>7} {:>7}", "label", "ratio", "full", "alt");
    for j in 0..5 {
        println!("{:<8} {:>7.3} {:>7.4} {:>7.4}", a.attribute_names[j], a.per_label_positive_ratio[j], a.per_label_ma[j], b.per_label_ma[j]);
    }
    println!("mean mA: full {:.4}, alternating {:.4}", a.mean_accuracy, b.mean_accuracy);
    Ok(())
}
