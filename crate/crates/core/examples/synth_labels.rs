//! Generate an imbalanced label file and read it back.

use dai::dataset::{load_label_csv, save_label_csv, synth_generate, RatioVector};

fn main() -> dai::Result<()> {
    let path = std::env::temp_dir().join("dai_synth_labels.csv");
    let labels = synth_generate(1000, 8, &RatioVector::linspace(0.03, 0.9, 8)?, 42)?;
    save_label_csv(&labels, &path)?;
    let back = load_label_csv(&path)?;
    assert_eq!(back, labels);
    println!("wrote {} ({} x {}), sha256 {}", path.display(), back.n_samples(), back.n_attributes(), back.checksum());
    println!("column ratios: {:?}", back.column_means().values());
    Ok(())
}
