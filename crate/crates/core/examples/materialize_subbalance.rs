//! Expand replication counts into a dataset and round-trip its index file.

use dai::dataset::LabelMatrix;
use dai::optimizer::ReplicationCounts;
use dai::resample::{materialize, SubBalanceIndex};

fn main() -> dai::Result<()> {
    let labels = LabelMatrix::from_rows(&[vec![1, 0], vec![0, 1], vec![1, 1], vec![0, 0]])?;
    let counts = ReplicationCounts::new(vec![2, 0, 3, 1])?;
    let (expanded, index) = materialize(&labels, &counts)?;

    print!("{}", String::from_utf8_lossy(&expanded.to_csv_bytes()));
    let index_csv = index.to_csv_bytes();
    print!("{}", String::from_utf8_lossy(&index_csv));

    // The index alone rebuilds the expansion, but only from the matching source.
    let back = SubBalanceIndex::from_csv_bytes(&index_csv)?;
    assert_eq!(back.expand(&labels)?, expanded);
    let edited = LabelMatrix::from_rows(&[vec![1, 0], vec![0, 1], vec![1, 1], vec![1, 0]])?;
    println!("expand against edited source: {}", back.expand(&edited).unwrap_err());
    Ok(())
}
