//! Context-disjoint train/dev/test split of the synthetic dataset.

use multievent::corpus::{dataset_stats, split_dataset, stats_json, SplitConfig};
use multievent::toydata::toy_dataset;

fn main() -> multievent::Result<()> {
    let (_, records) = toy_dataset(200, 1);
    let splits = split_dataset(&records, &SplitConfig { seed: 3, ..Default::default() })?;
    println!("{}", serde_json::to_string_pretty(&stats_json(&dataset_stats(&splits)))?);
    Ok(())
}
