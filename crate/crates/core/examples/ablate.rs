//! Tracking quality after refining embeddings with different loss subsets.
//!
//! `cargo run --release --example ablate -- [num_seeds]`

use contrast_mot::losses::{LossConfig, LossWeights};
use contrast_mot::metrics::DEFAULT_IOU_THRESHOLD;
use contrast_mot::synth::BenchmarkOptions;
use contrast_mot::tracker::TrackerConfig;
use contrast_mot::workflows::{ablate, ablation_table, RefineOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(2);
    let seeds: Vec<u64> = (0..n).collect();
    let variants = [LossWeights::SELF_ONLY, LossWeights::ALL];
    let rows = ablate(
        &seeds,
        &variants,
        &BenchmarkOptions::default(),
        &LossConfig::default(),
        &RefineOptions::default(),
        &TrackerConfig::default(),
        DEFAULT_IOU_THRESHOLD,
    )?;
    print!("{}", ablation_table(&rows));
    Ok(())
}
