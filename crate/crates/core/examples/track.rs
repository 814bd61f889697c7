//! Tracks a noise-free synthetic scenario and scores the result.

use contrast_mot::metrics::{evaluate, DEFAULT_IOU_THRESHOLD};
use contrast_mot::synth::{generate, ScenarioSpec};
use contrast_mot::tracker::TrackerConfig;
use contrast_mot::workflows::track_detections;

fn main() -> contrast_mot::Result<()> {
    let spec = ScenarioSpec {
        seed: 5,
        embed_noise: 0.0,
        ..ScenarioSpec::default()
    };
    let s = generate(&spec)?;
    let result = track_detections(&s.detections, &TrackerConfig::default())?;
    let report = evaluate(&s.ground_truth.to_records(), &result, DEFAULT_IOU_THRESHOLD)?;
    print!("{}", report.to_text());
    Ok(())
}
