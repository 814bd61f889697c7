//! Generates a synthetic scenario and writes it as MOT files.
//!
//! `cargo run --example simulate -- [out_dir] [seed]`

use std::path::PathBuf;

use contrast_mot::synth::ScenarioSpec;
use contrast_mot::workflows::simulate_to_dir;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("contrast-mot-simulate"));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let spec = ScenarioSpec {
        seed,
        ..ScenarioSpec::default()
    };
    let (scenario, files) = simulate_to_dir(&spec, &out)?;
    let boxes: usize = scenario.detections.iter().map(Vec::len).sum();
    println!(
        "{} identities, {} frames, {boxes} detections, D = {}",
        spec.num_identities, spec.num_frames, spec.embed_dim
    );
    println!(
        "wrote {}, {}, {}, {}",
        files.gt.display(),
        files.det.display(),
        files.emb.display(),
        files.spec.display()
    );
    Ok(())
}
