//! Loss terms on a closed-form case and along a synthetic sequence.

use contrast_mot::embedding::EmbeddingMatrix;
use contrast_mot::losses::{self_contrast_loss, total_loss, LossConfig};
use contrast_mot::synth::{generate, ScenarioSpec};
use contrast_mot::workflows::loss_stream;

fn main() -> contrast_mot::Result<()> {
    // Two orthonormal objects seen identically in both frames, tau = 1.
    let x = EmbeddingMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 1.0])?;
    let cfg = LossConfig {
        tau: 1.0,
        ..LossConfig::default()
    };
    println!(
        "L_sc (orthonormal, tau 1) = {:.6}",
        self_contrast_loss(&x, &x, &cfg)?
    );

    let spec = ScenarioSpec {
        seed: 1,
        num_frames: 12,
        num_identities: 6,
        ..ScenarioSpec::default()
    };
    let s = generate(&spec)?;
    let frames = s.frame_embeddings();
    let r = total_loss(&frames[0], &frames[1], &frames[2], &LossConfig::default())?;
    println!("first triple: {r:?}");

    for interval in [1, 3] {
        let stream = loss_stream(
            &s.detections,
            spec.embed_dim,
            interval,
            &LossConfig::default(),
        )?;
        let mean = stream.iter().map(|t| t.report.total).sum::<f64>() / stream.len() as f64;
        println!(
            "interval {interval}: {} triples, mean total {mean:.6}",
            stream.len()
        );
    }
    Ok(())
}
