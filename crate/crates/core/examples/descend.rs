//! Gradient descent on one frame triple: the self-contrast diagonal rises.

use contrast_mot::losses::LossConfig;
use contrast_mot::optimizer::optimize;
use contrast_mot::synth::correlated_triple;

fn main() -> contrast_mot::Result<()> {
    let frames = correlated_triple(0, 10, 32, 0.8)?;
    let trace = optimize(&frames, &LossConfig::default(), 200, 0.5)?;
    for t in trace.iter().filter(|t| t.step % 40 == 0) {
        println!(
            "step {:>3}  total {:.6}  mean diag(S_isc) {:.6}",
            t.step, t.loss_report.total, t.mean_self_diag
        );
    }
    Ok(())
}
