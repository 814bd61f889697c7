//! Compares the analytic gradient of the total loss with central differences.

use contrast_mot::embedding::EmbeddingMatrix;
use contrast_mot::losses::{total_loss_raw, LossConfig};
use contrast_mot::optimizer::{analytic_gradient, numeric_gradient, DEFAULT_STEP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> contrast_mot::Result<()> {
    let cfg = LossConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dim = 8;
    let frames = [4, 5, 3].map(|n| {
        let v: Vec<f64> = (0..dim * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        EmbeddingMatrix::from_column_slice(dim, n, &v).unwrap()
    });

    let analytic = analytic_gradient(&frames, &cfg)?;
    let numeric = numeric_gradient(
        |f: &[EmbeddingMatrix]| {
            Ok(total_loss_raw(&[f[0].clone(), f[1].clone(), f[2].clone()], &cfg)?.total)
        },
        &frames,
        DEFAULT_STEP,
    )?;
    println!(
        "max abs difference  {:.3e}",
        analytic.max_abs_difference(&numeric)
    );
    println!(
        "max relative error  {:.3e}",
        analytic.max_relative_error(&numeric, 1e-3)
    );
    Ok(())
}
