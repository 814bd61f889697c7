//! Gradients of the contrast losses with respect to raw (unnormalized)
//! embeddings, a central-difference checker, and a plain descent loop.
//!
//! The backward pass mirrors the forward computation in [`crate::losses`]:
//! column normalization, `X_a^T X_b`, temperature softmax, assignment
//! products, log-diagonal, Jensen-Shannon and entropy terms. Ambiguous sets
//! are piecewise constant in the embeddings and are held fixed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embedding::{normalize_columns, softmax_rows, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::losses::{
    ambiguity_coefficient, ambiguous_sets, indirect_self_assignment, total_loss_raw, LossConfig,
    LossReport,
};

/// Per-frame gradients, each shaped like the matching embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub frames: Vec<DMatrix<f64>>,
}

impl GradientField {
    pub fn zeros_like(frames: &[EmbeddingMatrix]) -> Self {
        Self {
            frames: frames
                .iter()
                .map(|f| DMatrix::zeros(f.dim(), f.count()))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.frames.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }

    /// Largest per-entry `|a - b| / max(|a|, |b|, floor)`.
    pub fn max_relative_error(&self, other: &GradientField, floor: f64) -> f64 {
        self.frames
            .iter()
            .zip(&other.frames)
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .map(|(&a, &b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_difference(&self, other: &GradientField) -> f64 {
        self.frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &GradientField) -> GradientField {
        GradientField {
            frames: self
                .frames
                .iter()
                .zip(&other.frames)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// One record of a descent run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub step: usize,
    pub loss_report: LossReport,
    /// Mean of `diag(S_isc)` between the first two frames.
    pub mean_self_diag: f64,
}

/// Backward through a row softmax of `s / tau`: returns `dL/ds`.
fn softmax_backward(p: &DMatrix<f64>, dp: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let mut ds = DMatrix::zeros(p.nrows(), p.ncols());
    for i in 0..p.nrows() {
        let inner: f64 = (0..p.ncols()).map(|k| dp[(i, k)] * p[(i, k)]).sum();
        for j in 0..p.ncols() {
            ds[(i, j)] = p[(i, j)] * (dp[(i, j)] - inner) / tau;
        }
    }
    ds
}

/// Forward association `softmax(X_a^T X_b / tau)` plus its accumulated upstream gradient.
struct Assoc {
    p: DMatrix<f64>,
    dp: DMatrix<f64>,
}

impl Assoc {
    fn new(a: &DMatrix<f64>, b: &DMatrix<f64>, tau: f64) -> Self {
        let p = softmax_rows(&a.tr_mul(b), tau);
        let dp = DMatrix::zeros(p.nrows(), p.ncols());
        Self { p, dp }
    }

    /// Pushes `dp` into the gradients of the two normalized operands.
    fn backward(
        &self,
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        tau: f64,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let ds = softmax_backward(&self.p, &self.dp, tau);
        (b * ds.transpose(), a * ds)
    }
}

/// Adds the gradient of `-(w/N) sum log max(diag(c), eps)` to `dc`.
fn neg_log_diag_backward(c: &DMatrix<f64>, dc: &mut DMatrix<f64>, scale: f64, eps: f64) {
    for i in 0..c.nrows() {
        if c[(i, i)] > eps {
            dc[(i, i)] -= scale / c[(i, i)];
        }
    }
}

/// Gradients of `scale * sum_rows JSD(p_row || q_row)` w.r.t. `p` and `q`.
fn jsd_backward(p: &DMatrix<f64>, q: &DMatrix<f64>, scale: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut dp = DMatrix::zeros(p.nrows(), p.ncols());
    let mut dq = DMatrix::zeros(q.nrows(), q.ncols());
    for (idx, (&pv, &qv)) in p.iter().zip(q.iter()).enumerate() {
        let t = 0.5 * (pv + qv);
        if pv > 0.0 {
            dp[idx] = 0.5 * scale * (pv / t).ln();
        }
        if qv > 0.0 {
            dq[idx] = 0.5 * scale * (qv / t).ln();
        }
    }
    (dp, dq)
}

/// Projects gradients w.r.t. normalized columns back onto the raw columns.
fn through_normalization(
    raw: &DMatrix<f64>,
    unit: &DMatrix<f64>,
    g: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(raw.nrows(), raw.ncols());
    for j in 0..raw.ncols() {
        let norm = raw.column(j).norm();
        let x = unit.column(j);
        let gj = g.column(j);
        let radial = x.dot(&gj);
        out.set_column(j, &((gj - x * radial) / norm));
    }
    out
}

/// Loss report and exact gradient of the weighted total loss for one frame triple.
pub fn loss_and_gradient(
    frames: &[EmbeddingMatrix; 3],
    cfg: &LossConfig,
) -> Result<(LossReport, GradientField)> {
    cfg.validate()?;
    if frames.iter().any(|f| f.count() == 0) {
        return Err(Error::EmptyFrame);
    }
    let report = total_loss_raw(frames, cfg)?;
    let units: Vec<EmbeddingMatrix> = frames
        .iter()
        .map(normalize_columns)
        .collect::<Result<_>>()?;
    let x1 = units[0].as_matrix();
    let x2 = units[1].as_matrix();
    let x3 = units[2].as_matrix();
    let n = x1.ncols() as f64;
    let k = x3.ncols() as f64;
    let (tau, eps, w) = (cfg.tau, cfg.epsilon, cfg.weights);

    let mut g1 = DMatrix::zeros(x1.nrows(), x1.ncols());
    let mut g2 = DMatrix::zeros(x2.nrows(), x2.ncols());
    let mut g3 = DMatrix::zeros(x3.nrows(), x3.ncols());

    if w.dsc != 0.0 {
        let mut d11 = Assoc::new(x1, x1, tau);
        let p = d11.p.clone();
        neg_log_diag_backward(&p, &mut d11.dp, w.dsc / n, eps);
        let (ga, gb) = d11.backward(x1, x1, tau);
        g1 += ga + gb;
    }

    let need_12 = w.isc != 0.0 || w.cc != 0.0;
    if need_12 {
        let mut a12 = Assoc::new(x1, x2, tau);
        let mut a21 = Assoc::new(x2, x1, tau);

        if w.isc != 0.0 {
            let c = &a12.p * &a21.p;
            let mut dc = DMatrix::zeros(c.nrows(), c.ncols());
            neg_log_diag_backward(&c, &mut dc, w.isc / n, eps);
            a12.dp += &dc * a21.p.transpose();
            a21.dp += a12.p.transpose() * &dc;
        }

        if w.cc != 0.0 {
            let mut a23 = Assoc::new(x2, x3, tau);
            let mut a32 = Assoc::new(x3, x2, tau);
            let mut a13 = Assoc::new(x1, x3, tau);
            let mut a31 = Assoc::new(x3, x1, tau);

            let via13_in = &a12.p * &a23.p;
            let via13 = softmax_rows(&via13_in, tau);
            let (d_via13, d_p13) = jsd_backward(&via13, &a13.p, w.cc / n);
            a13.dp += d_p13;
            let d_in = softmax_backward(&via13, &d_via13, tau);
            a12.dp += &d_in * a23.p.transpose();
            a23.dp += a12.p.transpose() * &d_in;

            let via31_in = &a32.p * &a21.p;
            let via31 = softmax_rows(&via31_in, tau);
            let (d_via31, d_p31) = jsd_backward(&via31, &a31.p, w.cc / k);
            a31.dp += d_p31;
            let d_in = softmax_backward(&via31, &d_via31, tau);
            a32.dp += &d_in * a21.p.transpose();
            a21.dp += a32.p.transpose() * &d_in;

            let (ga, gb) = a23.backward(x2, x3, tau);
            g2 += ga;
            g3 += gb;
            let (ga, gb) = a32.backward(x3, x2, tau);
            g3 += ga;
            g2 += gb;
            let (ga, gb) = a13.backward(x1, x3, tau);
            g1 += ga;
            g3 += gb;
            let (ga, gb) = a31.backward(x3, x1, tau);
            g3 += ga;
            g1 += gb;
        }

        let (ga, gb) = a12.backward(x1, x2, tau);
        g1 += ga;
        g2 += gb;
        let (ga, gb) = a21.backward(x2, x1, tau);
        g2 += ga;
        g1 += gb;
    }

    if w.ac != 0.0 {
        let (set1, set2) = ambiguous_sets(&units[0], &units[1], cfg)?;
        if !set1.is_empty() && !set2.is_empty() {
            let r1 = x1.select_columns(&set1.indices);
            let r2 = x2.select_columns(&set2.indices);
            let coeff = w.ac * ambiguity_coefficient(set1.count(), set2.count());
            let mut f = Assoc::new(&r1, &r2, tau);
            let mut b = Assoc::new(&r2, &r1, tau);
            let nr = set1.count() as f64;
            let mr = set2.count() as f64;
            f.dp =
                f.p.map(|p| -coeff / nr * (p.max(eps).ln() + if p > eps { 1.0 } else { 0.0 }));
            b.dp =
                b.p.map(|p| -coeff / mr * (p.max(eps).ln() + if p > eps { 1.0 } else { 0.0 }));
            let (gr1, gr2) = f.backward(&r1, &r2, tau);
            let (hr2, hr1) = b.backward(&r2, &r1, tau);
            for (c, &col) in set1.indices.iter().enumerate() {
                let upd = gr1.column(c) + hr1.column(c);
                let mut target = g1.column_mut(col);
                target += upd;
            }
            for (c, &col) in set2.indices.iter().enumerate() {
                let upd = gr2.column(c) + hr2.column(c);
                let mut target = g2.column_mut(col);
                target += upd;
            }
        }
    }

    let field = GradientField {
        frames: vec![
            through_normalization(frames[0].as_matrix(), x1, &g1),
            through_normalization(frames[1].as_matrix(), x2, &g2),
            through_normalization(frames[2].as_matrix(), x3, &g3),
        ],
    };
    if !field.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok((report, field))
}

/// Exact gradient of [`crate::losses::total_loss`] w.r.t. the raw embeddings.
pub fn analytic_gradient(frames: &[EmbeddingMatrix; 3], cfg: &LossConfig) -> Result<GradientField> {
    loss_and_gradient(frames, cfg).map(|(_, g)| g)
}

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Central differences `(L(x + h) - L(x - h)) / 2h` for every raw entry.
///
/// `loss_fn` receives perturbed raw frames and is responsible for any
/// normalization, so the result is a gradient w.r.t. raw embeddings.
pub fn numeric_gradient<F>(loss_fn: F, frames: &[EmbeddingMatrix], h: f64) -> Result<GradientField>
where
    F: Fn(&[EmbeddingMatrix]) -> Result<f64>,
{
    if !(1e-7..=1e-4).contains(&h) {
        return Err(Error::InvalidConfig(format!(
            "step {h} outside [1e-7, 1e-4]"
        )));
    }
    if !loss_fn(frames)?.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    let mut field = GradientField::zeros_like(frames);
    let mut work: Vec<EmbeddingMatrix> = frames.to_vec();
    for f in 0..frames.len() {
        let base = frames[f].as_matrix().clone();
        for idx in 0..base.len() {
            let mut plus = base.clone();
            plus[idx] += h;
            work[f] = EmbeddingMatrix::new(plus);
            let up = loss_fn(&work)?;
            let mut minus = base.clone();
            minus[idx] -= h;
            work[f] = EmbeddingMatrix::new(minus);
            let down = loss_fn(&work)?;
            if !(up.is_finite() && down.is_finite()) {
                return Err(Error::NonFiniteLoss);
            }
            field.frames[f][idx] = (up - down) / (2.0 * h);
        }
        work[f] = frames[f].clone();
    }
    Ok(field)
}

/// Mean of `diag(S_isc)` between two raw frames.
pub fn mean_self_diagonal(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    cfg: &LossConfig,
) -> Result<f64> {
    let s = indirect_self_assignment(&normalize_columns(x1)?, &normalize_columns(x2)?, cfg)?;
    let d = s.diagonal();
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

fn check_descent(steps: usize, lr: f64) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidConfig("steps must be >= 1".into()));
    }
    if !(lr > 0.0 && lr <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "learning rate {lr} outside (0, 1]"
        )));
    }
    Ok(())
}

fn descend(frame: &EmbeddingMatrix, grad: &DMatrix<f64>, lr: f64) -> Result<EmbeddingMatrix> {
    normalize_columns(&EmbeddingMatrix::new(frame.as_matrix() - grad * lr))
}

/// Gradient descent on a frame triple, re-normalizing after every step.
///
/// Returns the trace (entry 0 is the starting point, one entry per step
/// after that) and the final frames.
pub fn optimize_frames(
    frames: &[EmbeddingMatrix; 3],
    cfg: &LossConfig,
    steps: usize,
    lr: f64,
) -> Result<(Vec<OptimizationTrace>, [EmbeddingMatrix; 3])> {
    check_descent(steps, lr)?;
    let mut current: [EmbeddingMatrix; 3] = [
        normalize_columns(&frames[0])?,
        normalize_columns(&frames[1])?,
        normalize_columns(&frames[2])?,
    ];
    let mut trace = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let (report, grad) = loss_and_gradient(&current, cfg)?;
        trace.push(OptimizationTrace {
            step,
            loss_report: report,
            mean_self_diag: mean_self_diagonal(&current[0], &current[1], cfg)?,
        });
        if step == steps {
            break;
        }
        current = [
            descend(&current[0], &grad.frames[0], lr)?,
            descend(&current[1], &grad.frames[1], lr)?,
            descend(&current[2], &grad.frames[2], lr)?,
        ];
    }
    Ok((trace, current))
}

/// Plain gradient descent on a frame triple; see [`optimize_frames`].
pub fn optimize(
    frames: &[EmbeddingMatrix; 3],
    cfg: &LossConfig,
    steps: usize,
    lr: f64,
) -> Result<Vec<OptimizationTrace>> {
    optimize_frames(frames, cfg, steps, lr).map(|(t, _)| t)
}

/// Full-batch descent over every triple `(t - 2g, t - g, t)` of a sequence.
///
/// Each epoch sums the triple gradients, then moves every frame at once.
/// Triples containing an empty frame are skipped. Returns the summed loss
/// before each epoch.
pub fn refine_sequence(
    frames: &mut [EmbeddingMatrix],
    interval: usize,
    cfg: &LossConfig,
    epochs: usize,
    lr: f64,
) -> Result<Vec<f64>> {
    check_descent(epochs.max(1), lr)?;
    if interval == 0 {
        return Err(Error::InvalidConfig("interval must be >= 1".into()));
    }
    for f in frames.iter_mut() {
        if f.count() > 0 {
            *f = normalize_columns(f)?;
        }
    }
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let mut grads: Vec<DMatrix<f64>> = frames
            .iter()
            .map(|f| DMatrix::zeros(f.dim(), f.count()))
            .collect();
        let mut total = 0.0;
        for t in 2 * interval..frames.len() {
            let (a, b) = (t - 2 * interval, t - interval);
            if frames[a].count() == 0 || frames[b].count() == 0 || frames[t].count() == 0 {
                continue;
            }
            let triple = [frames[a].clone(), frames[b].clone(), frames[t].clone()];
            let (report, g) = loss_and_gradient(&triple, cfg)?;
            total += report.total;
            grads[a] += &g.frames[0];
            grads[b] += &g.frames[1];
            grads[t] += &g.frames[2];
        }
        history.push(total);
        for (f, g) in frames.iter_mut().zip(&grads) {
            if f.count() > 0 {
                *f = descend(f, g, lr)?;
            }
        }
    }
    Ok(history)
}
