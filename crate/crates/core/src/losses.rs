//! Self-, cross- and ambiguity-contrast losses over three frames of
//! identity embeddings, and their equal-weight combination.
//!
//! All functions here expect column-normalized [`EmbeddingMatrix`] inputs.
//! Frame order is chronological: `x1` is the oldest frame, `x3` the newest.

use serde::{Deserialize, Serialize};

use crate::embedding::{
    compose, normalize_columns, resoftmax, row_softmax, similarity, AssignmentMatrix,
    EmbeddingMatrix, SimilarityMatrix,
};
use crate::error::{Error, Result};

/// Per-term multipliers used for ablations. All ones reproduces the plain sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub dsc: f64,
    pub isc: f64,
    pub cc: f64,
    pub ac: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::ALL
    }
}

impl LossWeights {
    pub const ALL: LossWeights = LossWeights {
        dsc: 1.0,
        isc: 1.0,
        cc: 1.0,
        ac: 1.0,
    };
    pub const SELF_ONLY: LossWeights = LossWeights {
        dsc: 1.0,
        isc: 1.0,
        cc: 0.0,
        ac: 0.0,
    };

    /// Parses a comma-separated subset such as `"dsc,isc,cc"` (or `"all"`).
    pub fn from_selection(selection: &str) -> Result<Self> {
        if selection.trim() == "all" {
            return Ok(Self::ALL);
        }
        let mut w = LossWeights {
            dsc: 0.0,
            isc: 0.0,
            cc: 0.0,
            ac: 0.0,
        };
        for term in selection
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
        {
            match term {
                "dsc" => w.dsc = 1.0,
                "isc" => w.isc = 1.0,
                "sc" => {
                    w.dsc = 1.0;
                    w.isc = 1.0;
                }
                "cc" => w.cc = 1.0,
                "ac" => w.ac = 1.0,
                other => return Err(Error::InvalidConfig(format!("unknown loss term `{other}`"))),
            }
        }
        Ok(w)
    }

    /// Short label, e.g. `dsc+isc+cc`.
    pub fn label(&self) -> String {
        let names: Vec<&str> = [
            ("dsc", self.dsc),
            ("isc", self.isc),
            ("cc", self.cc),
            ("ac", self.ac),
        ]
        .iter()
        .filter(|(_, w)| *w != 0.0)
        .map(|(n, _)| *n)
        .collect();
        if names.is_empty() {
            "none".to_string()
        } else {
            names.join("+")
        }
    }
}

/// Hyper-parameters shared by all losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Softmax temperature, applied to every row softmax.
    pub tau: f64,
    /// Cosine threshold below which an object's best match is ambiguous.
    pub theta: f64,
    /// Clamp for logarithms and divergences.
    pub epsilon: f64,
    pub weights: LossWeights,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            tau: 0.1,
            theta: 0.7,
            epsilon: 1e-12,
            weights: LossWeights::ALL,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Objects of one frame whose best cross-frame cosine falls below theta.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AmbiguousSet {
    pub frame_index: usize,
    pub indices: Vec<usize>,
}

impl AmbiguousSet {
    pub fn count(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Loss components for one frame triple. `l_sc = l_dsc + l_isc` and
/// `total = l_sc + l_cc + l_ac`, each already multiplied by its weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_dsc: f64,
    pub l_isc: f64,
    pub l_sc: f64,
    pub l_cc: f64,
    pub l_ac: f64,
    pub total: f64,
    /// Set when a frame had no objects; all components are then 0.
    pub skipped: bool,
}

impl LossReport {
    pub(crate) fn from_terms(dsc: f64, isc: f64, cc: f64, ac: f64, w: &LossWeights) -> Self {
        let l_dsc = w.dsc * dsc;
        let l_isc = w.isc * isc;
        let l_sc = l_dsc + l_isc;
        let l_cc = w.cc * cc;
        let l_ac = w.ac * ac;
        Self {
            l_dsc,
            l_isc,
            l_sc,
            l_cc,
            l_ac,
            total: l_sc + l_cc + l_ac,
            skipped: false,
        }
    }

    pub fn skipped() -> Self {
        Self {
            l_dsc: 0.0,
            l_isc: 0.0,
            l_sc: 0.0,
            l_cc: 0.0,
            l_ac: 0.0,
            total: 0.0,
            skipped: true,
        }
    }
}

fn require_objects(x: &EmbeddingMatrix) -> Result<()> {
    if x.count() == 0 {
        Err(Error::EmptyFrame)
    } else {
        Ok(())
    }
}

/// Forward association `a -> b`: row softmax of `X_a^T X_b`.
pub fn association(
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
    cfg: &LossConfig,
) -> Result<AssignmentMatrix> {
    require_objects(a)?;
    require_objects(b)?;
    row_softmax(&similarity(a, b)?, cfg.tau)
}

/// Within-frame assignment `psi_row(X1^T X1)`.
pub fn direct_self_assignment(x1: &EmbeddingMatrix, cfg: &LossConfig) -> Result<AssignmentMatrix> {
    association(x1, x1, cfg)
}

/// Round-trip assignment `S^{1->2} S^{2->1}` (N x N).
pub fn indirect_self_assignment(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    cfg: &LossConfig,
) -> Result<AssignmentMatrix> {
    let forward = association(x1, x2, cfg)?;
    let backward = association(x2, x1, cfg)?;
    compose(&forward, &backward)
}

fn neg_log_diag_sum(a: &AssignmentMatrix, eps: f64) -> f64 {
    -a.diagonal().iter().map(|&d| d.max(eps).ln()).sum::<f64>()
}

/// The direct and indirect halves of the self-contrast loss, each divided by N.
pub fn self_contrast_terms(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    cfg: &LossConfig,
) -> Result<(f64, f64)> {
    let n = x1.count() as f64;
    let direct = direct_self_assignment(x1, cfg)?;
    let indirect = indirect_self_assignment(x1, x2, cfg)?;
    Ok((
        neg_log_diag_sum(&direct, cfg.epsilon) / n,
        neg_log_diag_sum(&indirect, cfg.epsilon) / n,
    ))
}

/// `-(1/N) (sum log diag(S_dsc) + sum log diag(S_isc))`.
pub fn self_contrast_loss(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    cfg: &LossConfig,
) -> Result<f64> {
    let (d, i) = self_contrast_terms(x1, x2, cfg)?;
    Ok(d + i)
}

/// `sum p log(p / max(q, eps))`; terms with `p = 0` contribute nothing.
pub fn kl_divergence(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi.max(eps)).ln())
        .sum())
}

/// Jensen-Shannon divergence of two distributions.
pub fn js_divergence_row(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let t: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(0.5 * kl_divergence(p, &t, eps)? + 0.5 * kl_divergence(q, &t, eps)?)
}

/// Row-wise Jensen-Shannon divergence, summed over rows.
pub fn js_divergence(p: &AssignmentMatrix, q: &AssignmentMatrix, eps: f64) -> Result<f64> {
    if p.rows() != q.rows() || p.cols() != q.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            p.rows(),
            p.cols(),
            q.rows(),
            q.cols()
        )));
    }
    (0..p.rows()).try_fold(0.0, |acc, i| {
        Ok(acc + js_divergence_row(&p.row(i), &q.row(i), eps)?)
    })
}

/// Agreement between direct `1 -> 3` matching and matching through frame 2.
pub fn cross_contrast_loss(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    x3: &EmbeddingMatrix,
    cfg: &LossConfig,
) -> Result<f64> {
    let p12 = association(x1, x2, cfg)?;
    let p21 = association(x2, x1, cfg)?;
    let p23 = association(x2, x3, cfg)?;
    let p32 = association(x3, x2, cfg)?;
    let p13 = association(x1, x3, cfg)?;
    let p31 = association(x3, x1, cfg)?;
    let via_13 = resoftmax(&compose(&p12, &p23)?, cfg.tau)?;
    let via_31 = resoftmax(&compose(&p32, &p21)?, cfg.tau)?;
    let n = x1.count() as f64;
    let k = x3.count() as f64;
    Ok(js_divergence(&via_13, &p13, cfg.epsilon)? / n
        + js_divergence(&via_31, &p31, cfg.epsilon)? / k)
}

/// Rows of `sim` whose largest raw cosine is below `cfg.theta`.
///
/// `assign` is the softmaxed association for the same frame pair; it only
/// fixes the shape; the threshold is applied to the raw cosines.
pub fn find_ambiguous(
    assign: &AssignmentMatrix,
    sim: &SimilarityMatrix,
    frame_index: usize,
    cfg: &LossConfig,
) -> Result<AmbiguousSet> {
    if assign.rows() != sim.rows() || assign.cols() != sim.cols() {
        return Err(Error::ShapeMismatch(format!(
            "assignment {}x{} vs similarity {}x{}",
            assign.rows(),
            assign.cols(),
            sim.rows(),
            sim.cols()
        )));
    }
    Ok(AmbiguousSet {
        frame_index,
        indices: (0..sim.rows())
            .filter(|&i| sim.row_max(i) < cfg.theta)
            .collect(),
    })
}

/// Ambiguous objects of frame 1 (vs frame 2) and of frame 2 (vs frame 1).
pub fn ambiguous_sets(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    cfg: &LossConfig,
) -> Result<(AmbiguousSet, AmbiguousSet)> {
    let s12 = similarity(x1, x2)?;
    let s21 = s12.transpose();
    let p12 = row_softmax(&s12, cfg.tau)?;
    let p21 = row_softmax(&s21, cfg.tau)?;
    Ok((
        find_ambiguous(&p12, &s12, 0, cfg)?,
        find_ambiguous(&p21, &s21, 1, cfg)?,
    ))
}

/// Adaptive weight `1 / (|N_r - M_r| + 1)`.
pub fn ambiguity_coefficient(n_r: usize, m_r: usize) -> f64 {
    1.0 / (n_r.abs_diff(m_r) as f64 + 1.0)
}

/// `sum p log p` over every entry, with `p` clamped at `eps` inside the log.
fn plogp_sum(a: &AssignmentMatrix, eps: f64) -> f64 {
    a.as_matrix().iter().map(|&p| p * p.max(eps).ln()).sum()
}

/// Normalized entropies `-(1/N_r) sum S_r^{1->2} log S_r^{1->2}` and
/// `-(1/M_r) sum S_r^{2->1} log S_r^{2->1}` for the given ambiguous sets.
pub fn ambiguity_entropy_terms(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    set1: &AmbiguousSet,
    set2: &AmbiguousSet,
    cfg: &LossConfig,
) -> Result<(f64, f64)> {
    if set1.is_empty() || set2.is_empty() {
        return Ok((0.0, 0.0));
    }
    let r1 = x1.select_columns(&set1.indices);
    let r2 = x2.select_columns(&set2.indices);
    let forward = association(&r1, &r2, cfg)?;
    let backward = association(&r2, &r1, cfg)?;
    Ok((
        -plogp_sum(&forward, cfg.epsilon) / set1.count() as f64,
        -plogp_sum(&backward, cfg.epsilon) / set2.count() as f64,
    ))
}

/// Ambiguity-contrast loss for explicitly given ambiguous sets.
pub fn ambiguity_loss_for_sets(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    set1: &AmbiguousSet,
    set2: &AmbiguousSet,
    cfg: &LossConfig,
) -> Result<f64> {
    let (h12, h21) = ambiguity_entropy_terms(x1, x2, set1, set2, cfg)?;
    Ok(ambiguity_coefficient(set1.count(), set2.count()) * (h12 + h21))
}

/// Entropy minimization over objects with no confident match between frames 1 and 2.
pub fn ambiguity_contrast_loss(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    cfg: &LossConfig,
) -> Result<f64> {
    require_objects(x1)?;
    require_objects(x2)?;
    let (set1, set2) = ambiguous_sets(x1, x2, cfg)?;
    ambiguity_loss_for_sets(x1, x2, &set1, &set2, cfg)
}

/// Weighted `L_sc + L_cc + L_ac` for frames `(x1, x2, x3)` in chronological order.
///
/// Self- and ambiguity-contrast use the pair `(x1, x2)`. A triple containing
/// an empty frame yields [`LossReport::skipped`].
pub fn total_loss(
    x1: &EmbeddingMatrix,
    x2: &EmbeddingMatrix,
    x3: &EmbeddingMatrix,
    cfg: &LossConfig,
) -> Result<LossReport> {
    cfg.validate()?;
    if x1.count() == 0 || x2.count() == 0 || x3.count() == 0 {
        return Ok(LossReport::skipped());
    }
    let (dsc, isc) = self_contrast_terms(x1, x2, cfg)?;
    let cc = cross_contrast_loss(x1, x2, x3, cfg)?;
    let ac = ambiguity_contrast_loss(x1, x2, cfg)?;
    Ok(LossReport::from_terms(dsc, isc, cc, ac, &cfg.weights))
}

/// [`total_loss`] on raw (unnormalized) embeddings.
pub fn total_loss_raw(frames: &[EmbeddingMatrix; 3], cfg: &LossConfig) -> Result<LossReport> {
    if frames.iter().any(|f| f.count() == 0) {
        return Ok(LossReport::skipped());
    }
    let x1 = normalize_columns(&frames[0])?;
    let x2 = normalize_columns(&frames[1])?;
    let x3 = normalize_columns(&frames[2])?;
    total_loss(&x1, &x2, &x3, cfg)
}
