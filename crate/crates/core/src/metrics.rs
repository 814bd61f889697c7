//! CLEAR-MOT and identity metrics.
//!
//! CLEAR matching per frame: correspondences from earlier frames are kept
//! while their IoU stays at or above the threshold, the rest are matched by
//! Hungarian assignment on IoU. A ground-truth identity whose new match
//! differs from its last matched prediction counts one identity switch.
//! Mostly tracked means matched in at least 80% of the frames where the
//! identity is present, mostly lost means at most 20%.
//!
//! IDF1 uses the global identity matching that maximizes the number of
//! identity true positives.
//!
//! HOTA is not computed.

use std::collections::{BTreeMap, HashMap, HashSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assignment::linear_sum_assignment;
use crate::bbox::{iou_unchecked, BBox};
use crate::error::{Error, Result};
use crate::mot_io::MotRecord;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;
pub const MOSTLY_TRACKED: f64 = 0.8;
pub const MOSTLY_LOST: f64 = 0.2;

/// Cost for pairs below the IoU threshold; large enough that the solver
/// maximizes the number of feasible matches first.
const INFEASIBLE: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClearMetrics {
    pub mota: f64,
    #[serde(rename = "fp")]
    pub false_positives: usize,
    #[serde(rename = "fn")]
    pub false_negatives: usize,
    #[serde(rename = "ids")]
    pub id_switches: usize,
    #[serde(rename = "mt")]
    pub mostly_tracked: usize,
    #[serde(rename = "ml")]
    pub mostly_lost: usize,
    pub num_trajectories: usize,
    pub gt_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityMetrics {
    pub idf1: f64,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
}

/// Full evaluation of one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mota: f64,
    pub idf1: f64,
    #[serde(rename = "fp")]
    pub false_positives: usize,
    #[serde(rename = "fn")]
    pub false_negatives: usize,
    #[serde(rename = "ids")]
    pub id_switches: usize,
    #[serde(rename = "mt")]
    pub mostly_tracked: usize,
    #[serde(rename = "ml")]
    pub mostly_lost: usize,
    pub mt_ratio: f64,
    pub ml_ratio: f64,
    pub num_trajectories: usize,
    pub gt_count: usize,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
}

struct Object {
    id: i64,
    bbox: BBox,
}

type Frames = BTreeMap<u32, (Vec<Object>, Vec<Object>)>;

fn group(gt: &[MotRecord], pred: &[MotRecord]) -> Result<Frames> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let mut frames: Frames = BTreeMap::new();
    for (records, is_gt) in [(gt, true), (pred, false)] {
        for r in records {
            let b = BBox::from_array(r.bbox());
            if !b.is_valid() {
                return Err(Error::DegenerateBox);
            }
            let slot = frames.entry(r.frame).or_default();
            let list = if is_gt { &mut slot.0 } else { &mut slot.1 };
            if list.iter().any(|o| o.id == r.id) {
                return Err(Error::InvalidRecord(format!(
                    "duplicate id {} in frame {}",
                    r.id, r.frame
                )));
            }
            list.push(Object { id: r.id, bbox: b });
        }
    }
    Ok(frames)
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "iou threshold {t} not in (0, 1]"
        )))
    }
}

/// MOTA, FP, FN, IDS, MT and ML.
pub fn clear_metrics(
    gt: &[MotRecord],
    pred: &[MotRecord],
    iou_threshold: f64,
) -> Result<ClearMetrics> {
    check_threshold(iou_threshold)?;
    let frames = group(gt, pred)?;
    let mut current: HashMap<i64, i64> = HashMap::new();
    let mut last_match: HashMap<i64, i64> = HashMap::new();
    let mut present: HashMap<i64, usize> = HashMap::new();
    let mut tracked: HashMap<i64, usize> = HashMap::new();
    let (mut fp, mut fneg, mut ids, mut gt_count) = (0, 0, 0, 0);

    for (gts, preds) in frames.values() {
        gt_count += gts.len();
        let mut gt_used = vec![false; gts.len()];
        let mut pred_used = vec![false; preds.len()];
        let mut next: HashMap<i64, i64> = HashMap::new();

        for (gi, g) in gts.iter().enumerate() {
            *present.entry(g.id).or_default() += 1;
            let Some(&pid) = current.get(&g.id) else {
                continue;
            };
            let Some(pi) = preds.iter().position(|p| p.id == pid) else {
                continue;
            };
            if !pred_used[pi] && iou_unchecked(&g.bbox, &preds[pi].bbox) >= iou_threshold {
                gt_used[gi] = true;
                pred_used[pi] = true;
                next.insert(g.id, pid);
            }
        }

        let feasible =
            |i: usize, j: usize| iou_unchecked(&gts[i].bbox, &preds[j].bbox) >= iou_threshold;
        let rest_g: Vec<usize> = (0..gts.len())
            .filter(|&i| !gt_used[i] && (0..preds.len()).any(|j| !pred_used[j] && feasible(i, j)))
            .collect();
        let rest_p: Vec<usize> = (0..preds.len())
            .filter(|&j| !pred_used[j] && rest_g.iter().any(|&i| feasible(i, j)))
            .collect();
        let cost = DMatrix::from_fn(rest_g.len(), rest_p.len(), |a, b| {
            let v = iou_unchecked(&gts[rest_g[a]].bbox, &preds[rest_p[b]].bbox);
            if v >= iou_threshold {
                1.0 - v
            } else {
                INFEASIBLE
            }
        });
        for (a, b) in linear_sum_assignment(&cost) {
            if cost[(a, b)] >= INFEASIBLE {
                continue;
            }
            let (g, p) = (&gts[rest_g[a]], &preds[rest_p[b]]);
            gt_used[rest_g[a]] = true;
            pred_used[rest_p[b]] = true;
            if last_match.get(&g.id).is_some_and(|&prev| prev != p.id) {
                ids += 1;
            }
            next.insert(g.id, p.id);
        }

        for (&g, &p) in &next {
            last_match.insert(g, p);
            *tracked.entry(g).or_default() += 1;
        }
        current = next;
        fneg += gt_used.iter().filter(|u| !**u).count();
        fp += pred_used.iter().filter(|u| !**u).count();
    }

    let (mut mt, mut ml) = (0, 0);
    for (id, &n) in &present {
        let ratio = tracked.get(id).copied().unwrap_or(0) as f64 / n as f64;
        if ratio >= MOSTLY_TRACKED {
            mt += 1;
        } else if ratio <= MOSTLY_LOST {
            ml += 1;
        }
    }
    Ok(ClearMetrics {
        mota: (gt_count as f64 - (fp + fneg + ids) as f64) / gt_count as f64,
        false_positives: fp,
        false_negatives: fneg,
        id_switches: ids,
        mostly_tracked: mt,
        mostly_lost: ml,
        num_trajectories: present.len(),
        gt_count,
    })
}

/// Per identity pair, the number of frames where both are present with IoU
/// at or above the threshold. Returns `(gt ids, pred ids, counts, gt boxes,
/// pred boxes)`.
fn overlap_counts(
    frames: &Frames,
    iou_threshold: f64,
) -> (Vec<i64>, Vec<i64>, DMatrix<f64>, usize, usize) {
    let mut gt_ids: Vec<i64> = Vec::new();
    let mut pred_ids: Vec<i64> = Vec::new();
    let mut seen_g = HashSet::new();
    let mut seen_p = HashSet::new();
    let (mut n_gt, mut n_pred) = (0, 0);
    for (gts, preds) in frames.values() {
        n_gt += gts.len();
        n_pred += preds.len();
        gt_ids.extend(gts.iter().map(|o| o.id).filter(|id| seen_g.insert(*id)));
        pred_ids.extend(preds.iter().map(|o| o.id).filter(|id| seen_p.insert(*id)));
    }
    gt_ids.sort_unstable();
    pred_ids.sort_unstable();
    let gi: HashMap<i64, usize> = gt_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let pi: HashMap<i64, usize> = pred_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();
    let mut counts = DMatrix::zeros(gt_ids.len(), pred_ids.len());
    for (gts, preds) in frames.values() {
        for g in gts {
            for p in preds {
                if iou_unchecked(&g.bbox, &p.bbox) >= iou_threshold {
                    counts[(gi[&g.id], pi[&p.id])] += 1.0;
                }
            }
        }
    }
    (gt_ids, pred_ids, counts, n_gt, n_pred)
}

/// IDF1 with its IDTP/IDFP/IDFN counts.
pub fn identity_metrics(
    gt: &[MotRecord],
    pred: &[MotRecord],
    iou_threshold: f64,
) -> Result<IdentityMetrics> {
    check_threshold(iou_threshold)?;
    let frames = group(gt, pred)?;
    let (_, _, counts, n_gt, n_pred) = overlap_counts(&frames, iou_threshold);
    let idtp = linear_sum_assignment(&counts.map(|c| -c))
        .into_iter()
        .map(|(i, j)| counts[(i, j)] as usize)
        .sum::<usize>();
    Ok(IdentityMetrics {
        idf1: 2.0 * idtp as f64 / (n_gt + n_pred) as f64,
        idtp,
        idfp: n_pred - idtp,
        idfn: n_gt - idtp,
    })
}

pub fn idf1(gt: &[MotRecord], pred: &[MotRecord], iou_threshold: f64) -> Result<f64> {
    Ok(identity_metrics(gt, pred, iou_threshold)?.idf1)
}

pub fn evaluate(gt: &[MotRecord], pred: &[MotRecord], iou_threshold: f64) -> Result<MetricsReport> {
    let c = clear_metrics(gt, pred, iou_threshold)?;
    let i = identity_metrics(gt, pred, iou_threshold)?;
    let n = c.num_trajectories as f64;
    Ok(MetricsReport {
        mota: c.mota,
        idf1: i.idf1,
        false_positives: c.false_positives,
        false_negatives: c.false_negatives,
        id_switches: c.id_switches,
        mostly_tracked: c.mostly_tracked,
        mostly_lost: c.mostly_lost,
        mt_ratio: c.mostly_tracked as f64 / n,
        ml_ratio: c.mostly_lost as f64 / n,
        num_trajectories: c.num_trajectories,
        gt_count: c.gt_count,
        idtp: i.idtp,
        idfp: i.idfp,
        idfn: i.idfn,
    })
}

impl MetricsReport {
    /// Human-readable multi-line report.
    pub fn to_text(&self) -> String {
        format!(
            "MOTA  {:.4}\nIDF1  {:.4}\nFP    {}\nFN    {}\nIDS   {}\nMT    {} ({:.4})\nML    {} ({:.4})\nGT    {} boxes, {} trajectories\n",
            self.mota,
            self.idf1,
            self.false_positives,
            self.false_negatives,
            self.id_switches,
            self.mostly_tracked,
            self.mt_ratio,
            self.mostly_lost,
            self.ml_ratio,
            self.gt_count,
            self.num_trajectories,
        )
    }

    /// One-line JSON summary.
    pub fn summary_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}
