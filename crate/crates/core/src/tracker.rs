//! Online tracker: Kalman prediction, then two-stage association (appearance
//! embedding first, IoU for the leftovers), then track lifecycle with a lost
//! buffer.
//!
//! Per frame:
//! 1. drop detections below `min_confidence`;
//! 2. predict every track (active and lost);
//! 3. stage 1: Hungarian on `1 - cos(track embedding, detection embedding)`
//!    over all tracks, discarding matches costlier than `embed_gate`;
//! 4. stage 2: Hungarian on `1 - IoU(predicted box, detection box)` over the
//!    remaining active tracks (lost ones too if `lost_in_iou_stage`),
//!    discarding matches with IoU below `iou_gate`;
//! 5. matched tracks are corrected and their embedding smoothed; unmatched
//!    tracks become lost and are dropped once `lost_age > buffer`; unmatched
//!    detections start new tracks immediately.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assignment::linear_sum_assignment;
pub use crate::bbox::iou;
use crate::bbox::{iou_unchecked, BBox};
use crate::error::{Error, Result};
use crate::kalman::KalmanState;
use crate::mot_io::MotRecord;
use crate::synth::Detection;

/// 0.95 quantile of chi-square with 4 degrees of freedom.
pub const CHI2_95_4DOF: f64 = 9.4877;

/// Cost assigned to pairs rejected by the optional motion gate.
const GATED_COST: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Largest embedding distance `1 - cos` accepted in stage 1.
    pub embed_gate: f64,
    /// Smallest IoU accepted in stage 2.
    pub iou_gate: f64,
    /// Frames a lost track is kept for re-identification.
    pub buffer: usize,
    /// Weight of the old embedding in the exponential moving average.
    pub ema_alpha: f64,
    pub min_confidence: f64,
    /// Let lost tracks take part in the IoU stage.
    pub lost_in_iou_stage: bool,
    /// Reject stage-1 pairs whose squared Mahalanobis distance exceeds
    /// [`CHI2_95_4DOF`].
    pub motion_gate: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            embed_gate: 0.4,
            iou_gate: 0.5,
            buffer: 30,
            ema_alpha: 0.9,
            min_confidence: 0.4,
            lost_in_iou_stage: false,
            motion_gate: false,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.embed_gate) || !open_unit(self.iou_gate) {
            return Err(Error::InvalidConfig("gates must lie in (0, 1)".into()));
        }
        if self.buffer < 1 {
            return Err(Error::InvalidConfig("buffer must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.ema_alpha) {
            return Err(Error::InvalidConfig("ema_alpha must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackStatus {
    Active,
    Lost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u64,
    pub kalman: KalmanState,
    /// Unit-norm running embedding.
    pub smooth_embedding: Vec<f64>,
    pub status: TrackStatus,
    pub lost_age: usize,
    pub hits: usize,
}

impl Track {
    pub fn bbox(&self) -> BBox {
        self.kalman.to_bbox()
    }
}

/// Association outcome; indices refer to the inputs of [`associate`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Association {
    /// `(track index, detection index)`.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// One output row: an active track's box in a frame (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub frame: usize,
    pub track_id: u64,
    pub bbox: BBox,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Embedding-distance cost matrix (tracks x detections).
pub fn embedding_cost(tracks: &[&Track], detections: &[&Detection]) -> DMatrix<f64> {
    DMatrix::from_fn(tracks.len(), detections.len(), |i, j| {
        1.0 - dot(&tracks[i].smooth_embedding, &detections[j].embedding)
    })
}

fn mahalanobis_sq(state: &KalmanState, b: &BBox) -> f64 {
    let (cx, cy) = b.center();
    let z = nalgebra::Vector4::new(cx, cy, b.w / b.h, b.h);
    let innovation = z - state.mean.fixed_rows::<4>(0);
    let s = state.covariance.fixed_view::<4, 4>(0, 0).into_owned();
    match s.cholesky() {
        Some(c) => innovation.dot(&c.solve(&innovation)),
        None => f64::INFINITY,
    }
}

fn gated_matches(cost: &DMatrix<f64>, gate: f64) -> Vec<(usize, usize)> {
    linear_sum_assignment(cost)
        .into_iter()
        .filter(|&(r, c)| cost[(r, c)] <= gate)
        .collect()
}

/// Two-stage matching of predicted tracks against one frame's detections.
pub fn associate(tracks: &[Track], detections: &[Detection], cfg: &TrackerConfig) -> Association {
    let mut track_done = vec![false; tracks.len()];
    let mut det_done = vec![false; detections.len()];
    let mut matches = Vec::new();

    let all_tracks: Vec<&Track> = tracks.iter().collect();
    let all_dets: Vec<&Detection> = detections.iter().collect();
    let mut cost = embedding_cost(&all_tracks, &all_dets);
    if cfg.motion_gate {
        for (i, t) in tracks.iter().enumerate() {
            for (j, d) in detections.iter().enumerate() {
                if mahalanobis_sq(&t.kalman, &d.bbox) > CHI2_95_4DOF {
                    cost[(i, j)] = GATED_COST;
                }
            }
        }
    }
    for (i, j) in gated_matches(&cost, cfg.embed_gate) {
        track_done[i] = true;
        det_done[j] = true;
        matches.push((i, j));
    }

    let rest_tracks: Vec<usize> = (0..tracks.len())
        .filter(|&i| !track_done[i])
        .filter(|&i| cfg.lost_in_iou_stage || tracks[i].status == TrackStatus::Active)
        .collect();
    let rest_dets: Vec<usize> = (0..detections.len()).filter(|&j| !det_done[j]).collect();
    let boxes: Vec<BBox> = rest_tracks.iter().map(|&i| tracks[i].bbox()).collect();
    let iou_cost = DMatrix::from_fn(rest_tracks.len(), rest_dets.len(), |a, b| {
        1.0 - iou_unchecked(&boxes[a], &detections[rest_dets[b]].bbox)
    });
    for (a, b) in gated_matches(&iou_cost, 1.0 - cfg.iou_gate) {
        let (i, j) = (rest_tracks[a], rest_dets[b]);
        track_done[i] = true;
        det_done[j] = true;
        matches.push((i, j));
    }

    matches.sort_unstable();
    Association {
        matches,
        unmatched_tracks: (0..tracks.len()).filter(|&i| !track_done[i]).collect(),
        unmatched_detections: (0..detections.len()).filter(|&j| !det_done[j]).collect(),
    }
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let n = dot(&v, &v).sqrt();
    if n > 0.0 {
        v.into_iter().map(|x| x / n).collect()
    } else {
        v
    }
}

/// Per-sequence tracker state.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<usize>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
        })
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Processes one frame and returns the active tracks, sorted by id.
    pub fn step(&mut self, detections: &[Detection]) -> Result<Vec<(u64, BBox)>> {
        let kept: Vec<Detection> = detections
            .iter()
            .filter(|d| d.confidence >= self.cfg.min_confidence)
            .cloned()
            .collect();
        for t in self.tracks.iter_mut() {
            t.kalman = t.kalman.predict()?;
        }
        let assoc = associate(&self.tracks, &kept, &self.cfg);

        for &(i, j) in &assoc.matches {
            let det = &kept[j];
            let track = &mut self.tracks[i];
            track.kalman = track.kalman.update(&det.bbox)?;
            let a = self.cfg.ema_alpha;
            track.smooth_embedding = normalized(
                track
                    .smooth_embedding
                    .iter()
                    .zip(&det.embedding)
                    .map(|(o, n)| a * o + (1.0 - a) * n)
                    .collect(),
            );
            track.status = TrackStatus::Active;
            track.lost_age = 0;
            track.hits += 1;
        }
        for &i in &assoc.unmatched_tracks {
            let track = &mut self.tracks[i];
            track.status = TrackStatus::Lost;
            track.lost_age += 1;
        }
        let buffer = self.cfg.buffer;
        self.tracks.retain(|t| t.lost_age <= buffer);

        for &j in &assoc.unmatched_detections {
            let det = &kept[j];
            self.tracks.push(Track {
                track_id: self.next_id,
                kalman: KalmanState::initiate(&det.bbox)?,
                smooth_embedding: det.embedding.clone(),
                status: TrackStatus::Active,
                lost_age: 0,
                hits: 1,
            });
            self.next_id += 1;
        }

        let mut out: Vec<(u64, BBox)> = self
            .tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Active)
            .map(|t| (t.track_id, t.bbox()))
            .collect();
        out.sort_by_key(|(id, _)| *id);
        Ok(out)
    }

    /// Like [`Tracker::step`] but checks that frames arrive in increasing order.
    pub fn step_frame(
        &mut self,
        frame: usize,
        detections: &[Detection],
    ) -> Result<Vec<TrackRecord>> {
        if self.last_frame.is_some_and(|last| frame <= last)
            || detections.iter().any(|d| d.frame != frame)
        {
            return Err(Error::NonMonotoneFrames(frame as u32 + 1));
        }
        self.last_frame = Some(frame);
        Ok(self
            .step(detections)?
            .into_iter()
            .map(|(track_id, bbox)| TrackRecord {
                frame,
                track_id,
                bbox,
            })
            .collect())
    }
}

/// Tracks a whole sequence. `frames[k]` holds the detections of one frame;
/// frame numbers (taken from the detections, or the position for empty
/// frames) must strictly increase.
pub fn run(frames: &[Vec<Detection>], cfg: &TrackerConfig) -> Result<Vec<TrackRecord>> {
    let mut tracker = Tracker::new(*cfg)?;
    let mut out = Vec::new();
    let mut last: Option<usize> = None;
    for (pos, dets) in frames.iter().enumerate() {
        let frame = dets
            .first()
            .map_or(last.map_or(pos, |l| l + 1).max(pos), |d| d.frame);
        out.extend(tracker.step_frame(frame, dets)?);
        last = Some(frame);
    }
    Ok(out)
}

/// Track records as MOT result rows (1-based frames, confidence 1).
pub fn to_mot_records(records: &[TrackRecord]) -> Vec<MotRecord> {
    records
        .iter()
        .map(|r| {
            MotRecord::new(
                r.frame as u32 + 1,
                r.track_id as i64,
                r.bbox.to_array(),
                1.0,
            )
        })
        .collect()
}
