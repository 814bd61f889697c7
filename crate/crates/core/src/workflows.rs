//! End-to-end pipelines behind the command-line tool: simulate, per-triple
//! losses, triple descent, tracking, evaluation and the loss ablation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{total_loss, LossConfig, LossReport, LossWeights};
use crate::metrics::{evaluate, MetricsReport};
use crate::mot_io::{
    read_detections_with_embeddings, read_records, write_embeddings, write_records, MotRecord,
    RecordKind,
};
use crate::optimizer::{optimize_frames, refine_sequence, OptimizationTrace};
use crate::synth::{
    detections_from_records, frame_batch, frame_embeddings, generate, BenchmarkOptions, Detection,
    Scenario, ScenarioSpec,
};
use crate::tracker::{run, to_mot_records, TrackerConfig};

pub const GT_FILE: &str = "gt.txt";
pub const DET_FILE: &str = "det.txt";
pub const EMB_FILE: &str = "det.emb";
pub const SPEC_FILE: &str = "scenario.toml";
pub const RESULT_FILE: &str = "result.txt";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const CONFIG_FILE: &str = "config.toml";

/// Paths written by [`simulate_to_dir`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationFiles {
    pub gt: PathBuf,
    pub det: PathBuf,
    pub emb: PathBuf,
    pub spec: PathBuf,
}

/// Generates a scenario and writes ground truth, detections, the embedding
/// sidecar and the scenario echo into `out`.
pub fn simulate_to_dir(spec: &ScenarioSpec, out: &Path) -> Result<(Scenario, SimulationFiles)> {
    let scenario = generate(spec)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let files = SimulationFiles {
        gt: out.join(GT_FILE),
        det: out.join(DET_FILE),
        emb: out.join(EMB_FILE),
        spec: out.join(SPEC_FILE),
    };
    write_records(&scenario.ground_truth.to_records(), &files.gt)?;
    let (records, table) = scenario.detection_records();
    write_records(&records, &files.det)?;
    write_embeddings(&table, &files.emb)?;
    fs::write(&files.spec, spec.to_toml()).map_err(|e| Error::io(&files.spec, e))?;
    Ok((scenario, files))
}

pub fn load_spec(path: &Path) -> Result<ScenarioSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioSpec::from_toml(&text)
}

/// Detections grouped by 0-based frame, with their embedding dimension.
pub fn load_detections(det: &Path, emb: &Path) -> Result<(Vec<Vec<Detection>>, usize)> {
    let (records, table) = read_detections_with_embeddings(det, emb)?;
    let frames = detections_from_records(&records, &table)?;
    Ok((frames, table.dim))
}

/// Loss report for the triple ending at `frame` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleLoss {
    pub frame: usize,
    pub interval: usize,
    #[serde(flatten)]
    pub report: LossReport,
}

/// One report per triple `(t - 2g, t - g, t)`, for `t` from `2g` to the end.
pub fn loss_stream(
    frames: &[Vec<Detection>],
    dim: usize,
    interval: usize,
    cfg: &LossConfig,
) -> Result<Vec<TripleLoss>> {
    if interval == 0 {
        return Err(Error::InvalidConfig("interval must be >= 1".into()));
    }
    (2 * interval..frames.len())
        .map(|t| {
            let [a, b, c] = frame_batch(frames, t, interval, dim)?;
            Ok(TripleLoss {
                frame: t,
                interval,
                report: total_loss(&a, &b, &c, cfg)?,
            })
        })
        .collect()
}

/// Gradient descent on the triple ending at `frame`.
pub fn optimize_triple(
    frames: &[Vec<Detection>],
    dim: usize,
    frame: usize,
    interval: usize,
    cfg: &LossConfig,
    steps: usize,
    lr: f64,
) -> Result<Vec<OptimizationTrace>> {
    let batch = frame_batch(frames, frame, interval, dim)?;
    Ok(optimize_frames(&batch, cfg, steps, lr)?.0)
}

/// Tracks detections and returns result records.
pub fn track_detections(frames: &[Vec<Detection>], cfg: &TrackerConfig) -> Result<Vec<MotRecord>> {
    Ok(to_mot_records(&run(frames, cfg)?))
}

pub fn evaluate_files(gt: &Path, result: &Path, iou_threshold: f64) -> Result<MetricsReport> {
    let gt = read_records(gt, RecordKind::GroundTruth)?;
    let pred = read_records(result, RecordKind::Result)?;
    evaluate(&gt, &pred, iou_threshold)
}

/// Settings for transductive embedding refinement before tracking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub interval: usize,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            interval: 3,
            epochs: 50,
            lr: 0.5,
        }
    }
}

/// Runs [`refine_sequence`] over a scenario's detections and writes the
/// refined embeddings back into a copy of them.
pub fn refine_detections(
    frames: &[Vec<Detection>],
    dim: usize,
    cfg: &LossConfig,
    opts: &RefineOptions,
) -> Result<Vec<Vec<Detection>>> {
    let mut mats = frame_embeddings(frames, dim);
    if opts.epochs > 0 {
        refine_sequence(&mut mats, opts.interval, cfg, opts.epochs, opts.lr)?;
    }
    Ok(frames
        .iter()
        .zip(&mats)
        .map(|(dets, m)| {
            dets.iter()
                .enumerate()
                .map(|(k, d)| Detection {
                    embedding: m.column(k),
                    ..d.clone()
                })
                .collect()
        })
        .collect())
}

/// Refine, track and evaluate one scenario.
pub fn refine_track_evaluate(
    scenario: &Scenario,
    cfg: &LossConfig,
    refine: &RefineOptions,
    tracker: &TrackerConfig,
    iou_threshold: f64,
) -> Result<MetricsReport> {
    let dets = refine_detections(&scenario.detections, scenario.spec.embed_dim, cfg, refine)?;
    let result = track_detections(&dets, tracker)?;
    evaluate(&scenario.ground_truth.to_records(), &result, iou_threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub seed: u64,
    pub losses: String,
    pub mota: f64,
    pub idf1: f64,
    pub ids: usize,
}

/// One row per loss subset and seed on occlusion benchmarks.
pub fn ablate(
    seeds: &[u64],
    variants: &[LossWeights],
    bench: &BenchmarkOptions,
    loss: &LossConfig,
    refine: &RefineOptions,
    tracker: &TrackerConfig,
    iou_threshold: f64,
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for &seed in seeds {
        let scenario = generate(&ScenarioSpec::benchmark(seed, bench))?;
        for w in variants {
            let cfg = LossConfig {
                weights: *w,
                ..*loss
            };
            let r = refine_track_evaluate(&scenario, &cfg, refine, tracker, iou_threshold)?;
            rows.push(AblationRow {
                seed,
                losses: w.label(),
                mota: r.mota,
                idf1: r.idf1,
                ids: r.id_switches,
            });
        }
    }
    Ok(rows)
}

/// Tab-separated table with a header line.
pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut out = String::from("seed\tlosses\tmota\tidf1\tids\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{:.6}\t{}\n",
            r.seed, r.losses, r.mota, r.idf1, r.ids
        ));
    }
    out
}
