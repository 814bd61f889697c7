//! Deterministic synthetic scenarios: identities moving at constant velocity
//! inside an arena (reflecting off the walls), each with a random unit latent
//! embedding. Per-frame embeddings are noisy copies of the latent; during an
//! occlusion event the victim's embedding is mixed with the occluder's.
//! Objects can be born late, die early, or vanish for a stretch of frames.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with the scenario
//! seed, with a fixed draw order: per identity, the latent then the motion
//! parameters; then, per frame and per identity, a noise vector and a
//! confidence (drawn whether or not the object is visible, so editing events
//! never shifts the stream). Gaussian draws use `rand_distr::StandardNormal`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::embedding::{normalize_columns, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::mot_io::{EmbeddingTable, MotRecord, DEFAULT_EMBED_DIM};

pub const SCENARIO_VERSION: u32 = 1;

/// Victim's appearance is mixed with the occluder's over `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionEvent {
    pub victim: u32,
    pub occluder: u32,
    pub start: usize,
    pub end: usize,
    /// Weight kept on the victim's own latent, in `[0, 1]`.
    pub alpha: f64,
}

/// Identity exists only over `birth..=death`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lifespan {
    pub identity: u32,
    pub birth: usize,
    pub death: usize,
}

/// Identity is alive but undetected over `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disappearance {
    pub identity: u32,
    pub start: usize,
    pub end: usize,
}

/// Everything needed to regenerate a scenario bit-for-bit.
///
/// Identities are numbered `1..=num_identities`; frames are 0-based.
/// `embed_noise` is the expected norm of the Gaussian noise added to a unit
/// latent (per-component standard deviation `embed_noise / sqrt(embed_dim)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub version: u32,
    pub seed: u64,
    pub num_identities: usize,
    pub num_frames: usize,
    pub arena_width: f64,
    pub arena_height: f64,
    pub embed_dim: usize,
    pub embed_noise: f64,
    pub min_box_height: f64,
    pub max_box_height: f64,
    pub min_speed: f64,
    pub max_speed: f64,
    pub occlusion_events: Vec<OcclusionEvent>,
    pub lifespans: Vec<Lifespan>,
    pub disappearances: Vec<Disappearance>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            version: SCENARIO_VERSION,
            seed: 0,
            num_identities: 20,
            num_frames: 100,
            arena_width: 1000.0,
            arena_height: 600.0,
            embed_dim: DEFAULT_EMBED_DIM,
            embed_noise: 0.1,
            min_box_height: 40.0,
            max_box_height: 120.0,
            min_speed: 0.5,
            max_speed: 4.0,
            occlusion_events: Vec::new(),
            lifespans: Vec::new(),
            disappearances: Vec::new(),
        }
    }
}

/// Knobs for [`ScenarioSpec::benchmark`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkOptions {
    pub num_identities: usize,
    pub num_frames: usize,
    pub embed_dim: usize,
    pub embed_noise: f64,
    /// Fraction of identities that get one occlusion event.
    pub occluded_fraction: f64,
    pub occlusion_alpha: f64,
    pub occlusion_len: usize,
    /// Number of identities that vanish once.
    pub disappearing: usize,
    pub disappearance_len: usize,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            num_identities: 20,
            num_frames: 100,
            embed_dim: DEFAULT_EMBED_DIM,
            embed_noise: 0.3,
            occluded_fraction: 0.2,
            occlusion_alpha: 0.4,
            occlusion_len: 10,
            disappearing: 4,
            disappearance_len: 31,
        }
    }
}

impl ScenarioSpec {
    /// A scenario with occlusions and disappearances placed from `seed`.
    pub fn benchmark(seed: u64, opts: &BenchmarkOptions) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6f63_636c_7573_696f);
        let n = opts.num_identities as u32;
        let mut ids: Vec<u32> = (1..=n).collect();
        shuffle(&mut ids, &mut rng);

        let n_occ = ((opts.occluded_fraction * opts.num_identities as f64).round() as usize)
            .min(opts.num_identities);
        let mut occlusion_events = Vec::new();
        if n > 1 && opts.num_frames > opts.occlusion_len + 4 {
            for &victim in ids.iter().take(n_occ) {
                let mut occluder = rng.gen_range(1..n);
                if occluder >= victim {
                    occluder += 1;
                }
                let start = rng.gen_range(2..opts.num_frames - opts.occlusion_len - 1);
                occlusion_events.push(OcclusionEvent {
                    victim,
                    occluder,
                    start,
                    end: start + opts.occlusion_len - 1,
                    alpha: opts.occlusion_alpha,
                });
            }
        }

        let mut disappearances = Vec::new();
        if opts.num_frames > opts.disappearance_len + 4 {
            for &identity in ids.iter().rev().take(opts.disappearing) {
                let start = rng.gen_range(2..opts.num_frames - opts.disappearance_len - 1);
                disappearances.push(Disappearance {
                    identity,
                    start,
                    end: start + opts.disappearance_len - 1,
                });
            }
        }

        Self {
            seed,
            num_identities: opts.num_identities,
            num_frames: opts.num_frames,
            embed_dim: opts.embed_dim,
            embed_noise: opts.embed_noise,
            occlusion_events,
            disappearances,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.version != SCENARIO_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.num_identities < 1 {
            return bad("num_identities must be >= 1".into());
        }
        if self.num_frames < 1 {
            return bad("num_frames must be >= 1".into());
        }
        if self.embed_dim < 2 {
            return bad("embed_dim must be >= 2".into());
        }
        if !(self.embed_noise >= 0.0 && self.embed_noise.is_finite()) {
            return bad("embed_noise must be finite and >= 0".into());
        }
        if !(self.min_box_height > 0.0 && self.min_box_height <= self.max_box_height) {
            return bad("box height range must be positive and ordered".into());
        }
        if self.max_box_height >= self.arena_height || self.max_box_height >= self.arena_width {
            return bad("arena must be larger than the largest box".into());
        }
        if !(self.min_speed >= 0.0 && self.min_speed <= self.max_speed) {
            return bad("speed range must be non-negative and ordered".into());
        }
        let n = self.num_identities as u32;
        let known = |id: u32| (1..=n).contains(&id);
        let in_range = |f: usize| f < self.num_frames;
        for e in &self.occlusion_events {
            if !known(e.victim) || !known(e.occluder) {
                return bad(format!(
                    "occlusion references unknown identity ({}, {})",
                    e.victim, e.occluder
                ));
            }
            if e.victim == e.occluder {
                return bad(format!("identity {} cannot occlude itself", e.victim));
            }
            if !(in_range(e.start) && in_range(e.end) && e.start <= e.end) {
                return bad(format!(
                    "occlusion frames {}..={} out of range",
                    e.start, e.end
                ));
            }
            if !(0.0..=1.0).contains(&e.alpha) {
                return bad(format!("occlusion alpha {} outside [0, 1]", e.alpha));
            }
        }
        for l in &self.lifespans {
            if !known(l.identity) {
                return bad(format!("lifespan for unknown identity {}", l.identity));
            }
            if !(l.birth <= l.death && in_range(l.death)) {
                return bad(format!("lifespan {}..={} invalid", l.birth, l.death));
            }
        }
        for d in &self.disappearances {
            if !known(d.identity) {
                return bad(format!("disappearance for unknown identity {}", d.identity));
            }
            if !(d.start <= d.end && in_range(d.end)) {
                return bad(format!("disappearance {}..={} invalid", d.start, d.end));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario spec always serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    fn alive(&self, identity: u32, t: usize) -> bool {
        self.lifespans
            .iter()
            .filter(|l| l.identity == identity)
            .all(|l| (l.birth..=l.death).contains(&t))
    }

    fn hidden(&self, identity: u32, t: usize) -> bool {
        self.disappearances
            .iter()
            .any(|d| d.identity == identity && (d.start..=d.end).contains(&t))
    }

    fn occlusion(&self, identity: u32, t: usize) -> Option<&OcclusionEvent> {
        self.occlusion_events
            .iter()
            .find(|e| e.victim == identity && (e.start..=e.end).contains(&t))
    }
}

fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// One ground-truth object in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GtObject {
    pub identity: u32,
    pub bbox: BBox,
    /// False while the object is alive but undetected.
    pub visible: bool,
    pub occluded_by: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub frames: Vec<Vec<GtObject>>,
}

impl GroundTruth {
    /// Visible objects as MOT records (1-based frames).
    pub fn to_records(&self) -> Vec<MotRecord> {
        self.frames
            .iter()
            .enumerate()
            .flat_map(|(t, objs)| {
                objs.iter().filter(|o| o.visible).map(move |o| {
                    MotRecord::new(t as u32 + 1, o.identity as i64, o.bbox.to_array(), 1.0)
                })
            })
            .collect()
    }
}

/// One observed object.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: usize,
    pub bbox: BBox,
    pub confidence: f64,
    /// Unit-norm identity embedding.
    pub embedding: Vec<f64>,
}

/// Generator output. `labels[t][k]` is the true identity of `detections[t][k]`
/// and is meant for evaluation only.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub latents: Vec<Vec<f64>>,
    pub ground_truth: GroundTruth,
    pub detections: Vec<Vec<Detection>>,
    pub labels: Vec<Vec<u32>>,
}

struct Mover {
    cx: f64,
    cy: f64,
    vx: f64,
    vy: f64,
    w: f64,
    h: f64,
}

impl Mover {
    fn bbox(&self) -> BBox {
        BBox::new(
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.w,
            self.h,
        )
    }

    fn advance(&mut self, width: f64, height: f64) {
        self.cx += self.vx;
        self.cy += self.vy;
        reflect(&mut self.cx, &mut self.vx, self.w / 2.0, width);
        reflect(&mut self.cy, &mut self.vy, self.h / 2.0, height);
    }
}

fn reflect(c: &mut f64, v: &mut f64, half: f64, limit: f64) {
    if *c - half < 0.0 {
        *c = 2.0 * half - *c;
        *v = -*v;
    } else if *c + half > limit {
        *c = 2.0 * (limit - half) - *c;
        *v = -*v;
    }
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

/// Builds the full scenario from its spec.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.embed_dim;
    let n = spec.num_identities;

    let mut latents = Vec::with_capacity(n);
    let mut movers = Vec::with_capacity(n);
    for _ in 0..n {
        latents.push(unit_gaussian(&mut rng, dim));
        let h = rng.gen_range(spec.min_box_height..=spec.max_box_height);
        let w = h * rng.gen_range(0.35..=0.5);
        let cx = rng.gen_range(w / 2.0..=spec.arena_width - w / 2.0);
        let cy = rng.gen_range(h / 2.0..=spec.arena_height - h / 2.0);
        let speed = rng.gen_range(spec.min_speed..=spec.max_speed);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        movers.push(Mover {
            cx,
            cy,
            vx: speed * angle.cos(),
            vy: speed * angle.sin(),
            w,
            h,
        });
    }

    let sigma = spec.embed_noise / (dim as f64).sqrt();
    let mut gt_frames = Vec::with_capacity(spec.num_frames);
    let mut detections = Vec::with_capacity(spec.num_frames);
    let mut labels = Vec::with_capacity(spec.num_frames);
    for t in 0..spec.num_frames {
        let mut gt = Vec::new();
        let mut dets = Vec::new();
        let mut labs = Vec::new();
        for i in 0..n {
            let identity = i as u32 + 1;
            let noise = DVector::from_fn(dim, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
            let confidence = rng.gen_range(0.5..1.0);
            if !spec.alive(identity, t) {
                continue;
            }
            let bbox = movers[i].bbox();
            let visible = !spec.hidden(identity, t);
            let event = spec.occlusion(identity, t);
            gt.push(GtObject {
                identity,
                bbox,
                visible,
                occluded_by: event.map(|e| e.occluder),
            });
            if !visible {
                continue;
            }
            let base = match event {
                Some(e) => {
                    &latents[i] * e.alpha + &latents[e.occluder as usize - 1] * (1.0 - e.alpha)
                }
                None => latents[i].clone(),
            };
            let raw = base + noise;
            let norm = raw.norm();
            if norm < 1e-12 {
                return Err(Error::InvalidSpec(format!(
                    "identity {identity} has a vanishing embedding at frame {t}"
                )));
            }
            dets.push(Detection {
                frame: t,
                bbox,
                confidence,
                embedding: (raw / norm).iter().copied().collect(),
            });
            labs.push(identity);
        }
        gt_frames.push(gt);
        detections.push(dets);
        labels.push(labs);
        for m in movers.iter_mut() {
            m.advance(spec.arena_width, spec.arena_height);
        }
    }

    Ok(Scenario {
        spec: spec.clone(),
        latents: latents
            .iter()
            .map(|l| l.iter().copied().collect())
            .collect(),
        ground_truth: GroundTruth { frames: gt_frames },
        detections,
        labels,
    })
}

impl Scenario {
    /// Per-frame embedding matrices in detection order.
    pub fn frame_embeddings(&self) -> Vec<EmbeddingMatrix> {
        frame_embeddings(&self.detections, self.spec.embed_dim)
    }

    /// Detections as MOT records plus the aligned sidecar table.
    pub fn detection_records(&self) -> (Vec<MotRecord>, EmbeddingTable) {
        detections_to_records(&self.detections, self.spec.embed_dim)
    }
}

/// Stacks each frame's detection embeddings into a `D x n` matrix.
pub fn frame_embeddings(detections: &[Vec<Detection>], dim: usize) -> Vec<EmbeddingMatrix> {
    detections
        .iter()
        .map(|dets| {
            let cols: Vec<&[f64]> = dets.iter().map(|d| d.embedding.as_slice()).collect();
            EmbeddingMatrix::from_columns(dim, &cols)
                .expect("detection embeddings share the dimension")
        })
        .collect()
}

/// Frames `(t - 2g, t - g, t)`, oldest first.
pub fn frame_batch(
    detections: &[Vec<Detection>],
    t: usize,
    interval: usize,
    dim: usize,
) -> Result<[EmbeddingMatrix; 3]> {
    if interval == 0 || t < 2 * interval || t >= detections.len() {
        return Err(Error::OutOfRange { t, interval });
    }
    let pick = |f: usize| {
        let cols: Vec<&[f64]> = detections[f]
            .iter()
            .map(|d| d.embedding.as_slice())
            .collect();
        EmbeddingMatrix::from_columns(dim, &cols)
    };
    Ok([pick(t - 2 * interval)?, pick(t - interval)?, pick(t)?])
}

/// Three frames of `num_identities` unit columns (same order in every frame)
/// where each column is `sqrt(c) * latent + sqrt(1 - c) * u`, with `u` a
/// random unit vector orthogonal to the latent. Same-identity cross-frame
/// cosines are therefore close to `c`.
pub fn correlated_triple(
    seed: u64,
    num_identities: usize,
    dim: usize,
    cosine: f64,
) -> Result<[EmbeddingMatrix; 3]> {
    if !(0.0..=1.0).contains(&cosine) || dim < 2 || num_identities == 0 {
        return Err(Error::InvalidSpec(format!(
            "need cosine in [0, 1], dim >= 2, identities >= 1 (got {cosine}, {dim}, {num_identities})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latents: Vec<DVector<f64>> = (0..num_identities)
        .map(|_| unit_gaussian(&mut rng, dim))
        .collect();
    let (a, b) = (cosine.sqrt(), (1.0 - cosine).sqrt());
    let mut frame = || {
        let cols: Vec<Vec<f64>> = latents
            .iter()
            .map(|l| {
                let g = unit_gaussian(&mut rng, dim);
                let u = (&g - l * l.dot(&g)).normalize();
                (l * a + u * b).as_slice().to_vec()
            })
            .collect();
        EmbeddingMatrix::from_columns(dim, &cols)
    };
    Ok([frame()?, frame()?, frame()?])
}

/// Flattens detections into records (1-based frames, id -1) and an f32 table.
pub fn detections_to_records(
    detections: &[Vec<Detection>],
    dim: usize,
) -> (Vec<MotRecord>, EmbeddingTable) {
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for d in detections.iter().flatten() {
        records.push(MotRecord::new(
            d.frame as u32 + 1,
            -1,
            d.bbox.to_array(),
            d.confidence,
        ));
        rows.push(d.embedding.iter().map(|&v| v as f32).collect());
    }
    (records, EmbeddingTable { dim, rows })
}

/// Groups detection records (with aligned embeddings) into 0-based frames,
/// re-normalizing each embedding in `f64`. Frames with no records are empty.
pub fn detections_from_records(
    records: &[MotRecord],
    table: &EmbeddingTable,
) -> Result<Vec<Vec<Detection>>> {
    table.check_aligned(records)?;
    let num_frames = records.iter().map(|r| r.frame as usize).max().unwrap_or(0);
    let mut frames: Vec<Vec<Detection>> = vec![Vec::new(); num_frames];
    for (r, row) in records.iter().zip(&table.rows) {
        let raw: Vec<f64> = row.iter().map(|&v| v as f64).collect();
        let unit = normalize_columns(&EmbeddingMatrix::from_column_slice(table.dim, 1, &raw)?)?;
        let frame = r.frame as usize - 1;
        frames[frame].push(Detection {
            frame,
            bbox: BBox::from_array(r.bbox()),
            confidence: r.conf,
            embedding: unit.column(0),
        });
    }
    Ok(frames)
}
