//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`.

use std::f64::consts::{E, LN_2};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use contrast_mot::assignment::{assignment_cost, linear_sum_assignment};
use contrast_mot::bbox::BBox;
use contrast_mot::embedding::EmbeddingMatrix;
use contrast_mot::kalman::KalmanState;
use contrast_mot::losses::{
    ambiguity_contrast_loss, js_divergence_row, kl_divergence, self_contrast_loss, total_loss_raw,
    LossConfig, LossWeights,
};
use contrast_mot::metrics::{clear_metrics, evaluate, identity_metrics};
use contrast_mot::mot_io::{format_records, parse_records, EmbeddingTable, MotRecord, RecordKind};
use contrast_mot::optimizer::{loss_and_gradient, numeric_gradient, optimize, DEFAULT_STEP};
use contrast_mot::synth::Detection;
use contrast_mot::synth::{
    correlated_triple, generate, BenchmarkOptions, Disappearance, ScenarioSpec,
};
use contrast_mot::tracker::{embedding_cost, Track, TrackStatus, TrackerConfig};
use contrast_mot::workflows::{refine_track_evaluate, track_detections, RefineOptions};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:?}, limit {limit:?}"))
    }
}

fn random_frame(rng: &mut ChaCha8Rng, dim: usize, count: usize) -> EmbeddingMatrix {
    let v: Vec<f64> = (0..dim * count).map(|_| rng.gen_range(-1.0..1.0)).collect();
    EmbeddingMatrix::from_column_slice(dim, count, &v).unwrap()
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let variants = [
        ("L_sc", LossWeights::SELF_ONLY),
        (
            "L_cc",
            LossWeights {
                dsc: 0.0,
                isc: 0.0,
                cc: 1.0,
                ac: 0.0,
            },
        ),
        (
            "L_ac",
            LossWeights {
                dsc: 0.0,
                isc: 0.0,
                cc: 0.0,
                ac: 1.0,
            },
        ),
        ("total", LossWeights::ALL),
    ];
    let mut worst: f64 = 0.0;
    let mut with_ambiguity = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let dim = rng.gen_range(4..=16);
        let counts: [usize; 3] = [
            rng.gen_range(2..=8),
            rng.gen_range(2..=8),
            rng.gen_range(2..=8),
        ];
        let frames = counts.map(|n| random_frame(&mut rng, dim, n));
        for (name, weights) in variants {
            let cfg = LossConfig {
                weights,
                ..LossConfig::default()
            };
            let (report, analytic) = loss_and_gradient(&frames, &cfg).map_err(|e| e.to_string())?;
            if name == "L_ac" && report.l_ac > 0.0 {
                with_ambiguity += 1;
            }
            let numeric = numeric_gradient(
                |f: &[EmbeddingMatrix]| {
                    Ok(total_loss_raw(&[f[0].clone(), f[1].clone(), f[2].clone()], &cfg)?.total)
                },
                &frames,
                DEFAULT_STEP,
            )
            .map_err(|e| e.to_string())?;
            let err = analytic.max_relative_error(&numeric, 1e-3);
            if err >= 1e-5 {
                return Err(format!("seed {seed} {name}: relative error {err:.3e}"));
            }
            worst = worst.max(err);
        }
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "max relative error {worst:.2e} over 20 instances x 4 losses ({with_ambiguity} with ambiguous objects), {:?}",
        start.elapsed()
    ))
}

fn closed_form_values() -> Outcome {
    // Two orthonormal objects, identical frames, tau = 1.
    let x = EmbeddingMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
    let tau_one = LossConfig {
        tau: 1.0,
        ..LossConfig::default()
    };
    let l_sc = self_contrast_loss(&x, &x, &tau_one).map_err(|e| e.to_string())?;
    let p = E / (E + 1.0);
    let oracle_sc = -p.ln() - (p * p + (1.0 - p) * (1.0 - p)).ln();

    // Two ambiguous objects per frame, every cross-cosine 0.5: two uniform
    // rows in each direction.
    let a = 0.5f64;
    let rest = (1.0 - 2.0 * a * a).sqrt();
    let x1 =
        EmbeddingMatrix::from_columns(4, &[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]).unwrap();
    let x2 = EmbeddingMatrix::from_columns(4, &[[a, a, rest, 0.0], [a, a, 0.0, rest]]).unwrap();
    let l_ac = ambiguity_contrast_loss(&x1, &x2, &tau_one).map_err(|e| e.to_string())?;
    let row_entropy = -2.0 * 0.5 * 0.5f64.ln();
    let (n_r, m_r) = (2.0, 2.0);
    let oracle_ac = (2.0 * row_entropy / n_r + 2.0 * row_entropy / m_r) / (0.0 + 1.0);

    let kl = kl_divergence(&[1.0, 0.0], &[0.5, 0.5], 1e-12).map_err(|e| e.to_string())?;

    let ok = (l_sc - oracle_sc).abs() < 1e-6
        && (l_sc - 0.812857).abs() < 1e-6
        && (l_ac - oracle_ac).abs() < 1e-6
        && (l_ac - 2.0 * LN_2).abs() < 1e-6
        && (kl - LN_2).abs() < 1e-6;
    let msg = format!("L_sc {l_sc:.6} (oracle {oracle_sc:.6}), L_ac {l_ac:.6} (oracle {oracle_ac:.6} = 2 ln 2), KL {kl:.6} (ln 2)");
    check(ok, msg.clone(), msg)
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen_range(0.0..1.0)
            }
        })
        .collect();
    if v.iter().sum::<f64>() == 0.0 {
        v[rng.gen_range(0..n)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

fn divergence_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut max_asym, mut max_self, mut max_row): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..1000 {
        let n = rng.gen_range(1..=8);
        let (p, q) = if k % 10 == 0 {
            // disjoint supports: the upper bound is attained
            let mut p = vec![0.0; n + 1];
            let mut q = vec![0.0; n + 1];
            p[0] = 1.0;
            q[n] = 1.0;
            (p, q)
        } else {
            (
                random_distribution(&mut rng, n),
                random_distribution(&mut rng, n),
            )
        };
        let pq = js_divergence_row(&p, &q, 1e-12).map_err(|e| e.to_string())?;
        let qp = js_divergence_row(&q, &p, 1e-12).map_err(|e| e.to_string())?;
        let pp = js_divergence_row(&p, &p, 1e-12).map_err(|e| e.to_string())?;
        max_asym = max_asym.max((pq - qp).abs());
        max_self = max_self.max(pp.abs());
        max_row = max_row.max(pq);
    }
    let ok = max_asym <= 1e-12 && max_self == 0.0 && max_row <= LN_2 + 1e-9;
    let msg = format!("1000 pairs: |JSD(P,Q)-JSD(Q,P)| <= {max_asym:.1e}, max JSD(P,P) {max_self:.1e}, max row {max_row:.12} (ln 2 = {LN_2:.12})");
    check(ok, msg.clone(), msg)
}

fn self_contrast_efficacy() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in 0..5u64 {
        let frames = correlated_triple(seed, 10, 32, 0.8).map_err(|e| e.to_string())?;
        let trace =
            optimize(&frames, &LossConfig::default(), 200, 0.5).map_err(|e| e.to_string())?;
        let (first, last) = (
            trace[0].mean_self_diag,
            trace[trace.len() - 1].mean_self_diag,
        );
        ok &= last >= 0.9 && last > first;
        lines.push(format!("{first:.4}->{last:.4}"));
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    let msg = format!(
        "mean diag(S_isc) per seed: {} ({:?})",
        lines.join(", "),
        start.elapsed()
    );
    check(ok, msg.clone(), msg)
}

fn ablation_trend() -> Outcome {
    let bench = BenchmarkOptions::default();
    let refine = RefineOptions::default();
    let tracker = TrackerConfig::default();
    let (mut sum_sc, mut sum_all, mut worst) = (0.0, 0.0, f64::NEG_INFINITY);
    let mut per_seed = Vec::new();
    for seed in 0..5u64 {
        let scenario =
            generate(&ScenarioSpec::benchmark(seed, &bench)).map_err(|e| e.to_string())?;
        let run = |w: LossWeights| {
            let cfg = LossConfig {
                weights: w,
                ..LossConfig::default()
            };
            refine_track_evaluate(&scenario, &cfg, &refine, &tracker, 0.5).map(|r| r.idf1)
        };
        let sc = run(LossWeights::SELF_ONLY).map_err(|e| e.to_string())?;
        let all = run(LossWeights::ALL).map_err(|e| e.to_string())?;
        sum_sc += sc;
        sum_all += all;
        worst = worst.max(sc - all);
        per_seed.push(format!("{sc:.4}/{all:.4}"));
    }
    let ok = sum_all >= sum_sc && worst <= 0.01;
    let msg = format!(
        "IDF1 mean L_sc only {:.4} vs full {:.4}; per seed {}; largest regression {:.4}",
        sum_sc / 5.0,
        sum_all / 5.0,
        per_seed.join(", "),
        worst.max(0.0)
    );
    check(ok, msg.clone(), msg)
}

fn tracker_exactness() -> Outcome {
    let start = Instant::now();
    let spec = ScenarioSpec {
        seed: 42,
        embed_noise: 0.0,
        ..ScenarioSpec::default()
    };
    let s = generate(&spec).map_err(|e| e.to_string())?;
    let result =
        track_detections(&s.detections, &TrackerConfig::default()).map_err(|e| e.to_string())?;
    let r = evaluate(&s.ground_truth.to_records(), &result, 0.5).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(2))?;
    let msg = format!(
        "MOTA {} IDF1 {} IDS {} ({:?})",
        r.mota,
        r.idf1,
        r.id_switches,
        start.elapsed()
    );
    check(
        r.mota == 1.0 && r.idf1 == 1.0 && r.id_switches == 0,
        msg.clone(),
        msg,
    )
}

fn track_ids_of(gt: &[MotRecord], pred: &[MotRecord], identity: i64) -> Vec<i64> {
    let mut ids: Vec<i64> = gt
        .iter()
        .filter(|g| g.id == identity)
        .filter_map(|g| {
            pred.iter()
                .filter(|p| p.frame == g.frame)
                .find(|p| {
                    let a = BBox::from_array(g.bbox());
                    let b = BBox::from_array(p.bbox());
                    contrast_mot::tracker::iou(&a, &b).unwrap() >= 0.5
                })
                .map(|p| p.id)
        })
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

fn buffer_boundary() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (gap, expect_ids, expect_switches) in [(30usize, 1usize, 0usize), (31, 2, 1)] {
        let spec = ScenarioSpec {
            seed: 9,
            embed_noise: 0.0,
            disappearances: vec![Disappearance {
                identity: 3,
                start: 20,
                end: 20 + gap - 1,
            }],
            ..ScenarioSpec::default()
        };
        let s = generate(&spec).map_err(|e| e.to_string())?;
        let gt = s.ground_truth.to_records();
        let a = track_detections(&s.detections, &TrackerConfig::default())
            .map_err(|e| e.to_string())?;
        let b = track_detections(&s.detections, &TrackerConfig::default())
            .map_err(|e| e.to_string())?;
        let r = evaluate(&gt, &a, 0.5).map_err(|e| e.to_string())?;
        let ids = track_ids_of(&gt, &a, 3);
        ok &= a == b && ids.len() == expect_ids && r.id_switches == expect_switches;
        parts.push(format!(
            "{gap} frames: {} track id(s), IDS {}",
            ids.len(),
            r.id_switches
        ));
    }
    let msg = parts.join("; ");
    check(ok, msg.clone(), msg)
}

fn brute_force_min(cost: &DMatrix<f64>) -> f64 {
    fn rec(
        cost: &DMatrix<f64>,
        row: usize,
        used: &mut Vec<bool>,
        picked: usize,
        need: usize,
    ) -> f64 {
        if picked == need {
            return 0.0;
        }
        if cost.nrows() - row < need - picked {
            return f64::INFINITY;
        }
        // skip this row (only possible when rows > cols)
        let mut best = rec(cost, row + 1, used, picked, need);
        for c in 0..cost.ncols() {
            if !used[c] {
                used[c] = true;
                best = best.min(cost[(row, c)] + rec(cost, row + 1, used, picked + 1, need));
                used[c] = false;
            }
        }
        best
    }
    let need = cost.nrows().min(cost.ncols());
    rec(cost, 0, &mut vec![false; cost.ncols()], 0, need)
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn hungarian_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let (nt, nd) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let tracks: Vec<Track> = (0..nt)
            .map(|i| Track {
                track_id: i as u64 + 1,
                kalman: KalmanState::initiate(&BBox::new(0.0, 0.0, 10.0, 20.0)).unwrap(),
                smooth_embedding: unit(&mut rng, 8),
                status: TrackStatus::Active,
                lost_age: 0,
                hits: 1,
            })
            .collect();
        let dets: Vec<Detection> = (0..nd)
            .map(|_| Detection {
                frame: 0,
                bbox: BBox::new(0.0, 0.0, 10.0, 20.0),
                confidence: 1.0,
                embedding: unit(&mut rng, 8),
            })
            .collect();
        let cost = embedding_cost(
            &tracks.iter().collect::<Vec<_>>(),
            &dets.iter().collect::<Vec<_>>(),
        );
        let pairs = linear_sum_assignment(&cost);
        if pairs.len() != nt.min(nd) {
            return Err(format!("instance {k}: {} pairs for {nt}x{nd}", pairs.len()));
        }
        let diff = (assignment_cost(&cost, &pairs) - brute_force_min(&cost)).abs();
        worst = worst.max(diff);
        if diff > 1e-9 {
            return Err(format!(
                "instance {k}: cost differs from enumeration by {diff:.3e}"
            ));
        }
    }
    Ok(format!(
        "200 instances up to 6x6, max |Hungarian - enumeration| {worst:.1e}"
    ))
}

fn iou_oracle(a: [f64; 4], b: [f64; 4]) -> f64 {
    let ix = (a[0] + a[2]).min(b[0] + b[2]) - a[0].max(b[0]);
    let iy = (a[1] + a[3]).min(b[1] + b[3]) - a[1].max(b[1]);
    let inter = ix.max(0.0) * iy.max(0.0);
    inter / (a[2] * a[3] + b[2] * b[3] - inter)
}

fn brute_force_idf1(gt: &[MotRecord], pred: &[MotRecord]) -> f64 {
    let mut gids: Vec<i64> = gt.iter().map(|r| r.id).collect();
    gids.sort_unstable();
    gids.dedup();
    let mut pids: Vec<i64> = pred.iter().map(|r| r.id).collect();
    pids.sort_unstable();
    pids.dedup();
    let overlap = |g: i64, p: i64| -> usize {
        gt.iter()
            .filter(|a| a.id == g)
            .filter(|a| {
                pred.iter().any(|b| {
                    b.id == p && b.frame == a.frame && iou_oracle(a.bbox(), b.bbox()) >= 0.5
                })
            })
            .count()
    };
    fn rec(
        k: usize,
        gids: &[i64],
        pids: &[i64],
        used: &mut Vec<bool>,
        f: &dyn Fn(i64, i64) -> usize,
    ) -> usize {
        if k == gids.len() {
            return 0;
        }
        let mut best = rec(k + 1, gids, pids, used, f);
        for j in 0..pids.len() {
            if !used[j] {
                used[j] = true;
                best = best.max(f(gids[k], pids[j]) + rec(k + 1, gids, pids, used, f));
                used[j] = false;
            }
        }
        best
    }
    let idtp = rec(0, &gids, &pids, &mut vec![false; pids.len()], &overlap);
    2.0 * idtp as f64 / (gt.len() + pred.len()) as f64
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<MotRecord>, Vec<MotRecord>) {
    let n_gt = rng.gen_range(1..=5);
    let n_pred = rng.gen_range(1..=5);
    let frames = rng.gen_range(2..=6);
    let slots = [0.0, 4.0, 30.0, 60.0];
    let mut gt = Vec::new();
    let mut pred = Vec::new();
    for f in 1..=frames {
        for id in 1..=n_gt {
            if rng.gen_bool(0.8) {
                gt.push(MotRecord::new(
                    f,
                    id,
                    [slots[rng.gen_range(0..4)], 0.0, 20.0, 20.0],
                    1.0,
                ));
            }
        }
        for id in 1..=n_pred {
            if rng.gen_bool(0.7) {
                pred.push(MotRecord::new(
                    f,
                    id,
                    [slots[rng.gen_range(0..4)], 0.0, 20.0, 20.0],
                    1.0,
                ));
            }
        }
    }
    if gt.is_empty() {
        gt.push(MotRecord::new(1, 1, [0.0, 0.0, 20.0, 20.0], 1.0));
    }
    (gt, pred)
}

fn metrics_oracle() -> Outcome {
    let bbox = [10.0, 10.0, 20.0, 40.0];
    let gt: Vec<MotRecord> = (1..=3).map(|f| MotRecord::new(f, 1, bbox, 1.0)).collect();
    let pred = vec![
        MotRecord::new(1, 1, bbox, 1.0),
        MotRecord::new(2, 1, bbox, 1.0),
        MotRecord::new(3, 2, bbox, 1.0),
    ];
    let c = clear_metrics(&gt, &pred, 0.5).map_err(|e| e.to_string())?;
    let i = identity_metrics(&gt, &pred, 0.5).map_err(|e| e.to_string())?;
    if c.mota != 2.0 / 3.0 || i.idf1 != 2.0 / 3.0 || c.id_switches != 1 {
        return Err(format!(
            "switch case: MOTA {} IDF1 {} IDS {}",
            c.mota, i.idf1, c.id_switches
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let (gt, pred) = random_instance(&mut rng);
        let fast = identity_metrics(&gt, &pred, 0.5)
            .map_err(|e| e.to_string())?
            .idf1;
        let slow = brute_force_idf1(&gt, &pred);
        worst = worst.max((fast - slow).abs());
        if (fast - slow).abs() > 1e-12 {
            return Err(format!("instance {k}: IDF1 {fast} vs enumeration {slow}"));
        }
    }
    Ok(format!("switch case MOTA = IDF1 = 2/3 exactly; 50 random instances match enumeration (max diff {worst:.1e})"))
}

fn io_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut records: Vec<MotRecord> = (0..10_000)
        .map(|k| {
            let mut r = MotRecord::new(
                (k / 20 + 1) as u32,
                (k % 20 + 1) as i64,
                [
                    rng.gen_range(-50.0..2000.0),
                    rng.gen_range(-50.0..1000.0),
                    rng.gen_range(0.1..300.0),
                    rng.gen_range(0.1..300.0),
                ],
                rng.gen_range(0.0..1.0),
            );
            if k % 7 == 0 {
                r.bb_left = (r.bb_left as i64) as f64;
            }
            r
        })
        .collect();
    records.sort_by_key(|r| (r.frame, r.id));
    let text = format_records(&records).map_err(|e| e.to_string())?;
    let back = parse_records(&text, RecordKind::Result).map_err(|e| e.to_string())?;
    let text2 = format_records(&back).map_err(|e| e.to_string())?;
    let text_ok = back == records && text == text2;

    let rows: Vec<Vec<f32>> = (0..10_000)
        .map(|_| {
            (0..16)
                .map(|_| f32::from_bits(rng.gen::<u32>() & 0xbfff_ffff))
                .collect()
        })
        .collect();
    let table = EmbeddingTable::new(16, rows).map_err(|e| e.to_string())?;
    let bytes = table.encode();
    let decoded = EmbeddingTable::decode(&bytes).map_err(|e| e.to_string())?;
    let bits =
        |t: &EmbeddingTable| -> Vec<u32> { t.rows.iter().flatten().map(|v| v.to_bits()).collect() };
    let bin_ok = bits(&decoded) == bits(&table) && decoded.encode() == bytes;
    check(
        text_ok && bin_ok,
        format!(
            "10000 records: text {} bytes and binary {} bytes round-trip bit-exact",
            text.len(),
            bytes.len()
        ),
        format!("text ok: {text_ok}, binary ok: {bin_ok}"),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_contrast-mot"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let mut snapshots = Vec::new();
    let mut dirs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut stdout = Vec::new();
        stdout.extend(run_cli(
            dir.path(),
            &["simulate", "--seed", "11", "--out-dir", "run"],
        )?);
        stdout.extend(run_cli(dir.path(), &["track", "--out-dir", "run"])?);
        stdout.extend(run_cli(dir.path(), &["eval", "--out-dir", "run"])?);
        let mut files = Vec::new();
        for name in [
            "gt.txt",
            "det.txt",
            "det.emb",
            "scenario.toml",
            "config.toml",
            "result.txt",
        ] {
            files
                .push(std::fs::read(dir.path().join("run").join(name)).map_err(|e| e.to_string())?);
        }
        snapshots.push((stdout, files));
        dirs.push(dir);
    }
    let total: usize = snapshots[0].1.iter().map(Vec::len).sum();
    check(
        snapshots[0] == snapshots[1],
        format!("simulate -> track -> eval twice: stdout and 6 files ({total} bytes) identical"),
        "outputs differ between runs".into(),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("gradient correctness", gradient_correctness),
        ("closed-form loss values", closed_form_values),
        ("divergence properties", divergence_properties),
        ("self-contrast efficacy", self_contrast_efficacy),
        ("ablation trend", ablation_trend),
        ("tracker exactness", tracker_exactness),
        ("buffer boundary", buffer_boundary),
        ("Hungarian optimality", hungarian_optimality),
        ("metrics oracle", metrics_oracle),
        ("I/O round trips", io_round_trips),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
