use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use contrast_mot::config::RunConfig;
use contrast_mot::mot_io::write_records;
use contrast_mot::synth::{BenchmarkOptions, ScenarioSpec};
use contrast_mot::workflows::{
    self, CONFIG_FILE, DET_FILE, EMB_FILE, GT_FILE, RESULT_FILE, TRACE_FILE,
};
use contrast_mot::Error;

#[derive(Parser)]
#[command(
    name = "contrast-mot",
    version,
    about = "Contrastive embedding losses and an online multi-object tracker"
)]
struct Cli {
    /// Flat TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: ConfigFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario: gt.txt, det.txt, det.emb, scenario.toml.
    Simulate,
    /// Print one JSON loss report per frame triple.
    Losses,
    /// Descend on one frame triple and write trace.jsonl.
    Optimize,
    /// Track detections and write result.txt.
    Track,
    /// Evaluate a result file against ground truth.
    Eval {
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        result: Option<PathBuf>,
    },
    /// Compare loss subsets by tracking quality on occlusion benchmarks.
    Ablate,
}

#[derive(Args, Default)]
struct ConfigFlags {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    input_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    #[arg(long, global = true)]
    interval: Option<usize>,
    #[arg(long, global = true)]
    frame: Option<usize>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    /// Comma-separated subset of dsc, isc, sc, cc, ac, or `all`.
    #[arg(long, global = true)]
    losses: Option<String>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    embed_gate: Option<f64>,
    #[arg(long, global = true)]
    iou_gate: Option<f64>,
    #[arg(long, global = true)]
    buffer: Option<usize>,
    #[arg(long, global = true)]
    ema_alpha: Option<f64>,
    #[arg(long, global = true)]
    min_confidence: Option<f64>,
    #[arg(long, global = true)]
    lost_in_iou_stage: Option<bool>,
    #[arg(long, global = true)]
    motion_gate: Option<bool>,
    #[arg(long, global = true)]
    iou_threshold: Option<f64>,
    #[arg(long, global = true)]
    num_seeds: Option<usize>,
    /// Loss subsets for ablate, separated by `;`.
    #[arg(long, global = true, value_delimiter = ';')]
    variants: Option<Vec<String>>,
    #[arg(long, global = true)]
    refine_interval: Option<usize>,
    #[arg(long, global = true)]
    refine_epochs: Option<usize>,
    #[arg(long, global = true)]
    refine_lr: Option<f64>,
}

impl ConfigFlags {
    fn to_table(&self) -> toml::Table {
        let mut t = toml::Table::new();
        let mut put = |k: &str, v: Option<toml::Value>| {
            if let Some(v) = v {
                t.insert(k.to_string(), v);
            }
        };
        let int = |v: Option<u64>| v.map(|x| toml::Value::Integer(x as i64));
        let real = |v: Option<f64>| v.map(toml::Value::Float);
        let path = |v: &Option<PathBuf>| {
            v.as_ref()
                .map(|p| toml::Value::String(p.display().to_string()))
        };
        put("seed", int(self.seed));
        put("out_dir", path(&self.out_dir));
        put("input_dir", path(&self.input_dir));
        put("spec", path(&self.spec));
        put("interval", int(self.interval.map(|v| v as u64)));
        put("frame", int(self.frame.map(|v| v as u64)));
        put("steps", int(self.steps.map(|v| v as u64)));
        put("lr", real(self.lr));
        put("losses", self.losses.clone().map(toml::Value::String));
        put("tau", real(self.tau));
        put("theta", real(self.theta));
        put("epsilon", real(self.epsilon));
        put("embed_gate", real(self.embed_gate));
        put("iou_gate", real(self.iou_gate));
        put("buffer", int(self.buffer.map(|v| v as u64)));
        put("ema_alpha", real(self.ema_alpha));
        put("min_confidence", real(self.min_confidence));
        put(
            "lost_in_iou_stage",
            self.lost_in_iou_stage.map(toml::Value::Boolean),
        );
        put("motion_gate", self.motion_gate.map(toml::Value::Boolean));
        put("iou_threshold", real(self.iou_threshold));
        put("num_seeds", int(self.num_seeds.map(|v| v as u64)));
        put(
            "variants",
            self.variants
                .clone()
                .map(|v| toml::Value::Array(v.into_iter().map(toml::Value::String).collect())),
        );
        put(
            "refine_interval",
            int(self.refine_interval.map(|v| v as u64)),
        );
        put("refine_epochs", int(self.refine_epochs.map(|v| v as u64)));
        put("refine_lr", real(self.refine_lr));
        t
    }
}

enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let usage = e.chain().any(|c| {
            matches!(
                c.downcast_ref::<Error>(),
                Some(Error::InvalidConfig(_) | Error::InvalidSpec(_))
            )
        });
        if usage {
            Failure::Usage(e)
        } else {
            Failure::Data(e)
        }
    }
}

fn echo_config(cfg: &RunConfig) -> anyhow::Result<()> {
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let path = cfg.out_dir.join(CONFIG_FILE);
    fs::write(&path, cfg.to_toml()).with_context(|| format!("writing {}", path.display()))
}

fn load_input(
    cfg: &RunConfig,
) -> anyhow::Result<(Vec<Vec<contrast_mot::synth::Detection>>, usize)> {
    let dir = cfg.input_dir();
    Ok(workflows::load_detections(
        &dir.join(DET_FILE),
        &dir.join(EMB_FILE),
    )?)
}

fn json_line<T: serde::Serialize>(out: &mut impl Write, value: &T) -> anyhow::Result<()> {
    writeln!(out, "{}", serde_json::to_string(value)?)?;
    Ok(())
}

fn execute(command: Command, cfg: &RunConfig) -> anyhow::Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Simulate => {
            let spec = match &cfg.spec {
                Some(p) => workflows::load_spec(p).map_err(|e| match e {
                    Error::Io { path, source } => {
                        Error::InvalidConfig(format!("spec file {}: {source}", path.display()))
                    }
                    other => other,
                })?,
                None => ScenarioSpec {
                    seed: cfg.seed,
                    ..ScenarioSpec::default()
                },
            };
            let (scenario, files) = workflows::simulate_to_dir(&spec, &cfg.out_dir)?;
            echo_config(cfg)?;
            let boxes: usize = scenario.detections.iter().map(Vec::len).sum();
            json_line(
                &mut out,
                &serde_json::json!({
                    "frames": spec.num_frames,
                    "identities": spec.num_identities,
                    "detections": boxes,
                    "embed_dim": spec.embed_dim,
                    "gt": files.gt,
                    "det": files.det,
                    "emb": files.emb,
                }),
            )?;
        }
        Command::Losses => {
            let loss = cfg.loss_config()?;
            let (frames, dim) = load_input(cfg)?;
            for r in workflows::loss_stream(&frames, dim, cfg.interval, &loss)? {
                json_line(&mut out, &r)?;
            }
        }
        Command::Optimize => {
            let loss = cfg.loss_config()?;
            let (frames, dim) = load_input(cfg)?;
            let frame = cfg.frame.unwrap_or(2 * cfg.interval);
            let trace = workflows::optimize_triple(
                &frames,
                dim,
                frame,
                cfg.interval,
                &loss,
                cfg.steps,
                cfg.lr,
            )?;
            echo_config(cfg)?;
            let mut text = String::new();
            for t in &trace {
                text.push_str(&serde_json::to_string(t)?);
                text.push('\n');
            }
            let path = cfg.out_dir.join(TRACE_FILE);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            if let Some(last) = trace.last() {
                json_line(&mut out, last)?;
            }
        }
        Command::Track => {
            let tracker = cfg.tracker_config()?;
            let (frames, _) = load_input(cfg)?;
            let records = workflows::track_detections(&frames, &tracker)?;
            echo_config(cfg)?;
            let path = cfg.out_dir.join(RESULT_FILE);
            write_records(&records, &path)?;
            let ids: std::collections::BTreeSet<i64> = records.iter().map(|r| r.id).collect();
            json_line(
                &mut out,
                &serde_json::json!({ "records": records.len(), "tracks": ids.len(), "result": path }),
            )?;
        }
        Command::Eval { gt, result } => {
            let gt = gt.unwrap_or_else(|| cfg.input_dir().join(GT_FILE));
            let result = result.unwrap_or_else(|| cfg.out_dir.join(RESULT_FILE));
            let report = workflows::evaluate_files(&gt, &result, cfg.iou_threshold)?;
            write!(out, "{}", report.to_text())?;
            writeln!(out, "{}", report.summary_line())?;
        }
        Command::Ablate => {
            let loss = cfg.loss_config()?;
            let tracker = cfg.tracker_config()?;
            let rows = workflows::ablate(
                &cfg.seeds(),
                &cfg.variant_weights()?,
                &BenchmarkOptions::default(),
                &loss,
                &cfg.refine_options(),
                &tracker,
                cfg.iou_threshold,
            )?;
            echo_config(cfg)?;
            let table = workflows::ablation_table(&rows);
            let path = cfg.out_dir.join("ablation.tsv");
            fs::write(&path, &table).with_context(|| format!("writing {}", path.display()))?;
            write!(out, "{table}")?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let base = RunConfig::load(cli.config.as_deref().map(Path::new))
        .map_err(|e| Failure::Usage(e.into()))?;
    let cfg = base
        .with_overrides(cli.flags.to_table())
        .map_err(|e| Failure::Usage(e.into()))?;
    execute(cli.command, &cfg).map_err(Failure::from)
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn report(kind: &str, err: &anyhow::Error) {
    let mut parts: Vec<String> = Vec::new();
    for c in err.chain() {
        let text = c.to_string();
        if !parts.last().is_some_and(|p| p.ends_with(&text)) {
            parts.push(text);
        }
    }
    let message = parts.join(": ");
    eprintln!(
        "{}",
        serde_json::json!({ "error": kind, "message": message })
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            report("config", &e);
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(Failure::Data(e)) => {
            report("data", &e);
            ExitCode::from(2)
        }
    }
}
