//! Command-line surface: `gen`, `train`, `eval`, `shapley`, `geodesic`, `compare`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use g2l_core::game::{
    sampled_pair_interaction, shapley_interaction_exact, shapley_value_sampled, shapley_values_exact, Game, TableGame,
    EXACT_PLAYER_LIMIT,
};
use g2l_core::geodesic::geodesics_from_targets;
use g2l_core::losses::{DenominatorMode, GclConfig, Mode, SimilarityWeight};
use g2l_core::numcore::{pairwise_sum, RngStream};
use g2l_core::synthdata::{generate, SynthConfig, SynthDataset};
use g2l_core::trainer::{self, Encoder, EvalMetrics, MetricsReport, OptimizerKind, TrainConfig};
use serde::Serialize;

use crate::error::{exit, Error, Result};
use crate::geodesic_json::GraphDump;
use crate::manifest::{manifest_path_for, RunManifest};
use crate::{checkpoint, dataset_io, game_json, report, write_atomic};

/// Caps the number of concurrent `compare` cells.
pub const THREADS_ENV: &str = "G2L_THREADS";

#[derive(Debug, Parser)]
#[command(name = "g2l", version, about = "Geodesic-guided contrastive training on synthetic moment/query embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Train an encoder; writes metrics and a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Shapley values and pair interactions of a JSON game.
    Shapley(ShapleyArgs),
    /// Dump one video's K-NN graph and geodesic tables.
    Geodesic(GeodesicArgs),
    /// Train every (mode, seed) cell and tabulate final metrics.
    Compare(CompareArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub videos: usize,
    /// Moments per video.
    #[arg(long, default_value_t = 16)]
    pub moments: usize,
    /// Queries per video.
    #[arg(long, default_value_t = 4)]
    pub queries: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 8)]
    pub topics: usize,
    #[arg(long, default_value_t = 0.4)]
    pub overlap: f64,
    /// Fraction of moments per video that are annotated.
    #[arg(long, default_value_t = 0.25)]
    pub annotated: f64,
    #[arg(long, default_value_t = 0.15)]
    pub noise: f64,
    /// Use mutually orthogonal topic directions.
    #[arg(long)]
    pub orthogonal: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Baseline,
    G2l,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Baseline => Mode::Baseline,
            ModeArg::G2l => Mode::G2l,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DenominatorArg {
    Literal,
    Tempered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightArg {
    Geodesic,
    Negated,
    Plain,
}

/// Switches that remove one ingredient from g2l training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ablation {
    /// Drop the geodesic-guided contrastive term.
    Gcl,
    /// Drop the interaction alignment term.
    Ssi,
    /// Semantic positives reduced to the target alone.
    Sa,
    /// Denominator weighting replaced by `exp(q·m/τ)`.
    Su,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long = "batch", default_value_t = 16)]
    pub batch_size: usize,
    /// Learning rate; defaults to 1e-2 for sgd and 1e-3 for adam.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
    pub optimizer: OptimizerArg,
    /// Contrastive temperature.
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Grounding temperature.
    #[arg(long = "tau-vg", default_value_t = 0.1)]
    pub tau_vg: f64,
    /// Semantic positives per query.
    #[arg(long, default_value_t = 3)]
    pub topk: usize,
    /// K-NN graph neighbors.
    #[arg(long, default_value_t = 10)]
    pub neighbors: usize,
    #[arg(long = "g-cap", default_value_t = 10.0)]
    pub g_cap: f64,
    /// Moments sampled per query for the interaction game.
    #[arg(long = "moments-per-query", default_value_t = 3)]
    pub moments_per_query: usize,
    /// Monte-Carlo samples per interaction estimate.
    #[arg(long = "ssi-samples", default_value_t = 64)]
    pub ssi_samples: usize,
    #[arg(long, value_enum, default_value_t = DenominatorArg::Literal)]
    pub denominator: DenominatorArg,
    #[arg(long, value_enum, default_value_t = WeightArg::Geodesic)]
    pub weight: WeightArg,
    /// Repeatable; applies to g2l runs only.
    #[arg(long, value_enum)]
    pub ablate: Vec<Ablation>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long = "output-dim")]
    pub output_dim: Option<usize>,
    /// Epochs of grounding-only training before the other terms switch on.
    #[arg(long, default_value_t = 0)]
    pub warmup: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record wall-clock seconds per epoch (otherwise the column is 0 so
    /// metrics files stay byte-reproducible).
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub encoder: PathBuf,
    /// Comma-separated recall cutoffs.
    #[arg(long, default_value = "1,5")]
    pub n: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ShapleyArgs {
    #[arg(long)]
    pub game: PathBuf,
    /// Exhaustive enumeration (the default).
    #[arg(long, conflicts_with = "sampled")]
    pub exact: bool,
    /// Monte-Carlo estimate with this many samples per quantity.
    #[arg(long)]
    pub sampled: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pair `i,j` whose interaction to report.
    #[arg(long)]
    pub interaction: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct GeodesicArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub video: usize,
    /// Comma-separated moment indices within the video.
    #[arg(long)]
    pub targets: String,
    /// Neighbors per node.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long = "g-cap", default_value_t = 10.0)]
    pub g_cap: f64,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "1,2,3,4,5")]
    pub seeds: String,
    #[arg(long, default_value = "baseline,g2l")]
    pub modes: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a, stdout),
        Command::Shapley(a) => cmd_shapley(&a, stdout),
        Command::Geodesic(a) => cmd_geodesic(&a, stdout),
        Command::Compare(a) => cmd_compare(&a, stdout),
    }
}

fn config_echo<T: Serialize>(args: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(args)?)
}

fn write_stdout(stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    stdout
        .write_all(bytes)
        .and_then(|_| stdout.flush())
        .map_err(|e| Error::io("<stdout>", e))
}

fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> Result<Vec<T>> {
    let items: Vec<T> = text
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::usage(flag, format!("cannot parse {s:?} in {text:?}")))
        })
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::usage(flag, "list is empty"));
    }
    Ok(items)
}

pub fn synth_config(a: &GenArgs) -> Result<SynthConfig> {
    let cfg = SynthConfig {
        videos: a.videos,
        moments_per_video: a.moments,
        queries_per_video: a.queries,
        dim: a.dim,
        topics: a.topics,
        overlap: a.overlap,
        annotated_fraction: a.annotated,
        noise: a.noise,
        orthogonal_topics: a.orthogonal,
        seed: a.seed,
    };
    if !(0.0..=1.0).contains(&a.overlap) {
        return Err(Error::usage("--overlap", format!("must lie in [0, 1], got {}", a.overlap)));
    }
    if !(a.annotated > 0.0 && a.annotated <= 1.0) {
        return Err(Error::usage("--annotated", format!("must lie in (0, 1], got {}", a.annotated)));
    }
    if !(a.noise >= 0.0 && a.noise.is_finite()) {
        return Err(Error::usage("--noise", format!("must be nonnegative, got {}", a.noise)));
    }
    if a.moments < 2 {
        return Err(Error::usage("--moments", "need at least 2 moments per video"));
    }
    if a.dim == 0 {
        return Err(Error::usage("--dim", "must be positive"));
    }
    if a.topics == 0 {
        return Err(Error::usage("--topics", "must be positive"));
    }
    if a.orthogonal && a.dim < a.topics {
        return Err(Error::usage(
            "--topics",
            format!("{} orthogonal topics need --dim at least {}", a.topics, a.topics),
        ));
    }
    if a.queries == 0 || a.queries > cfg.annotated_per_video() {
        return Err(Error::usage(
            "--queries",
            format!(
                "must lie in 1..={} (annotated moments per video)",
                cfg.annotated_per_video()
            ),
        ));
    }
    cfg.validate()
        .map_err(|e| Error::usage("gen", e.to_string()))?;
    Ok(cfg)
}

pub fn cmd_gen(a: &GenArgs) -> Result<()> {
    let cfg = synth_config(a)?;
    let mut manifest = RunManifest::start("gen", config_echo(a)?, a.seed);
    let ds = generate(&cfg)?;
    dataset_io::save(&ds, &a.out)?;
    manifest.outputs.push(a.out.clone());
    manifest.finish_and_write(&manifest_path_for(&a.out))
}

/// Builds a checked training configuration for one (mode, seed) cell.
pub fn train_config(h: &HyperArgs, mode: ModeArg, seed: u64, ds: &SynthDataset) -> Result<TrainConfig> {
    let positive = |flag: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::usage(flag, format!("must be positive and finite, got {v}")))
        }
    };
    positive("--tau", h.tau)?;
    positive("--tau-vg", h.tau_vg)?;
    positive("--g-cap", h.g_cap)?;
    let lr = h.lr.unwrap_or(match h.optimizer {
        OptimizerArg::Sgd => 1e-2,
        OptimizerArg::Adam => 1e-3,
    });
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::usage("--lr", format!("must be nonnegative and finite, got {lr}")));
    }
    if h.epochs == 0 {
        return Err(Error::usage("--epochs", "must be at least 1"));
    }
    if h.batch_size == 0 || h.batch_size > ds.query_count() {
        return Err(Error::usage(
            "--batch",
            format!("must lie in 1..={} (queries in the dataset)", ds.query_count()),
        ));
    }
    let nm = ds.moments_per_video();
    if h.topk == 0 || h.topk > nm {
        return Err(Error::usage("--topk", format!("must lie in 1..={nm}")));
    }
    if h.moments_per_query == 0 || h.moments_per_query > nm {
        return Err(Error::usage("--moments-per-query", format!("must lie in 1..={nm}")));
    }
    if h.neighbors == 0 {
        return Err(Error::usage("--neighbors", "must be at least 1"));
    }
    if h.ssi_samples == 0 {
        return Err(Error::usage("--ssi-samples", "must be at least 1"));
    }
    if h.hidden == Some(0) {
        return Err(Error::usage("--hidden", "must be positive"));
    }
    if h.output_dim == Some(0) {
        return Err(Error::usage("--output-dim", "must be positive"));
    }

    let mut gcl = GclConfig {
        temperature: h.tau,
        topk: h.topk,
        neighbors: h.neighbors,
        g_cap: h.g_cap,
        moments_per_query: h.moments_per_query,
        ssi_mc_samples: h.ssi_samples,
        grounding_temperature: h.tau_vg,
        denominator: match h.denominator {
            DenominatorArg::Literal => DenominatorMode::Literal,
            DenominatorArg::Tempered => DenominatorMode::Tempered,
        },
        weight: match h.weight {
            WeightArg::Geodesic => SimilarityWeight::Geodesic,
            WeightArg::Negated => SimilarityWeight::NegatedGeodesic,
            WeightArg::Plain => SimilarityWeight::Plain,
        },
        enable_gcl: true,
        enable_ssi: true,
    };
    if mode == ModeArg::G2l {
        for ablation in &h.ablate {
            match ablation {
                Ablation::Gcl => gcl.enable_gcl = false,
                Ablation::Ssi => gcl.enable_ssi = false,
                Ablation::Sa => gcl.topk = 1,
                Ablation::Su => gcl.weight = SimilarityWeight::Plain,
            }
        }
    }
    let cfg = TrainConfig {
        epochs: h.epochs,
        batch_size: h.batch_size,
        learning_rate: lr,
        optimizer: match h.optimizer {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::adam(),
        },
        mode: mode.into(),
        gcl,
        seed,
        hidden_dim: h.hidden,
        output_dim: h.output_dim,
        warmup_epochs: h.warmup,
    };
    cfg.validate(ds)
        .map_err(|e| Error::usage("train", e.to_string()))?;
    Ok(cfg)
}

pub fn train_once(ds: &SynthDataset, cfg: &TrainConfig, timing: bool) -> Result<(Encoder, MetricsReport)> {
    let result = if timing {
        let origin = Instant::now();
        trainer::train_with_clock(ds, cfg, || origin.elapsed().as_secs_f64())
    } else {
        trainer::train(ds, cfg)
    };
    Ok(result?)
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let ds = dataset_io::load(&a.data)?;
    let cfg = train_config(&a.hyper, a.mode, a.seed, &ds)?;
    let mut manifest = RunManifest::start("train", config_echo(a)?, a.seed);
    manifest.inputs.push(a.data.clone());
    let (encoder, metrics) = train_once(&ds, &cfg, a.timing)?;

    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let outputs = [
        (a.out.join("metrics.csv"), report::metrics_csv(&metrics)?),
        (a.out.join("metrics.json"), report::metrics_json(&metrics)?),
        (a.out.join("encoder.g2le"), checkpoint::encode(&encoder)?),
    ];
    for (path, bytes) in outputs {
        write_atomic(&path, &bytes)?;
        manifest.outputs.push(path);
    }
    manifest.finish_and_write(&a.out.join("manifest.json"))
}

/// Recall at each cutoff plus alignment and uniformity, keyed `r<n>`.
pub fn eval_json(encoder: &Encoder, ds: &SynthDataset, cutoffs: &[usize]) -> Result<serde_json::Value> {
    if encoder.input_dim() != ds.config.dim {
        return Err(Error::Data(format!(
            "encoder expects {}-dimensional inputs but the dataset has dimension {}",
            encoder.input_dim(),
            ds.config.dim
        )));
    }
    let EvalMetrics {
        r1,
        r5,
        alignment,
        uniformity,
    } = trainer::evaluate(encoder, ds)?;
    let mut out = serde_json::Map::new();
    for &n in cutoffs {
        let r = match n {
            1 => r1,
            5 => r5,
            _ => trainer::recall_at_n(encoder, ds, n)?,
        };
        out.insert(format!("r{n}"), r.into());
    }
    out.insert("alignment".into(), alignment.into());
    out.insert("uniformity".into(), uniformity.into());
    Ok(out.into())
}

pub fn cmd_eval(a: &EvalArgs, stdout: &mut dyn Write) -> Result<()> {
    let cutoffs: Vec<usize> = parse_list("--n", &a.n)?;
    if cutoffs.contains(&0) {
        return Err(Error::usage("--n", "cutoffs must be at least 1"));
    }
    let ds = dataset_io::load(&a.data)?;
    let encoder = checkpoint::load(&a.encoder)?;
    let json = eval_json(&encoder, &ds, &cutoffs)?;
    write_stdout(stdout, &pretty_json(&json)?)
}

#[derive(Debug, Serialize)]
struct InteractionOut {
    pair: [usize; 2],
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_error: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ShapleyOut {
    players: usize,
    method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_errors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interaction: Option<InteractionOut>,
}

pub fn cmd_shapley(a: &ShapleyArgs, stdout: &mut dyn Write) -> Result<()> {
    let game = game_json::load(&a.game)?;
    let n = game.players();
    let pair = match &a.interaction {
        None => None,
        Some(text) => {
            let p: Vec<usize> = parse_list("--interaction", text)?;
            match p[..] {
                [i, j] if i != j && i < n && j < n => Some((i, j)),
                _ => {
                    return Err(Error::usage(
                        "--interaction",
                        format!("need two distinct players below {n}, got {text:?}"),
                    ))
                }
            }
        }
    };
    let out = match a.sampled {
        None => {
            if n > EXACT_PLAYER_LIMIT {
                return Err(Error::usage(
                    "--exact",
                    format!("exact enumeration supports at most {EXACT_PLAYER_LIMIT} players, game has {n}"),
                ));
            }
            let table = TableGame::tabulate(&game)?;
            let interaction = pair
                .map(|(i, j)| -> Result<InteractionOut> {
                    Ok(InteractionOut {
                        pair: [i, j],
                        value: shapley_interaction_exact(&table, &[i, j])?,
                        std_error: None,
                    })
                })
                .transpose()?;
            ShapleyOut {
                players: n,
                method: "exact",
                samples: None,
                seed: None,
                values: shapley_values_exact(&table)?,
                std_errors: None,
                interaction,
            }
        }
        Some(samples) => {
            if samples == 0 {
                return Err(Error::usage("--sampled", "must be at least 1"));
            }
            // stream p for player p, stream n for the pair
            let root = RngStream::new(a.seed, 0);
            let estimates = (0..n)
                .map(|p| shapley_value_sampled(&game, p, samples, &mut root.derive(p as u64)))
                .collect::<g2l_core::Result<Vec<_>>>()?;
            let interaction = pair
                .map(|(i, j)| -> Result<InteractionOut> {
                    let e = sampled_pair_interaction(&game, i, j, samples, &mut root.derive(n as u64))?;
                    Ok(InteractionOut {
                        pair: [i, j],
                        value: e.mean,
                        std_error: Some(e.std_error),
                    })
                })
                .transpose()?;
            ShapleyOut {
                players: n,
                method: "sampled",
                samples: Some(samples),
                seed: Some(a.seed),
                values: estimates.iter().map(|e| e.mean).collect(),
                std_errors: Some(estimates.iter().map(|e| e.std_error).collect()),
                interaction,
            }
        }
    };
    write_stdout(stdout, &pretty_json(&out)?)
}

pub fn geodesic_dump(ds: &SynthDataset, video: usize, targets: &[usize], n: usize, g_cap: f64) -> Result<GraphDump> {
    if video >= ds.videos() {
        return Err(Error::Data(format!(
            "video {video} out of range: dataset has {} videos",
            ds.videos()
        )));
    }
    let nm = ds.moments_per_video();
    if let Some(&t) = targets.iter().find(|&&t| t >= nm) {
        return Err(Error::Data(format!("target {t} out of range: videos have {nm} moments")));
    }
    let rows: Vec<usize> = ds.video_rows(video).collect();
    let moments = ds.moments.select_rows(&rows);
    let (graph, tables) = geodesics_from_targets(&moments, targets, n, g_cap)?;
    Ok(GraphDump::new(&graph, &tables))
}

pub fn cmd_geodesic(a: &GeodesicArgs, stdout: &mut dyn Write) -> Result<()> {
    let targets: Vec<usize> = parse_list("--targets", &a.targets)?;
    if !(a.g_cap > 0.0 && a.g_cap.is_finite()) {
        return Err(Error::usage("--g-cap", format!("must be positive and finite, got {}", a.g_cap)));
    }
    let ds = dataset_io::load(&a.data)?;
    let nm = ds.moments_per_video();
    if a.n == 0 || a.n >= nm {
        return Err(Error::usage("--n", format!("must lie in 1..{nm} (moments per video)")));
    }
    let dump = geodesic_dump(&ds, a.video, &targets, a.n, a.g_cap)?;
    let bytes = pretty_json(&dump)?;
    match &a.out {
        None => write_stdout(stdout, &bytes),
        Some(path) => {
            let mut manifest = RunManifest::start("geodesic", config_echo(a)?, 0);
            manifest.inputs.push(a.data.clone());
            write_atomic(path, &bytes)?;
            manifest.outputs.push(path.clone());
            manifest.finish_and_write(&manifest_path_for(path))
        }
    }
}

/// Final metrics of one (mode, seed) training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellResult {
    pub mode: ModeArg,
    pub seed: u64,
    pub r1: f64,
    pub r5: f64,
    pub alignment: f64,
    pub uniformity: f64,
    pub l_total: f64,
}

/// Worker count from `G2L_THREADS`, else the available cores.
pub fn thread_limit() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::usage(THREADS_ENV, format!("expected a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Trains every cell on up to `threads` workers. Results come back in cell
/// order whatever the scheduling.
pub fn run_cells(ds: &SynthDataset, cells: &[(ModeArg, TrainConfig)], threads: usize) -> Result<Vec<CellResult>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<CellResult>>>> = Mutex::new((0..cells.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, cells.len().max(1)) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some((mode, cfg)) = cells.get(idx) else {
                    break;
                };
                let result = trainer::train(ds, cfg).map_err(Error::from).and_then(|(_, report)| {
                    let last = report
                        .last()
                        .copied()
                        .ok_or_else(|| Error::Data("training produced no epochs".into()))?;
                    Ok(CellResult {
                        mode: *mode,
                        seed: cfg.seed,
                        r1: last.r1,
                        r5: last.r5,
                        alignment: last.alignment,
                        uniformity: last.uniformity,
                        l_total: last.l_total,
                    })
                });
                slots.lock().expect("no worker panicked")[idx] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, (pairwise_sum(&sq) / (n - 1.0)).sqrt())
}

pub fn compare_csv(results: &[CellResult], modes: &[ModeArg]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["mode", "seed", "r1", "r5", "alignment", "uniformity", "l_total"])?;
    let name = |m: ModeArg| match m {
        ModeArg::Baseline => "baseline",
        ModeArg::G2l => "g2l",
    };
    for r in results {
        w.write_record([
            name(r.mode).to_string(),
            r.seed.to_string(),
            r.r1.to_string(),
            r.r5.to_string(),
            r.alignment.to_string(),
            r.uniformity.to_string(),
            r.l_total.to_string(),
        ])?;
    }
    for &mode in modes {
        let rows: Vec<&CellResult> = results.iter().filter(|r| r.mode == mode).collect();
        let stat = |f: fn(&CellResult) -> f64| {
            let v: Vec<f64> = rows.iter().map(|r| f(r)).collect();
            let (m, s) = mean_std(&v);
            format!("{m}±{s}")
        };
        w.write_record([
            name(mode).to_string(),
            "mean±std".to_string(),
            stat(|r| r.r1),
            stat(|r| r.r5),
            stat(|r| r.alignment),
            stat(|r| r.uniformity),
            stat(|r| r.l_total),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Data(e.to_string()))
}

pub fn cmd_compare(a: &CompareArgs, stdout: &mut dyn Write) -> Result<()> {
    let seeds: Vec<u64> = parse_list("--seeds", &a.seeds)?;
    let mode_names: Vec<String> = parse_list("--modes", &a.modes)?;
    let mut modes = Vec::new();
    for m in &mode_names {
        let mode = ModeArg::from_str(m, true).map_err(|_| Error::usage("--modes", format!("unknown mode {m:?}")))?;
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    let threads = thread_limit()?;
    let ds = dataset_io::load(&a.data)?;
    let mut manifest = RunManifest::start("compare", config_echo(a)?, seeds[0]);
    manifest.inputs.push(a.data.clone());

    let mut cells = Vec::new();
    for &mode in &modes {
        for &seed in &seeds {
            cells.push((mode, train_config(&a.hyper, mode, seed, &ds)?));
        }
    }
    let results = run_cells(&ds, &cells, threads)?;
    let csv = compare_csv(&results, &modes)?;
    match &a.out {
        None => write_stdout(stdout, &csv),
        Some(path) => {
            write_atomic(path, &csv)?;
            manifest.outputs.push(path.clone());
            manifest.finish_and_write(&manifest_path_for(path))
        }
    }
}

