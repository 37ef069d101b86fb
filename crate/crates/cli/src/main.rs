//! `scav`: synthetic data, distances, training, retrieval and gradient checks
//! from the command line.
//!
//! Exit codes: 0 on success, 1 when flags fail validation, 2 when the run
//! itself fails (I/O, malformed files, numerical failure, failed gradcheck).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use scav::encoder::{
    load_checkpoint, save_checkpoint, train, AdamHyper, EncodedPairs, LossKind, Model, TrainConfig,
};
use scav::kernels::{distance, pairwise_matrix};
use scav::retrieval::{
    bench, evaluate, format_table, format_tsv, BenchSet, RetrievalDirection, RetrievalMode, RECALL_CUTOFFS,
};
use scav::seqdata::{gen_synthetic, load_manifest, load_seqf, save_manifest, PairManifest, Projection};
use scav::verification::{run_all, run_target, TARGETS};
use scav::{Direction, DistanceKind, PairedDataset, Stage, SynthConfig};

#[derive(Parser, Serialize)]
#[command(name = "scav", version, about = "Sequential contrastive audio-visual learning at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Write a seeded synthetic paired dataset and its manifest.
    GenSynthetic(GenArgs),
    /// Distance between two SEQF files (first is the video role).
    Dist(DistArgs),
    /// Distance matrix between the videos of one manifest and the audios of another.
    Pairwise(PairwiseArgs),
    /// Train the encoders and write a checkpoint.
    Train(TrainArgs),
    /// Rank one manifest's pairs against each other and report recall.
    Retrieve(RetrieveArgs),
    /// Time retrieval modes in both directions.
    Bench(BenchArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Metric {
    Eucl,
    Sdtw,
    Dtw,
    Wass,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DirArg {
    V2a,
    A2v,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum StageArg {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum LossArg {
    Cav,
    Scav,
    Multi,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Agg,
    Seq,
    Hybrid,
}

/// Distance flags shared by every command that computes one. Unset values
/// fall back to the command's default kind.
#[derive(Args, Debug, Clone, Serialize)]
struct MetricArgs {
    #[arg(long, value_enum)]
    metric: Option<Metric>,
    /// Interpolate raw features (pre) or latents (post).
    #[arg(long, value_enum)]
    stage: Option<StageArg>,
    /// Soft-DTW smoothing.
    #[arg(long)]
    gamma: Option<f64>,
    /// Sinkhorn entropic regularization.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sinkhorn iteration cap.
    #[arg(long)]
    iters: Option<usize>,
    /// Weight of the positional cost term.
    #[arg(long)]
    pos_weight: Option<f64>,
}

impl MetricArgs {
    fn resolve(&self, default: DistanceKind, interp: Option<DirArg>) -> CliResult<DistanceKind> {
        let metric = match (self.metric, default) {
            (Some(m), _) => m,
            (None, DistanceKind::EuclInterp { .. }) => Metric::Eucl,
            (None, DistanceKind::SoftDtw { .. }) => Metric::Sdtw,
            (None, DistanceKind::HardDtw) => Metric::Dtw,
            (None, DistanceKind::Wasserstein { .. }) => Metric::Wass,
        };
        let kind = match metric {
            Metric::Eucl => {
                let (d0, s0) = match default {
                    DistanceKind::EuclInterp { direction, stage } => (direction, stage),
                    _ => (Direction::V2A, Stage::Pre),
                };
                DistanceKind::eucl(
                    interp.map(direction).unwrap_or(d0),
                    self.stage.map(stage).unwrap_or(s0),
                )
            }
            Metric::Sdtw => {
                let g0 = match default {
                    DistanceKind::SoftDtw { gamma } => gamma,
                    _ => DistanceKind::DEFAULT_GAMMA,
                };
                DistanceKind::SoftDtw {
                    gamma: self.gamma.unwrap_or(g0),
                }
            }
            Metric::Dtw => DistanceKind::HardDtw,
            Metric::Wass => {
                let base = match default {
                    w @ DistanceKind::Wasserstein { .. } => w,
                    _ => DistanceKind::wasserstein_default(),
                };
                let DistanceKind::Wasserstein {
                    epsilon,
                    iters,
                    pos_weight,
                    tol,
                } = base
                else {
                    unreachable!()
                };
                DistanceKind::Wasserstein {
                    epsilon: self.epsilon.unwrap_or(epsilon),
                    iters: self.iters.unwrap_or(iters),
                    pos_weight: self.pos_weight.unwrap_or(pos_weight),
                    tol,
                }
            }
        };
        kind.validate().map_err(CliError::invalid)?;
        Ok(kind)
    }
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[arg(long, default_value_t = 256)]
    pairs: usize,
    #[arg(long, default_value_t = 32)]
    dim_v: usize,
    #[arg(long, default_value_t = 24)]
    dim_a: usize,
    #[arg(long, default_value_t = 8)]
    latent_dim: usize,
    #[arg(long, default_value_t = 16)]
    len_v: usize,
    #[arg(long, default_value_t = 10)]
    len_a: usize,
    #[arg(long, default_value_t = 0.3)]
    noise_std: f64,
    #[arg(long, default_value_t = 0.0)]
    distractor_corr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use identity maps instead of random projections (needs equal dims).
    #[arg(long)]
    identity_projection: bool,
    /// Also write train.tsv (all but the last N pairs) and test.tsv (the last N).
    #[arg(long, default_value_t = 0)]
    holdout: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct DistArgs {
    #[command(flatten)]
    metric: MetricArgs,
    /// Interpolation direction of the Euclidean distance.
    #[arg(long, value_enum)]
    direction: Option<DirArg>,
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args, Serialize)]
struct PairwiseArgs {
    #[command(flatten)]
    metric: MetricArgs,
    /// Interpolation direction of the Euclidean distance.
    #[arg(long, value_enum)]
    direction: Option<DirArg>,
    #[arg(long)]
    videos: PathBuf,
    #[arg(long)]
    audios: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Held-out pairs scored after training.
    #[arg(long)]
    val_manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LossArg::Scav)]
    loss: LossArg,
    #[command(flatten)]
    metric: MetricArgs,
    /// Interpolation direction of the Euclidean distance.
    #[arg(long, value_enum)]
    direction: Option<DirArg>,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 7e-4)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    warmup: usize,
    #[arg(long, default_value_t = 0.0)]
    weight_decay: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train SCAV on raw distances instead of z-scored ones.
    #[arg(long)]
    no_dist_norm: bool,
    #[arg(long, default_value_t = 1.0)]
    lambda_init: f64,
    #[arg(long, default_value_t = 0.07)]
    tau_init: f64,
    #[arg(long, default_value_t = 0.5)]
    multitask_weight: f64,
    #[arg(long, default_value_t = 64)]
    hidden_dim: usize,
    #[arg(long, default_value_t = 32)]
    latent_dim: usize,
    #[arg(long)]
    ckpt_out: PathBuf,
    /// Per-step losses, one per line.
    #[arg(long)]
    loss_out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Serialize)]
struct RetrieveArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Query side: a2v asks with audio, v2a with video.
    #[arg(long, value_enum, default_value_t = DirArg::A2v)]
    direction: DirArg,
    /// Pre-selection pool for hybrid mode.
    #[arg(long)]
    k: Option<usize>,
    /// Sequence distance; defaults to the checkpoint's training distance.
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    /// Encoder checkpoint. Without one, features are taken as already encoded.
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    /// Comma-separated: agg, seq, hybrid:K, optionally suffixed with :METRIC
    /// (seq:sdtw, hybrid:100:wass).
    #[arg(long, default_value = "agg,seq,hybrid:100")]
    modes: String,
    #[command(flatten)]
    metric: MetricArgs,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct GradcheckArgs {
    /// A target name or `all`.
    #[arg(long, default_value = "all")]
    target: String,
    /// Overrides the per-target default threshold.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
enum CliError {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    fn invalid(e: impl Into<anyhow::Error>) -> Self {
        CliError::Invalid(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<scav::Error> for CliError {
    fn from(e: scav::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn direction(d: DirArg) -> Direction {
    match d {
        DirArg::V2a => Direction::V2A,
        DirArg::A2v => Direction::A2V,
    }
}

fn stage(s: StageArg) -> Stage {
    match s {
        StageArg::Pre => Stage::Pre,
        StageArg::Post => Stage::Post,
    }
}

fn retrieval_direction(d: DirArg) -> RetrievalDirection {
    match d {
        DirArg::V2a => RetrievalDirection::V2A,
        DirArg::A2v => RetrievalDirection::A2V,
    }
}

fn check_workers(workers: Option<usize>) -> CliResult<()> {
    if workers == Some(0) {
        return Err(CliError::Invalid(anyhow!("--workers must be at least 1")));
    }
    Ok(())
}

fn log_config(name: &str, value: &impl Serialize) {
    match serde_json::to_string(value) {
        Ok(json) => eprintln!("{name}: {json}"),
        Err(e) => eprintln!("{name}: <unserializable: {e}>"),
    }
}

fn load_dataset(manifest: &Path) -> CliResult<PairedDataset> {
    let data = load_manifest(manifest)?.resolve()?;
    if data.is_empty() {
        return Err(CliError::Runtime(anyhow!("{} lists no pairs", manifest.display())));
    }
    Ok(data)
}

fn as_f64(data: &PairedDataset) -> EncodedPairs {
    (
        data.videos.iter().map(|s| s.to_f64()).collect(),
        data.audios.iter().map(|s| s.to_f64()).collect(),
    )
}

fn write_out(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn gen_cmd(args: &GenArgs) -> CliResult<()> {
    let cfg = SynthConfig {
        num_pairs: args.pairs,
        dim_v: args.dim_v,
        dim_a: args.dim_a,
        latent_dim: args.latent_dim,
        len_v: args.len_v,
        len_a: args.len_a,
        noise_std: args.noise_std,
        seed: args.seed,
        distractor_correlation: args.distractor_corr,
        projection: if args.identity_projection {
            Projection::Identity
        } else {
            Projection::Random
        },
    };
    cfg.validate().map_err(CliError::invalid)?;
    if args.holdout >= args.pairs {
        return Err(CliError::Invalid(anyhow!("--holdout must be smaller than --pairs")));
    }
    log_config("synth config", &cfg);
    let manifest = gen_synthetic(&cfg, &args.out)?;
    if args.holdout > 0 {
        let cut = manifest.len() - args.holdout;
        for (name, records) in [("train.tsv", &manifest.records[..cut]), ("test.tsv", &manifest.records[cut..])] {
            let part = PairManifest {
                records: records.to_vec(),
                base_dir: manifest.base_dir.clone(),
            };
            save_manifest(&part, args.out.join(name))?;
        }
    }
    println!("wrote {} pairs to {}", manifest.len(), args.out.display());
    Ok(())
}

fn dist_cmd(args: &DistArgs) -> CliResult<()> {
    let kind = args.metric.resolve(DistanceKind::eucl(Direction::V2A, Stage::Post), args.direction)?;
    log_config("distance", &kind);
    let x = load_seqf(&args.a)?.to_f64();
    let y = load_seqf(&args.b)?.to_f64();
    println!("{}", distance(x.view(), y.view(), &kind)?);
    Ok(())
}

fn pairwise_cmd(args: &PairwiseArgs) -> CliResult<()> {
    check_workers(args.workers)?;
    let kind = args.metric.resolve(DistanceKind::eucl(Direction::V2A, Stage::Post), args.direction)?;
    log_config("distance", &kind);
    let vdata = load_dataset(&args.videos)?;
    let adata = load_dataset(&args.audios)?;
    let (videos, _) = as_f64(&vdata);
    let (_, audios) = as_f64(&adata);
    let d = pairwise_matrix(&videos, &audios, &kind, args.workers)?;
    let mut out = String::from("video");
    for id in &adata.ids {
        write!(out, "\t{id}").unwrap();
    }
    out.push('\n');
    for (id, row) in vdata.ids.iter().zip(d.values.rows()) {
        out.push_str(id);
        for v in row {
            write!(out, "\t{v}").unwrap();
        }
        out.push('\n');
    }
    write_out(&args.out, &out)
}

fn train_cmd(args: &TrainArgs) -> CliResult<()> {
    check_workers(args.workers)?;
    let distance = args.metric.resolve(DistanceKind::eucl(Direction::V2A, Stage::Pre), args.direction)?;
    let cfg = TrainConfig {
        loss: match args.loss {
            LossArg::Cav => LossKind::Cav,
            LossArg::Scav => LossKind::Scav,
            LossArg::Multi => LossKind::Multi,
        },
        distance,
        batch_size: args.batch_size,
        steps: args.steps,
        base_lr: args.lr,
        warmup_steps: args.warmup,
        adam: AdamHyper {
            weight_decay: args.weight_decay,
            ..AdamHyper::default()
        },
        seed: args.seed,
        tau_init: args.tau_init,
        lambda_init: args.lambda_init,
        normalize_distances: !args.no_dist_norm,
        multitask_weight: args.multitask_weight,
        hidden_dim: args.hidden_dim,
        latent_dim: args.latent_dim,
        workers: args.workers,
    };
    cfg.validate().map_err(CliError::invalid)?;
    log_config("train config", &cfg);
    let data = load_dataset(&args.manifest)?;
    let val = args.val_manifest.as_deref().map(load_dataset).transpose()?;
    let report = train(&data, val.as_ref(), &cfg)?;
    save_checkpoint(&report.model, &args.ckpt_out)?;
    if let Some(path) = &args.loss_out {
        let text: String = report.losses.iter().map(|l| format!("{l}\n")).collect();
        write_out(path, &text)?;
    }
    let tail = report.losses.len().min(50);
    let recent = report.losses[report.losses.len() - tail..].iter().sum::<f64>() / tail as f64;
    println!(
        "trained {} steps in {:.1}s: first loss {:.4}, mean of last {tail} {:.4}, lambda {:.4}, tau {:.4}",
        report.losses.len(),
        report.elapsed_s,
        report.losses[0],
        recent,
        report.model.lambda.value(),
        report.model.tau.value()
    );
    if let Some(e) = report.eval {
        println!(
            "validation recall@1: agg A2V {:.4} V2A {:.4}, seq A2V {:.4} V2A {:.4}",
            e.agg_a2v, e.agg_v2a, e.seq_a2v, e.seq_v2a
        );
    }
    println!("checkpoint: {}", args.ckpt_out.display());
    Ok(())
}

fn mode_from(mode: ModeArg, k: Option<usize>, kind: DistanceKind) -> CliResult<RetrievalMode> {
    match (mode, k) {
        (ModeArg::Agg, _) => Ok(RetrievalMode::Agg),
        (ModeArg::Seq, _) => Ok(RetrievalMode::Seq { kind }),
        (ModeArg::Hybrid, Some(k)) if k >= 1 => Ok(RetrievalMode::Hybrid { k, kind }),
        (ModeArg::Hybrid, Some(_)) => Err(CliError::Invalid(anyhow!("--k must be at least 1"))),
        (ModeArg::Hybrid, None) => Err(CliError::Invalid(anyhow!("--mode hybrid needs --k"))),
    }
}

fn encode(model: Option<&Model>, data: &PairedDataset, workers: Option<usize>) -> CliResult<EncodedPairs> {
    match model {
        Some(m) => Ok(m.encode_pairs(data, workers)?),
        None => Ok(as_f64(data)),
    }
}

fn retrieve_cmd(args: &RetrieveArgs) -> CliResult<()> {
    check_workers(args.workers)?;
    let model = load_checkpoint(&args.ckpt)?;
    let kind = args.metric.resolve(model.config.distance, None)?;
    let mode = mode_from(args.mode, args.k, kind)?;
    let dir = retrieval_direction(args.direction);
    log_config("retrieval mode", &(&mode, dir));
    let data = load_dataset(&args.manifest)?;
    if let RetrievalMode::Hybrid { k, .. } = mode {
        if k > data.len() {
            return Err(CliError::Invalid(anyhow!("--k {k} exceeds the {} candidates", data.len())));
        }
    }
    let (videos, audios) = encode(Some(&model), &data, args.workers)?;
    let (queries, candidates) = match dir {
        RetrievalDirection::A2V => (&audios, &videos),
        RetrievalDirection::V2A => (&videos, &audios),
    };
    let positives: Vec<usize> = (0..data.len()).collect();
    let report = evaluate(queries, candidates, &positives, &mode, dir, args.workers)?;

    let mut out = String::from("query");
    for r in 1..=RECALL_CUTOFFS[RECALL_CUTOFFS.len() - 1].min(data.len()) {
        write!(out, "\trank{r}").unwrap();
    }
    out.push('\n');
    for (q, ranks) in report.ranks.iter().enumerate() {
        out.push_str(&data.ids[q]);
        for &c in ranks {
            write!(out, "\t{}", data.ids[c]).unwrap();
        }
        out.push('\n');
    }
    write_out(&args.out, &out)?;
    println!(
        "{} {}: recall@1 {:.4} recall@5 {:.4} recall@10 {:.4} ({:.3}s)",
        report.mode,
        dir.name(),
        report.recall[0],
        report.recall[1],
        report.recall[2],
        report.total_s
    );
    Ok(())
}

fn parse_modes(spec: &str, default_kind: DistanceKind, metric_args: &MetricArgs) -> CliResult<Vec<RetrievalMode>> {
    let mut modes = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let kind_for = |name: Option<&str>| -> CliResult<DistanceKind> {
            match name {
                None => Ok(default_kind),
                Some(n) => {
                    let metric = Metric::from_str(n, true)
                        .map_err(|_| CliError::Invalid(anyhow!("unknown metric {n:?} in --modes")))?;
                    MetricArgs {
                        metric: Some(metric),
                        ..metric_args.clone()
                    }
                    .resolve(default_kind, None)
                }
            }
        };
        let mode = match parts.as_slice() {
            ["agg"] => RetrievalMode::Agg,
            ["seq"] => RetrievalMode::Seq { kind: kind_for(None)? },
            ["seq", m] => RetrievalMode::Seq { kind: kind_for(Some(m))? },
            ["hybrid", k] | ["hybrid", k, _] => {
                let k: usize = k
                    .parse()
                    .map_err(|_| CliError::Invalid(anyhow!("bad hybrid pool size in {item:?}")))?;
                mode_from(ModeArg::Hybrid, Some(k), kind_for(parts.get(2).copied())?)?
            }
            _ => return Err(CliError::Invalid(anyhow!("unrecognised mode {item:?}"))),
        };
        modes.push(mode);
    }
    if modes.is_empty() {
        return Err(CliError::Invalid(anyhow!("--modes is empty")));
    }
    Ok(modes)
}

fn bench_cmd(args: &BenchArgs) -> CliResult<()> {
    check_workers(args.workers)?;
    let model = args.ckpt.as_deref().map(load_checkpoint).transpose()?;
    let default_kind = model
        .as_ref()
        .map(|m| m.config.distance)
        .unwrap_or(DistanceKind::eucl(Direction::V2A, Stage::Post));
    let default_kind = args.metric.resolve(default_kind, None)?;
    let modes = parse_modes(&args.modes, default_kind, &args.metric)?;
    log_config("bench modes", &modes);

    let qdata = load_dataset(&args.queries)?;
    let cdata = load_dataset(&args.candidates)?;
    let positives = qdata
        .ids
        .iter()
        .map(|id| {
            cdata
                .ids
                .iter()
                .position(|c| c == id)
                .ok_or_else(|| anyhow!("query {id:?} has no candidate with the same id"))
        })
        .collect::<anyhow::Result<Vec<usize>>>()?;
    for m in &modes {
        if let RetrievalMode::Hybrid { k, .. } = m {
            if *k > cdata.len() {
                return Err(CliError::Invalid(anyhow!("hybrid k {k} exceeds the {} candidates", cdata.len())));
            }
        }
    }
    let (qv, qa) = encode(model.as_ref(), &qdata, args.workers)?;
    let (cv, ca) = encode(model.as_ref(), &cdata, args.workers)?;
    let set = BenchSet {
        query_videos: &qv,
        query_audios: &qa,
        cand_videos: &cv,
        cand_audios: &ca,
        positives: &positives,
    };
    let reports = bench(&set, &modes, args.workers)?;
    write_out(&args.out, &format_tsv(&reports))?;
    print!("{}", format_table(&reports));
    Ok(())
}

fn gradcheck_cmd(args: &GradcheckArgs) -> CliResult<bool> {
    if args.target != "all" && !TARGETS.contains(&args.target.as_str()) {
        return Err(CliError::Invalid(anyhow!(
            "unknown target {:?}; expected `all` or one of {}",
            args.target,
            TARGETS.join(", ")
        )));
    }
    if let Some(t) = args.threshold {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Invalid(anyhow!("--threshold must be positive")));
        }
    }
    let reports = if args.target == "all" {
        run_all(args.seed, args.threshold)?
    } else {
        vec![run_target(&args.target, args.seed, args.threshold)?]
    };
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} targets passed", reports.len() - failed, reports.len());
    Ok(failed == 0)
}

fn run(cli: &Cli) -> CliResult<bool> {
    log_config("command", &cli.command);
    match &cli.command {
        Command::GenSynthetic(a) => gen_cmd(a).map(|_| true),
        Command::Dist(a) => dist_cmd(a).map(|_| true),
        Command::Pairwise(a) => pairwise_cmd(a).map(|_| true),
        Command::Train(a) => train_cmd(a).map(|_| true),
        Command::Retrieve(a) => retrieve_cmd(a).map(|_| true),
        Command::Bench(a) => bench_cmd(a).map(|_| true),
        Command::Gradcheck(a) => gradcheck_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(CliError::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
