//! One binary for the whole pipeline: dataset prep, codec and predictor
//! training, ladder building, transmission experiments, forced-drop sweeps,
//! and CSV merging. Every subcommand echoes its resolved configuration as
//! JSON (stdout and a file next to its outputs) so any artifact can be
//! reproduced from its invocation log.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use framecast::channel::{ChannelConfig, Preset};
use framecast::frame_io::{
    decode_fcrw, encode_fcrw, load_sequence, split_dataset, synth_sequence, DatasetManifest,
    FrameSequence, ManifestEntry, Split, SynthKind,
};
use framecast::metrics::{
    drop_sweep, reports_to_csv, run_experiment, sweep_to_reports, ExperimentSetup, VideoReport,
    CSV_HEADER,
};
use framecast::monolithic::{build_ladder, DEFAULT_GOP};
use framecast::nn::TrainConfig;
use framecast::predictor::{train_predictor, PredictorModel};
use framecast::progressive::{
    encode, train_autoencoder, AutoencoderModel, FeatureVector, TaildropDistribution,
};
use framecast::transport::{AckGranularity, Reconstructor};

#[derive(Parser)]
#[command(
    name = "framecast",
    about = "Deadline-constrained video transmission testbed",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset directory: manifest plus resized raw-frame caches.
    Prep(PrepArgs),
    /// Train the progressive autoencoder on a prepared dataset.
    TrainAe(TrainAeArgs),
    /// Train the temporal latent predictor against an autoencoder.
    TrainPred(TrainPredArgs),
    /// Encode one video at several quantizers and record the bitrate ladder.
    BuildLadder(BuildLadderArgs),
    /// Run the transmission experiment over an emulated channel.
    Transmit(TransmitArgs),
    /// Measure MSE with the first B-k segments forced, channel bypassed.
    Sweep(SweepArgs),
    /// Merge result CSVs produced by transmit/sweep runs.
    Report(ReportArgs),
}

enum AppError {
    Usage(String),
    Runtime(String),
}

impl<E: std::error::Error> From<E> for AppError {
    fn from(e: E) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prep(args) => cmd_prep(args),
        Command::TrainAe(args) => cmd_train_ae(args),
        Command::TrainPred(args) => cmd_train_pred(args),
        Command::BuildLadder(args) => cmd_build_ladder(args),
        Command::Transmit(args) => cmd_transmit(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Default output directory: $FRAMECAST_OUT_DIR or the working directory.
fn default_out_dir() -> PathBuf {
    std::env::var_os("FRAMECAST_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Print the resolved config and write it next to the outputs.
fn echo_config(
    subcommand: &str,
    config: serde_json::Value,
    out_dir: &Path,
) -> Result<(), AppError> {
    let doc = json!({ "subcommand": subcommand, "config": config });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join(format!("{subcommand}-config.json")),
        serde_json::to_string_pretty(&doc)?,
    )?;
    Ok(())
}

/// Source ids become file names; keep them path-safe.
fn check_source_id(id: &str) -> Result<(), AppError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(AppError::Runtime(format!(
            "source id {id:?} contains characters unsafe for file names"
        )))
    }
}

/// Load a dataset directory written by `prep`: manifest.csv plus one
/// raw-frame cache per source id.
fn load_prepared(dir: &Path) -> Result<(DatasetManifest, Vec<FrameSequence>), AppError> {
    let manifest_path = dir.join("manifest.csv");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| AppError::Runtime(format!("{}: {e}", manifest_path.display())))?;
    let manifest = DatasetManifest::parse(&text)?;
    let mut sequences = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        check_source_id(&entry.source_id)?;
        let path = dir.join(format!("{}.fcrw", entry.source_id));
        let bytes = std::fs::read(&path)
            .map_err(|e| AppError::Runtime(format!("{}: {e}", path.display())))?;
        let frames = decode_fcrw(&bytes, &entry.source_id)?;
        let mut seq = FrameSequence::new(frames, entry.source_id.clone());
        seq.label = Some(entry.label.clone());
        sequences.push(seq);
    }
    Ok((manifest, sequences))
}

// ---------------------------------------------------------------------------
// prep

#[derive(Args, serde::Serialize)]
struct PrepArgs {
    /// Dataset directory to create.
    #[arg(long)]
    out: PathBuf,
    /// Directories of frames (PGM/PPM/FCRW) to ingest, one sequence each;
    /// splits are assigned round-robin 8:1:1 over the sorted list.
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Generate synthetic sequences of this kind instead of (or besides)
    /// ingesting directories.
    #[arg(long, value_parser = ["moving_square", "constant", "noise"])]
    synth: Option<String>,
    /// Synthetic sequences per split.
    #[arg(long, default_value_t = 0)]
    train: usize,
    #[arg(long, default_value_t = 0)]
    val: usize,
    #[arg(long, default_value_t = 0)]
    test: usize,
    /// Frames per synthetic sequence.
    #[arg(long, default_value_t = 48)]
    frames: usize,
    /// Target width every sequence is resized to.
    #[arg(long, default_value_t = 16)]
    width: usize,
    #[arg(long, default_value_t = 16)]
    height: usize,
    /// Channels for synthetic sequences (1 = gray, 3 = RGB).
    #[arg(long, default_value_t = 1)]
    channels: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_prep(args: PrepArgs) -> Result<(), AppError> {
    if args.synth.is_none() && args.input.is_empty() {
        return Err(usage("nothing to prepare: pass --synth and/or --input"));
    }
    if !(args.channels == 1 || args.channels == 3) {
        return Err(usage("--channels must be 1 or 3"));
    }
    if args.synth.is_some() && args.train + args.val + args.test == 0 {
        return Err(usage(
            "--synth needs at least one of --train/--val/--test to be nonzero",
        ));
    }
    let config = serde_json::to_value(&args)?;
    let mut entries: Vec<(ManifestEntry, FrameSequence)> = Vec::new();

    if let Some(kind_name) = &args.synth {
        let kind = SynthKind::parse(kind_name).expect("validated by clap");
        let dims = (args.width, args.height, args.channels);
        let plan = [
            (Split::Train, args.train),
            (Split::Validation, args.val),
            (Split::Test, args.test),
        ];
        let mut index = 0u64;
        for (split, count) in plan {
            for _ in 0..count {
                let seq = synth_sequence(kind, args.frames, dims, args.seed.wrapping_add(index))?;
                entries.push((
                    ManifestEntry {
                        source_id: seq.source_id.clone(),
                        split,
                        label: kind_name.clone(),
                    },
                    seq,
                ));
                index += 1;
            }
        }
    }

    let mut inputs = args.input.clone();
    inputs.sort();
    for (i, dir) in inputs.iter().enumerate() {
        let seq = load_sequence(dir, (args.width, args.height))?;
        let split = match i % 10 {
            8 => Split::Validation,
            9 => Split::Test,
            _ => Split::Train,
        };
        entries.push((
            ManifestEntry {
                source_id: seq.source_id.clone(),
                split,
                label: "imported".to_string(),
            },
            seq,
        ));
    }

    std::fs::create_dir_all(&args.out)?;
    for (entry, seq) in &entries {
        check_source_id(&entry.source_id)?;
        std::fs::write(
            args.out.join(format!("{}.fcrw", entry.source_id)),
            encode_fcrw(&seq.frames)?,
        )?;
    }
    let manifest = DatasetManifest {
        entries: entries.iter().map(|(e, _)| e.clone()).collect(),
    };
    std::fs::write(args.out.join("manifest.csv"), manifest.to_csv())?;
    echo_config("prep", config, &args.out)?;
    println!(
        "prepared {} sequences into {}",
        entries.len(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train-ae

#[derive(Args, serde::Serialize)]
struct TrainAeArgs {
    /// Prepared dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Where to write the model (default <data>/autoencoder.fcae).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Importance-ordered latent segments.
    #[arg(long = "B", default_value_t = 10)]
    segments: usize,
    /// Scalars per segment.
    #[arg(long = "S", default_value_t = 1)]
    segment_width: usize,
    /// Probability a training sample keeps the full latent vector.
    #[arg(long, default_value_t = 0.5)]
    keep_all_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_train_ae(args: TrainAeArgs) -> Result<(), AppError> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.data.join("autoencoder.fcae"));
    let config = serde_json::to_value(&args)?;
    let (manifest, sequences) = load_prepared(&args.data)?;
    let split = split_dataset(&manifest, sequences, true)?;
    let train_config = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        momentum: args.momentum,
        batch_size: args.batch_size,
        seed: args.seed,
    };
    let taildrop = TaildropDistribution {
        keep_all_probability: args.keep_all_prob,
    };
    let (model, report) = train_autoencoder(
        &split.train,
        &split.validation,
        args.segments,
        args.segment_width,
        &train_config,
        taildrop,
    )?;
    model.save(&out)?;
    let out_dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
    echo_config("train-ae", config, &out_dir)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "model": out.display().to_string(),
            "fit": report,
        }))?
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train-pred

#[derive(Args, serde::Serialize)]
struct TrainPredArgs {
    #[arg(long)]
    data: PathBuf,
    /// Autoencoder checkpoint whose latents the predictor learns.
    #[arg(long)]
    ae: PathBuf,
    /// Where to write the model (default <data>/predictor.fcpr).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of previous latent vectors fed to the predictor.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 15)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Probability a training input keeps its full latent vector.
    #[arg(long, default_value_t = 0.5)]
    keep_all_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn encode_sequences(
    model: &AutoencoderModel,
    sequences: &[FrameSequence],
) -> Result<Vec<Vec<FeatureVector>>, AppError> {
    sequences
        .iter()
        .map(|seq| {
            seq.frames
                .iter()
                .map(|f| encode(model, f))
                .collect::<Result<Vec<_>, _>>()
                .map_err(AppError::from)
        })
        .collect()
}

fn cmd_train_pred(args: TrainPredArgs) -> Result<(), AppError> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.data.join("predictor.fcpr"));
    let config = serde_json::to_value(&args)?;
    let ae = AutoencoderModel::load(&args.ae)?;
    let (manifest, sequences) = load_prepared(&args.data)?;
    let split = split_dataset(&manifest, sequences, true)?;
    let train_latents = encode_sequences(&ae, &split.train)?;
    let val_latents = encode_sequences(&ae, &split.validation)?;
    let train_config = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        momentum: args.momentum,
        batch_size: args.batch_size,
        seed: args.seed,
    };
    let taildrop = TaildropDistribution {
        keep_all_probability: args.keep_all_prob,
    };
    let (model, report, skipped) =
        train_predictor(&train_latents, &val_latents, args.k, &train_config, taildrop)?;
    model.save(&out)?;
    let out_dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
    echo_config("train-pred", config, &out_dir)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "model": out.display().to_string(),
            "fit": report,
            "sequences_too_short": skipped,
        }))?
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// build-ladder

#[derive(Args, serde::Serialize)]
struct BuildLadderArgs {
    #[arg(long)]
    data: PathBuf,
    /// Source id to encode (default: the first test-split video).
    #[arg(long)]
    video: Option<String>,
    /// Quantizer steps, coarse to fine bitrate (strictly increasing).
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    steps: Vec<u16>,
    #[arg(long, default_value_t = DEFAULT_GOP)]
    gop: u16,
    #[arg(long, default_value_t = 25.0)]
    fps: f64,
    /// Where to write the ladder JSON (default <data>/ladder.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn test_videos(
    manifest: &DatasetManifest,
    sequences: Vec<FrameSequence>,
) -> Result<Vec<FrameSequence>, AppError> {
    let split = split_dataset(manifest, sequences, false)?;
    if split.test.is_empty() {
        return Err(AppError::Runtime(
            "the dataset has no test-split videos".into(),
        ));
    }
    Ok(split.test)
}

fn cmd_build_ladder(args: BuildLadderArgs) -> Result<(), AppError> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.data.join("ladder.json"));
    let config = serde_json::to_value(&args)?;
    let (manifest, sequences) = load_prepared(&args.data)?;
    let videos = test_videos(&manifest, sequences)?;
    let video = match &args.video {
        Some(id) => videos
            .into_iter()
            .find(|s| &s.source_id == id)
            .ok_or_else(|| AppError::Runtime(format!("no test video named {id:?}")))?,
        None => videos.into_iter().next().expect("checked non-empty"),
    };
    let ladder = build_ladder(&video.frames, &args.steps, args.gop, args.fps)?;
    std::fs::write(&out, serde_json::to_string_pretty(&ladder)?)?;
    let out_dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
    echo_config("build-ladder", config, &out_dir)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "video": video.source_id,
            "ladder": ladder,
        }))?
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// transmit

#[derive(Args, serde::Serialize)]
struct TransmitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    ae: PathBuf,
    /// Temporal predictor checkpoint; enables the framecorr method.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Channel preset (alternative: the three custom flags below).
    #[arg(long, value_parser = ["low", "medium", "high"],
          conflicts_with_all = ["rate_bps", "burst_bits", "latency_ms"])]
    preset: Option<String>,
    #[arg(long, requires = "burst_bits")]
    rate_bps: Option<u64>,
    #[arg(long, requires = "latency_ms")]
    burst_bits: Option<u64>,
    #[arg(long, requires = "rate_bps")]
    latency_ms: Option<u64>,
    /// Per-frame transmission budget in milliseconds.
    #[arg(long, default_value_t = 6.0)]
    deadline_ms: f64,
    /// Acknowledgment granularity.
    #[arg(long, value_parser = ["feature", "frame"], default_value = "feature")]
    ack: String,
    /// Progressive methods to run: zero-fill only, or framecorr too.
    #[arg(long, value_parser = ["zero", "framecorr"])]
    reconstructor: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    steps: Vec<u16>,
    #[arg(long, default_value_t = DEFAULT_GOP)]
    gop: u16,
    #[arg(long, default_value_t = 25.0)]
    fps: f64,
    /// Trailing frames in the throughput estimate for quality selection.
    #[arg(long, default_value_t = 30)]
    window: usize,
    #[arg(long, default_value_t = 1.0)]
    safety: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report directory (default $FRAMECAST_OUT_DIR or the working dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_channel(
    preset: &Option<String>,
    rate_bps: Option<u64>,
    burst_bits: Option<u64>,
    latency_ms: Option<u64>,
) -> Result<ChannelConfig, AppError> {
    match (preset, rate_bps, burst_bits, latency_ms) {
        (Some(name), None, None, None) => Ok(Preset::parse(name)?.config()),
        (None, Some(rate_bps), Some(burst_bits), Some(latency_ms)) => Ok(ChannelConfig {
            rate_bps,
            burst_bits,
            latency_ms,
        }),
        (None, None, None, None) => Ok(Preset::Medium.config()),
        _ => Err(usage(
            "pass either --preset or all of --rate-bps/--burst-bits/--latency-ms",
        )),
    }
}

fn cmd_transmit(args: TransmitArgs) -> Result<(), AppError> {
    let out_dir = args.out.clone().unwrap_or_else(default_out_dir);
    let channel = resolve_channel(
        &args.preset,
        args.rate_bps,
        args.burst_bits,
        args.latency_ms,
    )?;
    let reconstructor = args.reconstructor.as_deref().unwrap_or(match args.pred {
        Some(_) => "framecorr",
        None => "zero",
    });
    if reconstructor == "framecorr" && args.pred.is_none() {
        return Err(usage("--reconstructor framecorr requires --pred"));
    }
    let config = serde_json::to_value(&args)?;

    let ae = AutoencoderModel::load(&args.ae)?;
    let predictor = match (&args.pred, reconstructor) {
        (Some(path), "framecorr") => Some(PredictorModel::load(path)?),
        _ => None,
    };
    let (manifest, sequences) = load_prepared(&args.data)?;
    let videos: Vec<(String, Vec<framecast::Frame>)> = test_videos(&manifest, sequences)?
        .into_iter()
        .map(|s| (s.source_id, s.frames))
        .collect();

    let setup = ExperimentSetup {
        autoencoder: &ae,
        predictor: predictor.as_ref(),
        channel,
        frame_budget_ms: args.deadline_ms,
        ack: AckGranularity::parse(&args.ack).expect("validated by clap"),
        ladder_steps: args.steps.clone(),
        gop: args.gop,
        fps: args.fps,
        throughput_window: args.window,
        safety: args.safety,
        seed: args.seed,
    };
    let report = run_experiment(&setup, &videos);

    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("report.csv"), report.to_csv())?;
    std::fs::write(out_dir.join("report.json"), report.to_json())?;
    echo_config("transmit", config, &out_dir)?;
    println!(
        "{} rows, {} errors → {}",
        report.rows.len(),
        report.errors.len(),
        out_dir.display()
    );
    if report.any_errors() {
        for e in &report.errors {
            eprintln!("{}/{}: {}", e.video_id, e.method, e.message);
        }
        return Err(AppError::Runtime("some per-video runs failed".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Args, serde::Serialize)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    ae: PathBuf,
    /// Temporal predictor (required with --reconstructor framecorr).
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Fill policy for the dropped tail.
    #[arg(long, value_parser = ["zero", "framecorr"], default_value = "zero")]
    reconstructor: String,
    /// Segments to force-drop, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_sweep(args: SweepArgs) -> Result<(), AppError> {
    let out_dir = args.out.clone().unwrap_or_else(default_out_dir);
    if args.reconstructor == "framecorr" && args.pred.is_none() {
        return Err(usage("--reconstructor framecorr requires --pred"));
    }
    let config = serde_json::to_value(&args)?;
    let ae = AutoencoderModel::load(&args.ae)?;
    let predictor = match args.pred.as_ref() {
        Some(path) if args.reconstructor == "framecorr" => Some(PredictorModel::load(path)?),
        _ => None,
    };
    let (manifest, sequences) = load_prepared(&args.data)?;
    let videos = test_videos(&manifest, sequences)?;

    let method = match args.reconstructor.as_str() {
        "zero" => "pnc",
        _ => "framecorr",
    };
    let mut rows: Vec<VideoReport> = Vec::new();
    for video in &videos {
        let reconstructor = match predictor.as_ref() {
            Some(p) => Reconstructor::Temporal(p),
            None => Reconstructor::ZeroFill,
        };
        let points = drop_sweep(&ae, &video.frames, reconstructor, &args.k)?;
        rows.extend(sweep_to_reports(
            &video.source_id,
            method,
            &points,
            &ae,
            args.seed,
        ));
    }

    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("sweep.csv"), reports_to_csv(&rows))?;
    std::fs::write(out_dir.join("sweep.json"), serde_json::to_string_pretty(&rows)?)?;
    echo_config("sweep", config, &out_dir)?;
    println!("{} rows → {}", rows.len(), out_dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// report

#[derive(Args, serde::Serialize)]
struct ReportArgs {
    /// CSVs to merge, in order.
    #[arg(long, required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Merged CSV path (default <out dir>/merged.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_report(args: ReportArgs) -> Result<(), AppError> {
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| default_out_dir().join("merged.csv"));
    let config = serde_json::to_value(&args)?;
    let mut merged = String::from(CSV_HEADER);
    merged.push('\n');
    for path in &args.inputs {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Runtime(format!("{}: {e}", path.display())))?;
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header == CSV_HEADER => {}
            _ => {
                return Err(AppError::Runtime(format!(
                    "{} does not start with the expected header",
                    path.display()
                )))
            }
        }
        for line in lines {
            if !line.is_empty() {
                merged.push_str(line);
                merged.push('\n');
            }
        }
    }
    std::fs::write(&out, &merged)?;
    let out_dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
    echo_config("report", config, &out_dir)?;
    println!(
        "merged {} files → {}",
        args.inputs.len(),
        out.display()
    );
    Ok(())
}
