//! Evaluation quantities and machine-readable reports: per-video MSE,
//! bytes per frame, elapsed time, percent transmitted, drop histograms,
//! forced-drop sweeps, and the experiment driver that ties codecs, channel,
//! and transport together into CSV/JSON artifacts.
//!
//! MSE convention: squared pixel differences (pixels in [0,1]) are SUMMED
//! within a frame, then averaged over frames. A per-pixel column divides
//! that by the pixel count for interpretability.

use crate::channel::ChannelConfig;
use crate::frame_io::Frame;
use crate::monolithic::{
    build_ladder, decode_monolithic, encode_monolithic, select_quality, MonolithicError,
};
use crate::predictor::{PredictorError, PredictorModel};
use crate::progressive::{encode, AutoencoderModel, ProgressiveError, ReceivedPrefix};
use crate::transport::{
    estimate_throughput, progressive_frame_wire_bytes, send_monolithic, send_progressive,
    AckGranularity, Reconstructor, TransmissionLog, TransportError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("frame count mismatch: {original} original vs {reconstructed} reconstructed")]
    CountMismatch { original: usize, reconstructed: usize },
    #[error("frame {index} dimensions differ between original and reconstruction")]
    DimMismatch { index: usize },
    #[error("empty input sequence")]
    EmptyInput,
    #[error("empty transmission log")]
    EmptyLog,
    #[error("cannot drop {k} of {b} segments")]
    KTooLarge { k: usize, b: usize },
    #[error(transparent)]
    Codec(#[from] ProgressiveError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error(transparent)]
    Monolithic(#[from] MonolithicError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Frame-summed squared error averaged over frames:
/// (1/N) Σ_frames Σ_pixels (x − x̂)².
pub fn video_mse(original: &[Frame], reconstructed: &[Frame]) -> Result<f64, MetricsError> {
    if original.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if original.len() != reconstructed.len() {
        return Err(MetricsError::CountMismatch {
            original: original.len(),
            reconstructed: reconstructed.len(),
        });
    }
    let mut total = 0.0;
    for (index, (a, b)) in original.iter().zip(reconstructed).enumerate() {
        if a.dims() != b.dims() {
            return Err(MetricsError::DimMismatch { index });
        }
        for (x, y) in a.pixels.iter().zip(&b.pixels) {
            let d = x - y;
            total += d * d;
        }
    }
    Ok(total / original.len() as f64)
}

pub fn per_pixel_mse(mse_framesum: f64, dims: (usize, usize, usize)) -> f64 {
    mse_framesum / (dims.0 * dims.1 * dims.2) as f64
}

/// Share of frames that got at least one segment through, in percent.
pub fn percent_progressive(log: &TransmissionLog) -> Result<f64, MetricsError> {
    if log.frames.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let reached = log
        .frames
        .iter()
        .filter(|f| f.segments_delivered >= 1)
        .count();
    Ok(100.0 * reached as f64 / log.frames.len() as f64)
}

/// Monolithic delivery is all-or-nothing.
pub fn percent_monolithic(within_budget: bool) -> f64 {
    if within_budget {
        100.0
    } else {
        0.0
    }
}

/// Histogram over frames of how many segments the deadline dropped;
/// index k counts frames missing exactly k segments, k in 0..=B.
pub fn drops_histogram(log: &TransmissionLog, segment_count: usize) -> Vec<u64> {
    let mut hist = vec![0u64; segment_count + 1];
    for f in &log.frames {
        let dropped = segment_count.saturating_sub(f.segments_delivered);
        hist[dropped] += 1;
    }
    hist
}

// ---------------------------------------------------------------------------
// Forced-drop sweep (channel bypassed)

#[derive(Debug, Clone, serde::Serialize)]
pub struct DropPoint {
    pub k_dropped: usize,
    pub mse_framesum: f64,
    pub mse_perpixel: f64,
}

/// Reconstruct every frame from exactly the first B−k segments for each k,
/// with no channel in the loop, and measure the resulting MSE. Latents stay
/// at full f64 precision, so k=0 reproduces the codec's full-data MSE
/// exactly.
pub fn drop_sweep(
    model: &AutoencoderModel,
    frames: &[Frame],
    reconstructor: Reconstructor<'_>,
    k_list: &[usize],
) -> Result<Vec<DropPoint>, MetricsError> {
    if frames.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let b = model.segment_count;
    if let Some(&k) = k_list.iter().find(|&&k| k >= b) {
        return Err(MetricsError::KTooLarge { k, b });
    }
    let latents: Vec<_> = frames
        .iter()
        .map(|f| encode(model, f))
        .collect::<Result<_, _>>()?;
    let mut points = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let keep = b - k;
        let mut prefixes = Vec::with_capacity(frames.len());
        for latent in &latents {
            let mut prefix = ReceivedPrefix::empty(model.segment_width);
            for seg in 0..keep {
                prefix.push_segment(latent.segment(seg));
            }
            prefixes.push(prefix);
        }
        let reconstructed = reconstruct_prefixes(model, reconstructor, &prefixes)?;
        let mse = video_mse(frames, &reconstructed)?;
        points.push(DropPoint {
            k_dropped: k,
            mse_framesum: mse,
            mse_perpixel: per_pixel_mse(mse, model.frame_dims()),
        });
    }
    Ok(points)
}

fn reconstruct_prefixes(
    model: &AutoencoderModel,
    reconstructor: Reconstructor<'_>,
    prefixes: &[ReceivedPrefix],
) -> Result<Vec<Frame>, MetricsError> {
    use crate::predictor::TemporalFiller;
    use crate::progressive::{decode, zero_pad};
    let mut out = Vec::with_capacity(prefixes.len());
    match reconstructor {
        Reconstructor::ZeroFill => {
            for prefix in prefixes {
                let padded = zero_pad(prefix, model.segment_count, model.segment_width)?;
                out.push(decode(model, &padded)?);
            }
        }
        Reconstructor::Temporal(predictor) => {
            let mut filler = TemporalFiller::new(predictor);
            for prefix in prefixes {
                let filled = filler.fill(prefix)?;
                out.push(decode(model, &filled)?);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Experiment driver

#[derive(Debug, Clone, serde::Serialize)]
pub struct VideoReport {
    pub video_id: String,
    pub method: String,
    /// Mean segments dropped per frame (the forced k in sweep rows).
    pub k_dropped: f64,
    /// Absent when nothing was delivered (monolithic 0% rows).
    pub mse_framesum: Option<f64>,
    pub mse_perpixel: Option<f64>,
    pub avg_bytes_per_frame: f64,
    pub elapsed_s: f64,
    pub percent_transmitted: f64,
    pub drops_histogram: Vec<u64>,
    pub seed: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RunError {
    pub video_id: String,
    pub method: String,
    pub message: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<VideoReport>,
    pub errors: Vec<RunError>,
}

pub const CSV_HEADER: &str =
    "video_id,method,k_dropped,mse_framesum,mse_perpixel,avg_bytes_per_frame,elapsed_s,percent,seed";

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn reports_to_csv(rows: &[VideoReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.video_id,
            r.method,
            r.k_dropped,
            csv_opt(r.mse_framesum),
            csv_opt(r.mse_perpixel),
            r.avg_bytes_per_frame,
            r.elapsed_s,
            r.percent_transmitted,
            r.seed
        ));
    }
    out
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        reports_to_csv(&self.rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn any_errors(&self) -> bool {
        !self.errors.is_empty()
    }
}

/// Everything an experiment needs beyond the videos themselves. Models are
/// trained elsewhere; the run itself uses no randomness, so a rerun with the
/// same inputs is byte-identical.
#[derive(Debug, Clone)]
pub struct ExperimentSetup<'a> {
    pub autoencoder: &'a AutoencoderModel,
    pub predictor: Option<&'a PredictorModel>,
    pub channel: ChannelConfig,
    pub frame_budget_ms: f64,
    pub ack: AckGranularity,
    /// Quantizer steps for the per-video bitrate ladder.
    pub ladder_steps: Vec<u16>,
    pub gop: u16,
    pub fps: f64,
    /// Trailing frames used for the throughput estimate feeding quality
    /// selection.
    pub throughput_window: usize,
    /// Fraction of the estimate the selected level may consume.
    pub safety: f64,
    pub seed: u64,
}

impl<'a> ExperimentSetup<'a> {
    pub fn new(autoencoder: &'a AutoencoderModel, channel: ChannelConfig) -> Self {
        ExperimentSetup {
            autoencoder,
            predictor: None,
            channel,
            frame_budget_ms: 6.0,
            ack: AckGranularity::PerFeature,
            ladder_steps: crate::monolithic::DEFAULT_LADDER_STEPS.to_vec(),
            gop: crate::monolithic::DEFAULT_GOP,
            fps: 25.0,
            throughput_window: 30,
            safety: 1.0,
            seed: 0,
        }
    }
}

/// Run every method on every video. Per-video failures land in `errors`
/// without stopping the sweep; rows come back sorted by (video_id, method).
pub fn run_experiment(
    setup: &ExperimentSetup<'_>,
    videos: &[(String, Vec<Frame>)],
) -> ExperimentReport {
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (video_id, frames) in videos {
        let mut record = |method: String, result: Result<VideoReport, MetricsError>| match result {
            Ok(row) => rows.push(row),
            Err(e) => errors.push(RunError {
                video_id: video_id.clone(),
                method,
                message: e.to_string(),
            }),
        };

        let pnc = run_progressive_method(setup, video_id, frames, Reconstructor::ZeroFill, "pnc");
        // The monolithic method picks its ladder level from the observed
        // progressive throughput (0 when that run failed → lowest level).
        let estimate = pnc
            .as_ref()
            .map(|(_, log)| estimate_throughput(log, setup.throughput_window))
            .unwrap_or(0.0);
        record("pnc".into(), pnc.map(|(row, _)| row));

        // No predictor configured → the framecorr method simply isn't run.
        if let Some(p) = setup.predictor {
            let framecorr = run_progressive_method(
                setup,
                video_id,
                frames,
                Reconstructor::Temporal(p),
                "framecorr",
            );
            record("framecorr".into(), framecorr.map(|(row, _)| row));
        }

        record(
            "monolithic".into(),
            run_monolithic_method(setup, video_id, frames, estimate),
        );
    }
    rows.sort_by(|a, b| (&a.video_id, &a.method).cmp(&(&b.video_id, &b.method)));
    errors.sort_by(|a, b| (&a.video_id, &a.method).cmp(&(&b.video_id, &b.method)));
    ExperimentReport { rows, errors }
}

fn run_progressive_method(
    setup: &ExperimentSetup<'_>,
    video_id: &str,
    frames: &[Frame],
    reconstructor: Reconstructor<'_>,
    method: &str,
) -> Result<(VideoReport, TransmissionLog), MetricsError> {
    if frames.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let out = send_progressive(
        frames,
        setup.autoencoder,
        reconstructor,
        setup.channel,
        setup.frame_budget_ms,
        setup.ack,
    )?;
    let b = setup.autoencoder.segment_count;
    let mse = video_mse(frames, &out.reconstructed)?;
    let n = frames.len() as f64;
    let dropped_total: usize = out
        .log
        .frames
        .iter()
        .map(|f| b.saturating_sub(f.segments_delivered))
        .sum();
    let row = VideoReport {
        video_id: video_id.to_string(),
        method: method.to_string(),
        k_dropped: dropped_total as f64 / n,
        mse_framesum: Some(mse),
        mse_perpixel: Some(per_pixel_mse(mse, setup.autoencoder.frame_dims())),
        avg_bytes_per_frame: out.log.total_bytes as f64 / n,
        elapsed_s: out.log.total_elapsed_us as f64 / 1_000_000.0,
        percent_transmitted: percent_progressive(&out.log)?,
        drops_histogram: drops_histogram(&out.log, b),
        seed: setup.seed,
    };
    Ok((row, out.log))
}

fn run_monolithic_method(
    setup: &ExperimentSetup<'_>,
    video_id: &str,
    frames: &[Frame],
    throughput_estimate_bps: f64,
) -> Result<VideoReport, MetricsError> {
    if frames.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let ladder = build_ladder(frames, &setup.ladder_steps, setup.gop, setup.fps)?;
    let level = select_quality(&ladder, throughput_estimate_bps, setup.safety);
    let bitstream = encode_monolithic(frames, level.q, setup.gop)?;
    let video_budget_ms = setup.frame_budget_ms * frames.len() as f64;
    let outcome = send_monolithic(&bitstream, setup.channel, video_budget_ms)?;

    let b = setup.autoencoder.segment_count;
    let n = frames.len() as f64;
    let (mse, histogram, k_dropped, elapsed_s) = match &outcome.delivered {
        Some(bytes) => {
            let decoded = decode_monolithic(bytes)?;
            let mse = video_mse(frames, &decoded.frames)?;
            let mut hist = vec![0u64; b + 1];
            hist[0] = frames.len() as u64;
            let elapsed = outcome
                .log
                .last_delivery
                .map(|d| d as f64 / 1_000_000.0)
                .unwrap_or(0.0);
            (Some(mse), hist, 0.0, elapsed)
        }
        None => {
            let mut hist = vec![0u64; b + 1];
            hist[b] = frames.len() as u64;
            (None, hist, b as f64, video_budget_ms / 1_000.0)
        }
    };
    Ok(VideoReport {
        video_id: video_id.to_string(),
        method: format!("monolithic@{}", level.level_id),
        k_dropped,
        mse_framesum: mse,
        mse_perpixel: mse.map(|m| per_pixel_mse(m, setup.autoencoder.frame_dims())),
        avg_bytes_per_frame: outcome.log.bytes_sent as f64 / n,
        elapsed_s,
        percent_transmitted: percent_monolithic(outcome.log.within_budget),
        drops_histogram: histogram,
        seed: setup.seed,
    })
}

/// Sweep points as CSV rows, for the Tables 3–4 style artifact.
pub fn sweep_to_reports(
    video_id: &str,
    method: &str,
    points: &[DropPoint],
    model: &AutoencoderModel,
    seed: u64,
) -> Vec<VideoReport> {
    let b = model.segment_count;
    points
        .iter()
        .map(|p| {
            let mut hist = vec![0u64; b + 1];
            hist[p.k_dropped] = 1;
            VideoReport {
                video_id: video_id.to_string(),
                method: method.to_string(),
                k_dropped: p.k_dropped as f64,
                mse_framesum: Some(p.mse_framesum),
                mse_perpixel: Some(p.mse_perpixel),
                avg_bytes_per_frame: progressive_frame_wire_bytes(
                    b - p.k_dropped,
                    model.segment_width,
                ) as f64,
                elapsed_s: 0.0,
                percent_transmitted: 100.0,
                drops_histogram: hist,
                seed,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Preset;
    use crate::frame_io::{synth_sequence, SynthKind};
    use crate::nn::TrainConfig;
    use crate::progressive::{decode, train_autoencoder, zero_pad, TaildropDistribution};
    use crate::transport::FrameLog;
    use proptest::prelude::*;

    fn frame(w: usize, h: usize, pixels: Vec<f64>) -> Frame {
        Frame::new(w, h, 1, pixels)
    }

    #[test]
    fn identical_sequences_have_zero_mse() {
        let a = vec![frame(2, 2, vec![0.1, 0.2, 0.3, 0.4])];
        assert_eq!(video_mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn single_pixel_full_swing_gives_one() {
        let a = vec![frame(1, 1, vec![0.0])];
        let b = vec![frame(1, 1, vec![1.0])];
        assert_eq!(video_mse(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn two_frame_hand_example_gives_three_quarters() {
        // Frame 1 diffs (0.5, 0.5) → sum 0.5; frame 2 diffs (1, 0) → sum 1.
        let a = vec![frame(2, 1, vec![0.5, 0.5]), frame(2, 1, vec![1.0, 0.5])];
        let b = vec![frame(2, 1, vec![0.0, 0.0]), frame(2, 1, vec![0.0, 0.5])];
        assert_eq!(video_mse(&a, &b).unwrap(), 0.75);
        assert_eq!(per_pixel_mse(0.75, (2, 1, 1)), 0.375);
    }

    #[test]
    fn mse_rejects_mismatches() {
        let a = vec![frame(1, 1, vec![0.0])];
        let b = vec![frame(1, 1, vec![0.0]), frame(1, 1, vec![0.0])];
        assert!(matches!(
            video_mse(&a, &b),
            Err(MetricsError::CountMismatch { .. })
        ));
        let c = vec![frame(2, 1, vec![0.0, 0.0])];
        assert!(matches!(
            video_mse(&a, &c),
            Err(MetricsError::DimMismatch { index: 0 })
        ));
        assert!(matches!(video_mse(&[], &[]), Err(MetricsError::EmptyInput)));
    }

    fn fake_log(delivered: &[usize], b: usize, s: usize) -> TransmissionLog {
        let frames = delivered
            .iter()
            .enumerate()
            .map(|(i, &d)| FrameLog {
                frame_index: i,
                segments_sent: d,
                segments_delivered: d,
                bytes_sent: progressive_frame_wire_bytes(d, s),
                bytes_delivered: progressive_frame_wire_bytes(d, s),
                send_start: i as u64 * 1000,
                send_end: i as u64 * 1000 + 500,
                deadline_hit: d < b,
            })
            .collect::<Vec<_>>();
        let total_bytes = frames.iter().map(|f| f.bytes_sent).sum();
        TransmissionLog {
            frames,
            total_bytes,
            total_elapsed_us: delivered.len() as u64 * 1000,
            acks_received: delivered.iter().sum::<usize>() as u64,
        }
    }

    #[test]
    fn percent_rules() {
        assert_eq!(percent_monolithic(true), 100.0);
        assert_eq!(percent_monolithic(false), 0.0);
        // Every frame partially delivered → 100% with histogram mass at k ≥ 1.
        let log = fake_log(&[1, 2, 1, 3], 4, 1);
        assert_eq!(percent_progressive(&log).unwrap(), 100.0);
        let hist = drops_histogram(&log, 4);
        assert_eq!(hist, vec![0, 1, 1, 2, 0]);
        assert!(hist[1..].iter().sum::<u64>() > 0);
        // Half the frames got nothing.
        let log = fake_log(&[0, 2, 0, 4], 4, 1);
        assert_eq!(percent_progressive(&log).unwrap(), 50.0);
        assert!(percent_progressive(&fake_log(&[], 4, 1)).is_err());
    }

    #[test]
    fn drop_sweep_k0_equals_full_data_mse_exactly() {
        let seq = synth_sequence(SynthKind::MovingSquare, 12, (8, 8, 1), 3).unwrap();
        let model =
            AutoencoderModel::new_seeded((8, 8, 1), 4, 2, TaildropDistribution::default(), 11);
        let points = drop_sweep(&model, &seq.frames, Reconstructor::ZeroFill, &[0]).unwrap();
        let full: Vec<Frame> = seq
            .frames
            .iter()
            .map(|f| decode(&model, &encode(&model, f).unwrap()).unwrap())
            .collect();
        let reference = video_mse(&seq.frames, &full).unwrap();
        assert_eq!(points[0].mse_framesum, reference);
    }

    #[test]
    fn drop_sweep_extreme_k_is_deterministic_and_matches_zero_fill_decode() {
        let seq = synth_sequence(SynthKind::MovingSquare, 6, (8, 8, 1), 4).unwrap();
        let model =
            AutoencoderModel::new_seeded((8, 8, 1), 4, 1, TaildropDistribution::default(), 12);
        let a = drop_sweep(&model, &seq.frames, Reconstructor::ZeroFill, &[3]).unwrap();
        let b = drop_sweep(&model, &seq.frames, Reconstructor::ZeroFill, &[3]).unwrap();
        assert_eq!(a[0].mse_framesum.to_bits(), b[0].mse_framesum.to_bits());
        // Independent reconstruction: first segment kept, rest zeros.
        let recon: Vec<Frame> = seq
            .frames
            .iter()
            .map(|f| {
                let latent = encode(&model, f).unwrap();
                let mut prefix = ReceivedPrefix::empty(1);
                prefix.push_segment(latent.segment(0));
                decode(&model, &zero_pad(&prefix, 4, 1).unwrap()).unwrap()
            })
            .collect();
        assert_eq!(
            a[0].mse_framesum,
            video_mse(&seq.frames, &recon).unwrap()
        );
    }

    #[test]
    fn drop_sweep_rejects_k_equal_to_b() {
        let seq = synth_sequence(SynthKind::MovingSquare, 4, (8, 8, 1), 5).unwrap();
        let model =
            AutoencoderModel::new_seeded((8, 8, 1), 4, 1, TaildropDistribution::default(), 13);
        assert!(matches!(
            drop_sweep(&model, &seq.frames, Reconstructor::ZeroFill, &[0, 4]),
            Err(MetricsError::KTooLarge { k: 4, b: 4 })
        ));
    }

    #[test]
    fn trained_model_degrades_as_more_segments_drop() {
        let train = synth_sequence(SynthKind::MovingSquare, 128, (16, 16, 1), 21).unwrap();
        let val = synth_sequence(SynthKind::MovingSquare, 32, (16, 16, 1), 22).unwrap();
        let config = TrainConfig {
            epochs: 15,
            learning_rate: 0.2,
            momentum: 0.9,
            batch_size: 16,
            seed: 3,
        };
        let (model, _) = train_autoencoder(
            std::slice::from_ref(&train),
            std::slice::from_ref(&val),
            10,
            1,
            &config,
            TaildropDistribution::default(),
        )
        .unwrap();
        let test = synth_sequence(SynthKind::MovingSquare, 40, (16, 16, 1), 23).unwrap();
        let points =
            drop_sweep(&model, &test.frames, Reconstructor::ZeroFill, &[0, 9]).unwrap();
        assert!(
            points[1].mse_framesum >= points[0].mse_framesum,
            "dropping 9 of 10 segments should not beat full data: {} vs {}",
            points[1].mse_framesum,
            points[0].mse_framesum
        );
    }

    fn experiment_fixture() -> (AutoencoderModel, PredictorModel, Vec<(String, Vec<Frame>)>) {
        let model =
            AutoencoderModel::new_seeded((16, 16, 1), 4, 1, TaildropDistribution::default(), 31);
        let predictor = PredictorModel::new_seeded(1, 4, 1, 32);
        let videos = vec![
            (
                "clip-a".to_string(),
                synth_sequence(SynthKind::MovingSquare, 30, (16, 16, 1), 41)
                    .unwrap()
                    .frames,
            ),
            (
                "clip-b".to_string(),
                synth_sequence(SynthKind::MovingSquare, 30, (16, 16, 1), 42)
                    .unwrap()
                    .frames,
            ),
        ];
        (model, predictor, videos)
    }

    #[test]
    fn experiment_emits_one_row_per_video_and_method() {
        let (model, predictor, videos) = experiment_fixture();
        let mut setup = ExperimentSetup::new(&model, Preset::Low.config());
        setup.predictor = Some(&predictor);
        setup.frame_budget_ms = 50.0;
        setup.ladder_steps = vec![2, 8, 32];
        let report = run_experiment(&setup, &videos);
        assert_eq!(report.errors.len(), 0, "errors: {:?}", report.errors);
        assert_eq!(report.rows.len(), 6);
        let methods: Vec<&str> = report
            .rows
            .iter()
            .filter(|r| r.video_id == "clip-a")
            .map(|r| r.method.as_str())
            .collect();
        assert_eq!(methods.len(), 3);
        assert!(methods.contains(&"pnc"));
        assert!(methods.contains(&"framecorr"));
        assert!(methods.iter().any(|m| m.starts_with("monolithic@")));
        for row in &report.rows {
            if row.method.starts_with("monolithic@") {
                assert!(row.percent_transmitted == 0.0 || row.percent_transmitted == 100.0);
            }
        }
        let csv = report.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn experiment_is_byte_deterministic() {
        let (model, predictor, videos) = experiment_fixture();
        let mut setup = ExperimentSetup::new(&model, Preset::Medium.config());
        setup.predictor = Some(&predictor);
        setup.frame_budget_ms = 10.0;
        setup.ladder_steps = vec![2, 8, 32];
        let a = run_experiment(&setup, &videos);
        let b = run_experiment(&setup, &videos);
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn per_video_errors_do_not_abort_the_sweep() {
        let (model, predictor, mut videos) = experiment_fixture();
        // An empty video fails every method; the others must be unaffected.
        videos.insert(0, ("empty".to_string(), Vec::new()));
        let mut setup = ExperimentSetup::new(&model, Preset::Low.config());
        setup.predictor = Some(&predictor);
        setup.frame_budget_ms = 50.0;
        setup.ladder_steps = vec![2, 8, 32];
        let report = run_experiment(&setup, &videos);
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.errors.len(), 3);
        assert!(report.errors.iter().all(|e| e.video_id == "empty"));
        assert!(report.any_errors());
    }

    #[test]
    fn missing_predictor_skips_framecorr_without_errors() {
        let (model, _, videos) = experiment_fixture();
        let mut setup = ExperimentSetup::new(&model, Preset::Low.config());
        setup.frame_budget_ms = 50.0;
        setup.ladder_steps = vec![2, 8, 32];
        let report = run_experiment(&setup, &videos);
        assert_eq!(report.rows.len(), 4);
        assert!(report.errors.is_empty());
        assert!(report.rows.iter().all(|r| r.method != "framecorr"));
    }

    #[test]
    fn sweep_rows_fit_the_csv_schema() {
        let model =
            AutoencoderModel::new_seeded((8, 8, 1), 4, 2, TaildropDistribution::default(), 17);
        let seq = synth_sequence(SynthKind::MovingSquare, 6, (8, 8, 1), 18).unwrap();
        let points =
            drop_sweep(&model, &seq.frames, Reconstructor::ZeroFill, &[0, 1, 2, 3]).unwrap();
        let rows = sweep_to_reports("clip-x", "pnc", &points, &model, 7);
        assert_eq!(rows.len(), 4);
        // Byte cost shrinks as more segments drop.
        assert!(rows
            .windows(2)
            .all(|w| w[0].avg_bytes_per_frame > w[1].avg_bytes_per_frame));
        let csv = reports_to_csv(&rows);
        assert_eq!(csv.lines().count(), 5);
        for line in csv.lines().skip(1) {
            assert_eq!(line.split(',').count(), 9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn mse_matches_scalar_loop_oracle(
            w in 1usize..5,
            h in 1usize..5,
            n in 1usize..4,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut a = Vec::new();
            let mut b = Vec::new();
            for _ in 0..n {
                a.push(frame(w, h, (0..w * h).map(|_| rng.gen::<f64>()).collect()));
                b.push(frame(w, h, (0..w * h).map(|_| rng.gen::<f64>()).collect()));
            }
            // Independent scalar-loop oracle, same summation order.
            let mut total = 0.0;
            for i in 0..n {
                for p in 0..w * h {
                    let d = a[i].pixels[p] - b[i].pixels[p];
                    total += d * d;
                }
            }
            let oracle = total / n as f64;
            prop_assert_eq!(video_mse(&a, &b).unwrap(), oracle);
        }

        #[test]
        fn histogram_mass_equals_frame_count(
            delivered in proptest::collection::vec(0usize..5, 1..20),
        ) {
            let log = fake_log(&delivered, 4, 1);
            let hist = drops_histogram(&log, 4);
            prop_assert_eq!(hist.iter().sum::<u64>(), delivered.len() as u64);
        }
    }
}
