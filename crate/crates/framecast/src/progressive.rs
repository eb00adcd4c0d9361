//! Progressive latent codec: a frame is encoded into `B` importance-ordered
//! segments of `S` scalars each, and any prefix of those segments can be
//! zero-padded and decoded into a usable frame.
//!
//! Training applies stochastic taildrop: each sample keeps a random prefix of
//! the latent and zeroes the rest before decoding, so early segments learn to
//! carry the bulk of the signal. The latent lives in [0,1] (sigmoid), which
//! makes zero-padding a meaningful low-signal value rather than an arbitrary
//! code point.

use crate::frame_io::Frame;
use crate::nn::{
    self, backward, forward, mse_loss, Activation, FitReport, Gradients, Mlp, NnError,
    SgdMomentum, TrainConfig,
};
use crate::frame_io::FrameSequence;
use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use thiserror::Error;

pub const MODEL_MAGIC: &[u8; 4] = b"FCAE";
const MODEL_VERSION: u16 = 1;

/// Hidden width of both the encoder and decoder MLPs.
const HIDDEN: usize = 256;

#[derive(Debug, Error)]
pub enum ProgressiveError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("frame is {got:?} but the model expects {expected:?}")]
    FrameMismatch {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },
    #[error("feature vector has {got} segments of width {got_width}, expected {expected} of {expected_width}")]
    LatentMismatch {
        expected: usize,
        expected_width: usize,
        got: usize,
        got_width: usize,
    },
    #[error("prefix of {m} segments exceeds segment count {b}")]
    PrefixTooLong { m: usize, b: usize },
    #[error("model file: {0}")]
    Format(String),
    #[error("training set is empty")]
    NoTrainingData,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `B` ordered segments of `S` scalars, stored flat in transmission order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    segment_width: usize,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, segment_width: usize) -> Result<Self, ProgressiveError> {
        if segment_width == 0 || values.len() % segment_width != 0 || values.is_empty() {
            return Err(ProgressiveError::LatentMismatch {
                expected: 0,
                expected_width: segment_width,
                got: values.len(),
                got_width: segment_width,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ProgressiveError::Nn(NnError::NonFinite("feature vector")));
        }
        Ok(FeatureVector {
            values,
            segment_width,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.values.len() / self.segment_width
    }

    pub fn segment_width(&self) -> usize {
        self.segment_width
    }

    pub fn segment(&self, i: usize) -> &[f64] {
        &self.values[i * self.segment_width..(i + 1) * self.segment_width]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The first `m` segments, as received under pure tail loss.
    pub fn prefix(&self, m: usize) -> Result<ReceivedPrefix, ProgressiveError> {
        if m > self.segment_count() {
            return Err(ProgressiveError::PrefixTooLong {
                m,
                b: self.segment_count(),
            });
        }
        Ok(ReceivedPrefix {
            data: self.values[..m * self.segment_width].to_vec(),
            segment_width: self.segment_width,
        })
    }
}

/// The first `m` segments of a feature vector: tail loss only, never holes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedPrefix {
    data: Vec<f64>,
    segment_width: usize,
}

impl ReceivedPrefix {
    pub fn new(data: Vec<f64>, segment_width: usize) -> Result<Self, ProgressiveError> {
        if segment_width == 0 || data.len() % segment_width != 0 {
            return Err(ProgressiveError::LatentMismatch {
                expected: 0,
                expected_width: segment_width,
                got: data.len(),
                got_width: segment_width,
            });
        }
        Ok(ReceivedPrefix {
            data,
            segment_width,
        })
    }

    pub fn empty(segment_width: usize) -> Self {
        ReceivedPrefix {
            data: Vec::new(),
            segment_width,
        }
    }

    pub fn m(&self) -> usize {
        self.data.len() / self.segment_width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn push_segment(&mut self, segment: &[f64]) {
        debug_assert_eq!(segment.len(), self.segment_width);
        self.data.extend_from_slice(segment);
    }
}

/// Fill the dropped tail with zeros: the first `m` segments verbatim, the
/// rest all-zero.
pub fn zero_pad(
    prefix: &ReceivedPrefix,
    segment_count: usize,
    segment_width: usize,
) -> Result<FeatureVector, ProgressiveError> {
    if prefix.segment_width != segment_width || prefix.m() > segment_count {
        return Err(ProgressiveError::PrefixTooLong {
            m: prefix.m(),
            b: segment_count,
        });
    }
    let mut values = vec![0.0; segment_count * segment_width];
    values[..prefix.data.len()].copy_from_slice(&prefix.data);
    FeatureVector::new(values, segment_width)
}

/// Keep-length distribution for taildrop training: keep everything with
/// probability `keep_all_probability`, otherwise uniform on {1..B-1}.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TaildropDistribution {
    pub keep_all_probability: f64,
}

impl Default for TaildropDistribution {
    fn default() -> Self {
        TaildropDistribution {
            keep_all_probability: 0.5,
        }
    }
}

impl TaildropDistribution {
    pub fn sample_keep_length(&self, segment_count: usize, rng: &mut ChaCha8Rng) -> usize {
        debug_assert!((0.0..=1.0).contains(&self.keep_all_probability));
        debug_assert!(segment_count >= 1);
        if segment_count == 1 || rng.gen::<f64>() < self.keep_all_probability {
            segment_count
        } else {
            rng.gen_range(1..segment_count)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    pub encoder: Mlp,
    pub decoder: Mlp,
    pub segment_count: usize,
    pub segment_width: usize,
    pub frame_width: usize,
    pub frame_height: usize,
    pub frame_channels: usize,
    pub taildrop: TaildropDistribution,
}

impl AutoencoderModel {
    pub fn new_seeded(
        frame_dims: (usize, usize, usize),
        segment_count: usize,
        segment_width: usize,
        taildrop: TaildropDistribution,
        seed: u64,
    ) -> Self {
        let (w, h, c) = frame_dims;
        let frame_dim = w * h * c;
        let latent = segment_count * segment_width;
        let encoder = Mlp::seeded(
            &[frame_dim, HIDDEN, latent],
            &[Activation::Relu, Activation::Sigmoid],
            seed,
        );
        let decoder = Mlp::seeded(
            &[latent, HIDDEN, frame_dim],
            &[Activation::Relu, Activation::Sigmoid],
            seed.wrapping_add(0x5eed),
        );
        AutoencoderModel {
            encoder,
            decoder,
            segment_count,
            segment_width,
            frame_width: w,
            frame_height: h,
            frame_channels: c,
            taildrop,
        }
    }

    pub fn frame_dims(&self) -> (usize, usize, usize) {
        (self.frame_width, self.frame_height, self.frame_channels)
    }

    pub fn latent_dim(&self) -> usize {
        self.segment_count * self.segment_width
    }

    // -- persistence --------------------------------------------------------
    // Layout: "FCAE", u16 version, u32 LE B, S, width, height, channels,
    // f64 LE keep_all_probability, then the encoder and decoder as embedded
    // network checkpoints.

    pub fn to_bytes(&self) -> Result<Vec<u8>, ProgressiveError> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        for v in [
            self.segment_count,
            self.segment_width,
            self.frame_width,
            self.frame_height,
            self.frame_channels,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.taildrop.keep_all_probability.to_le_bytes());
        out.extend_from_slice(&nn::write_mlp(&self.encoder)?);
        out.extend_from_slice(&nn::write_mlp(&self.decoder)?);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProgressiveError> {
        let fail = |msg: &str| ProgressiveError::Format(msg.to_string());
        if bytes.len() < 34 {
            return Err(fail("too short for a model header"));
        }
        if &bytes[..4] != MODEL_MAGIC {
            return Err(fail("bad magic, expected FCAE"));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != MODEL_VERSION {
            return Err(fail("unsupported model version"));
        }
        let mut fields = [0u32; 5];
        for (i, f) in fields.iter_mut().enumerate() {
            *f = u32::from_le_bytes(bytes[6 + 4 * i..10 + 4 * i].try_into().unwrap());
        }
        let [b, s, w, h, c] = fields.map(|v| v as usize);
        if b == 0 || s == 0 || w == 0 || h == 0 || !(c == 1 || c == 3) {
            return Err(fail("degenerate model dimensions"));
        }
        let p = f64::from_le_bytes(bytes[26..34].try_into().unwrap());
        if !(0.0..=1.0).contains(&p) {
            return Err(fail("keep_all_probability outside [0,1]"));
        }
        let mut cur = nn::checkpoint_cursor(&bytes[34..]);
        let encoder = nn::read_embedded_mlp(&mut cur)?;
        let decoder = nn::read_embedded_mlp(&mut cur)?;
        if cur.remaining() != 0 {
            return Err(fail("trailing bytes after decoder"));
        }
        let frame_dim = w
            .checked_mul(h)
            .and_then(|v| v.checked_mul(c))
            .ok_or_else(|| fail("frame dims overflow"))?;
        let latent = b
            .checked_mul(s)
            .ok_or_else(|| fail("latent dims overflow"))?;
        if encoder.in_dim() != Some(frame_dim)
            || encoder.out_dim() != Some(latent)
            || decoder.in_dim() != Some(latent)
            || decoder.out_dim() != Some(frame_dim)
        {
            return Err(fail("network shapes disagree with the header"));
        }
        Ok(AutoencoderModel {
            encoder,
            decoder,
            segment_count: b,
            segment_width: s,
            frame_width: w,
            frame_height: h,
            frame_channels: c,
            taildrop: TaildropDistribution {
                keep_all_probability: p,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ProgressiveError> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ProgressiveError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

pub fn encode(model: &AutoencoderModel, frame: &Frame) -> Result<FeatureVector, ProgressiveError> {
    if frame.dims() != model.frame_dims() {
        return Err(ProgressiveError::FrameMismatch {
            expected: model.frame_dims(),
            got: frame.dims(),
        });
    }
    let (latent, _) = forward(&model.encoder, &frame.pixels)?;
    FeatureVector::new(latent, model.segment_width)
}

pub fn decode(model: &AutoencoderModel, padded: &FeatureVector) -> Result<Frame, ProgressiveError> {
    if padded.segment_count() != model.segment_count
        || padded.segment_width() != model.segment_width
    {
        return Err(ProgressiveError::LatentMismatch {
            expected: model.segment_count,
            expected_width: model.segment_width,
            got: padded.segment_count(),
            got_width: padded.segment_width(),
        });
    }
    let (pixels, _) = forward(&model.decoder, padded.values())?;
    Ok(Frame::new(
        model.frame_width,
        model.frame_height,
        model.frame_channels,
        pixels,
    ))
}

/// Decode a tail-lossy prefix by zero-padding it first.
pub fn decode_prefix(
    model: &AutoencoderModel,
    prefix: &ReceivedPrefix,
) -> Result<Frame, ProgressiveError> {
    let padded = zero_pad(prefix, model.segment_count, model.segment_width)?;
    decode(model, &padded)
}

/// Zero every latent value in segments at or beyond `keep`.
fn mask_tail(latent: &mut [f64], keep: usize, segment_width: usize) {
    for v in &mut latent[keep * segment_width..] {
        *v = 0.0;
    }
}

/// Train the autoencoder with stochastic taildrop.
///
/// Each sample draws its own keep-length, zeroes the latent tail, decodes,
/// and backpropagates the frame MSE through the decoder and (masked) into
/// the encoder. Validation runs with the full latent, and the returned model
/// is the strictly-best validation snapshot.
pub fn train_autoencoder(
    train: &[FrameSequence],
    val: &[FrameSequence],
    segment_count: usize,
    segment_width: usize,
    config: &TrainConfig,
    taildrop: TaildropDistribution,
) -> Result<(AutoencoderModel, FitReport), ProgressiveError> {
    config.validate()?;
    let train_frames: Vec<&Frame> = train.iter().flat_map(|s| &s.frames).collect();
    let val_frames: Vec<&Frame> = val.iter().flat_map(|s| &s.frames).collect();
    if train_frames.is_empty() || val_frames.is_empty() {
        return Err(ProgressiveError::NoTrainingData);
    }
    let dims = train_frames[0].dims();
    for f in train_frames.iter().chain(&val_frames) {
        if f.dims() != dims {
            return Err(ProgressiveError::FrameMismatch {
                expected: dims,
                got: f.dims(),
            });
        }
    }

    let mut model =
        AutoencoderModel::new_seeded(dims, segment_count, segment_width, taildrop, config.seed);
    let mut enc_opt = SgdMomentum::new(&model.encoder, config.learning_rate, config.momentum);
    let mut dec_opt = SgdMomentum::new(&model.decoder, config.learning_rate, config.momentum);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));

    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut train_curve = Vec::with_capacity(config.epochs);
    let mut val_curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..train_frames.len()).collect();
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut enc_grads = Gradients::zeros_like(&model.encoder);
            let mut dec_grads = Gradients::zeros_like(&model.decoder);
            for &idx in batch {
                let frame = train_frames[idx];
                let keep = model.taildrop.sample_keep_length(segment_count, &mut rng);
                let (mut latent, enc_trace) = forward(&model.encoder, &frame.pixels)?;
                mask_tail(&mut latent, keep, segment_width);
                let (recon, dec_trace) = forward(&model.decoder, &latent)?;
                let (loss, loss_grad) = mse_loss(&recon, &frame.pixels)?;
                if !loss.is_finite() {
                    return Err(ProgressiveError::Nn(NnError::NonFinite(
                        "autoencoder training loss",
                    )));
                }
                epoch_loss += loss;
                let (dg, mut latent_grad) = backward(&model.decoder, &dec_trace, &loss_grad)?;
                // Zeroed segments are constants, so no gradient flows through
                // them into the encoder.
                mask_tail(&mut latent_grad, keep, segment_width);
                let (eg, _) = backward(&model.encoder, &enc_trace, &latent_grad)?;
                dec_grads.accumulate(&dg);
                enc_grads.accumulate(&eg);
            }
            let scale = 1.0 / batch.len() as f64;
            enc_grads.scale(scale);
            dec_grads.scale(scale);
            enc_opt.step(&mut model.encoder, &enc_grads)?;
            dec_opt.step(&mut model.decoder, &dec_grads)?;
        }
        train_curve.push(epoch_loss / train_frames.len() as f64);

        let val = full_vector_loss(&model, &val_frames)?;
        val_curve.push(val);
        if val < best_val {
            best_val = val;
            best = model.clone();
            best_epoch = epoch;
        }
    }

    Ok((
        best,
        FitReport {
            train_loss: train_curve,
            val_loss: val_curve,
            best_epoch,
            best_val_loss: best_val,
        },
    ))
}

/// Mean per-pixel reconstruction MSE over frames, no taildrop.
pub fn full_vector_loss(
    model: &AutoencoderModel,
    frames: &[&Frame],
) -> Result<f64, ProgressiveError> {
    let mut total = 0.0;
    for frame in frames {
        let latent = encode(model, frame)?;
        let recon = decode(model, &latent)?;
        total += mse_loss(&recon.pixels, &frame.pixels)?.0;
    }
    Ok(total / frames.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame_io::{synth_sequence, SynthKind};

    fn tiny_model(seed: u64) -> AutoencoderModel {
        AutoencoderModel::new_seeded((4, 4, 1), 4, 2, TaildropDistribution::default(), seed)
    }

    fn zero_model() -> AutoencoderModel {
        let mut model = tiny_model(0);
        for layer in model.encoder.layers.iter_mut().chain(&mut model.decoder.layers) {
            layer.weights.iter_mut().for_each(|w| *w = 0.0);
            layer.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        model
    }

    fn sample_frame() -> Frame {
        Frame::new(4, 4, 1, (0..16).map(|i| i as f64 / 15.0).collect())
    }

    #[test]
    fn encode_is_deterministic_with_expected_shape() {
        let model = tiny_model(3);
        let frame = sample_frame();
        let a = encode(&model, &frame).unwrap();
        let b = encode(&model, &frame).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.segment_count(), 4);
        assert_eq!(a.segment(0).len(), 2);
    }

    #[test]
    fn encode_scalar_segments_default_shape() {
        let model =
            AutoencoderModel::new_seeded((4, 4, 1), 10, 1, TaildropDistribution::default(), 0);
        let latent = encode(&model, &sample_frame()).unwrap();
        assert_eq!(latent.segment_count(), 10);
        assert_eq!(latent.values().len(), 10);
    }

    #[test]
    fn zero_weight_encoder_emits_half() {
        let latent = encode(&zero_model(), &sample_frame()).unwrap();
        assert!(latent.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn zero_weight_decoder_emits_half_gray() {
        let padded = FeatureVector::new(vec![0.3; 8], 2).unwrap();
        let frame = decode(&zero_model(), &padded).unwrap();
        assert!(frame.pixels.iter().all(|&p| p == 0.5));
    }

    #[test]
    fn encode_rejects_wrong_frame_shape() {
        let model = tiny_model(0);
        let frame = Frame::constant(5, 4, 1, 0.5);
        assert!(matches!(
            encode(&model, &frame),
            Err(ProgressiveError::FrameMismatch { .. })
        ));
    }

    #[test]
    fn zero_pad_cases() {
        // Full prefix: identity.
        let full = ReceivedPrefix::new(vec![0.1, 0.2, 0.3], 1).unwrap();
        let padded = zero_pad(&full, 3, 1).unwrap();
        assert_eq!(padded.values(), &[0.1, 0.2, 0.3]);
        // Empty prefix: all zeros.
        let empty = ReceivedPrefix::empty(1);
        assert_eq!(zero_pad(&empty, 3, 1).unwrap().values(), &[0.0; 3]);
        // Partial prefix.
        let part = ReceivedPrefix::new(vec![0.2, 0.5], 1).unwrap();
        assert_eq!(
            zero_pad(&part, 4, 1).unwrap().values(),
            &[0.2, 0.5, 0.0, 0.0]
        );
        // Too long.
        assert!(zero_pad(&full, 2, 1).is_err());
    }

    #[test]
    fn full_prefix_decodes_bit_identically_to_direct_decode() {
        let model = tiny_model(9);
        let frame = sample_frame();
        let latent = encode(&model, &frame).unwrap();
        let direct = decode(&model, &latent).unwrap();
        let via_prefix =
            decode_prefix(&model, &latent.prefix(model.segment_count).unwrap()).unwrap();
        for (a, b) in direct.pixels.iter().zip(&via_prefix.pixels) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn masking_leaves_kept_segments_untouched() {
        let mut values: Vec<f64> = (1..=8).map(|i| i as f64 / 10.0).collect();
        let original = values.clone();
        mask_tail(&mut values, 2, 2);
        assert_eq!(&values[..4], &original[..4]);
        assert_eq!(&values[4..], &[0.0; 4]);
    }

    #[test]
    fn taildrop_degenerate_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let always = TaildropDistribution {
            keep_all_probability: 1.0,
        };
        assert!((0..100).all(|_| always.sample_keep_length(10, &mut rng) == 10));
        let never = TaildropDistribution {
            keep_all_probability: 0.0,
        };
        assert!((0..100).all(|_| never.sample_keep_length(2, &mut rng) == 1));
        // B=1 has a single support point.
        assert!((0..100).all(|_| never.sample_keep_length(1, &mut rng) == 1));
    }

    #[test]
    fn taildrop_default_monte_carlo() {
        // 100k draws at B=10: P(m=10) should land within ±0.01 of 0.5, and
        // every other keep-length should be hit.
        let dist = TaildropDistribution::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0usize; 11];
        let n = 100_000;
        for _ in 0..n {
            counts[dist.sample_keep_length(10, &mut rng)] += 1;
        }
        let p_full = counts[10] as f64 / n as f64;
        assert!((p_full - 0.5).abs() < 0.01, "P(m=10) = {p_full}");
        assert_eq!(counts[0], 0);
        for (m, &c) in counts.iter().enumerate().take(10).skip(1) {
            // Each partial length carries probability 0.5/9 ~ 0.0556.
            let p = c as f64 / n as f64;
            assert!((p - 0.5 / 9.0).abs() < 0.01, "P(m={m}) = {p}");
        }
    }

    #[test]
    fn decoded_pixels_always_in_unit_range() {
        // Arbitrary finite latents, including far outside [0,1].
        let model = tiny_model(5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let values: Vec<f64> = (0..8).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let padded = FeatureVector::new(values, 2).unwrap();
            let frame = decode(&model, &padded).unwrap();
            assert!(frame.pixels.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn model_round_trip_is_bit_exact() {
        let model = tiny_model(77);
        let bytes = model.to_bytes().unwrap();
        let back = AutoencoderModel::from_bytes(&bytes).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn model_parser_rejects_tampering() {
        let bytes = tiny_model(1).to_bytes().unwrap();
        assert!(AutoencoderModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(AutoencoderModel::from_bytes(&bad_magic).is_err());
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(AutoencoderModel::from_bytes(&trailing).is_err());
        // Header B inflated: network shapes no longer match.
        let mut bad_b = bytes;
        bad_b[6..10].copy_from_slice(&99u32.to_le_bytes());
        assert!(AutoencoderModel::from_bytes(&bad_b).is_err());
    }

    fn quick_config(epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            learning_rate: 0.5,
            momentum: 0.9,
            batch_size: 16,
            seed,
        }
    }

    #[test]
    fn training_descends_on_constant_frames() {
        let train = vec![synth_sequence(SynthKind::Constant, 32, (8, 8, 1), 3).unwrap()];
        let val = vec![synth_sequence(SynthKind::Constant, 8, (8, 8, 1), 3).unwrap()];
        let initial = AutoencoderModel::new_seeded(
            (8, 8, 1),
            4,
            1,
            TaildropDistribution::default(),
            1,
        );
        let val_frames: Vec<&Frame> = val[0].frames.iter().collect();
        let before = full_vector_loss(&initial, &val_frames).unwrap();
        let (_, report) = train_autoencoder(
            &train,
            &val,
            4,
            1,
            &quick_config(15, 1),
            TaildropDistribution::default(),
        )
        .unwrap();
        assert!(
            report.best_val_loss < before,
            "before {before}, after {}",
            report.best_val_loss
        );
    }

    #[test]
    fn trained_constant_model_reconstructs_below_two_percent() {
        let train = vec![synth_sequence(SynthKind::Constant, 64, (8, 8, 1), 11).unwrap()];
        let val = vec![synth_sequence(SynthKind::Constant, 8, (8, 8, 1), 11).unwrap()];
        let (model, _) = train_autoencoder(
            &train,
            &val,
            4,
            1,
            &quick_config(60, 4),
            TaildropDistribution::default(),
        )
        .unwrap();
        let frame = &val[0].frames[0];
        let recon = decode(&model, &encode(&model, frame).unwrap()).unwrap();
        let worst = recon
            .pixels
            .iter()
            .zip(&frame.pixels)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "worst per-pixel error {worst}");
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let run = || {
            let train = vec![synth_sequence(SynthKind::Constant, 16, (8, 8, 1), 2).unwrap()];
            let val = vec![synth_sequence(SynthKind::Constant, 4, (8, 8, 1), 2).unwrap()];
            let (model, _) = train_autoencoder(
                &train,
                &val,
                4,
                1,
                &quick_config(5, 9),
                TaildropDistribution::default(),
            )
            .unwrap();
            model.to_bytes().unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn trained_square_model_beats_constant_gray_baseline() {
        // Against a constant 0.5 prediction, every moving-square pixel (0.1
        // or 0.9 background/foreground) contributes 0.4^2, so the baseline
        // frame-summed MSE is exactly 0.16 * 256 = 40.96 at 16x16x1.
        let train = vec![synth_sequence(SynthKind::MovingSquare, 128, (16, 16, 1), 5).unwrap()];
        let val = vec![synth_sequence(SynthKind::MovingSquare, 32, (16, 16, 1), 6).unwrap()];
        let (model, _) = train_autoencoder(
            &train,
            &val,
            10,
            1,
            &TrainConfig {
                epochs: 15,
                learning_rate: 0.5,
                momentum: 0.9,
                batch_size: 16,
                seed: 3,
            },
            TaildropDistribution::default(),
        )
        .unwrap();
        let mut framesum = 0.0;
        for frame in &val[0].frames {
            let recon = decode(&model, &encode(&model, frame).unwrap()).unwrap();
            framesum += recon
                .pixels
                .iter()
                .zip(&frame.pixels)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        framesum /= val[0].frames.len() as f64;
        assert!(framesum < 40.96, "frame-summed MSE {framesum} vs baseline 40.96");
    }
}
