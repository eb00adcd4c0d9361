//! Temporal latent prediction: estimate the current frame's feature vector
//! from the previous K frames' filled vectors, and patch the missing tail of
//! a received prefix with the prediction.
//!
//! Received segments are never overridden: `fill_missing` copies the prefix
//! verbatim and only the dropped tail comes from the predictor.

use crate::nn::{
    self, fit_regression, forward, Activation, FitReport, Mlp, NnError, TrainConfig,
};
use crate::progressive::{zero_pad, FeatureVector, ReceivedPrefix, TaildropDistribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::path::Path;
use thiserror::Error;

pub const MODEL_MAGIC: &[u8; 4] = b"FCPR";
const MODEL_VERSION: u16 = 1;

/// Hidden width of the two-layer prediction net.
const HIDDEN: usize = 64;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Latent(#[from] crate::progressive::ProgressiveError),
    #[error("history holds {have} vectors but the predictor needs {need}")]
    HistoryTooShort { have: usize, need: usize },
    #[error("feature shapes disagree: {0}")]
    ShapeMismatch(String),
    #[error("every training sequence is shorter than K+1 = {0}")]
    AllSequencesTooShort(usize),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub k: usize,
    pub segment_count: usize,
    pub segment_width: usize,
    pub net: Mlp,
}

impl PredictorModel {
    pub fn new_seeded(k: usize, segment_count: usize, segment_width: usize, seed: u64) -> Self {
        assert!(k >= 1 && segment_count >= 1 && segment_width >= 1);
        let latent = segment_count * segment_width;
        let net = Mlp::seeded(
            &[k * latent, HIDDEN, latent],
            &[Activation::Relu, Activation::Sigmoid],
            seed,
        );
        PredictorModel {
            k,
            segment_count,
            segment_width,
            net,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.segment_count * self.segment_width
    }

    // Layout: "FCPR", u16 version, u32 LE K, B, S, then the net as an
    // embedded network checkpoint.

    pub fn to_bytes(&self) -> Result<Vec<u8>, PredictorError> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        for v in [self.k, self.segment_count, self.segment_width] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend_from_slice(&nn::write_mlp(&self.net)?);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PredictorError> {
        let fail = |msg: &str| PredictorError::Format(msg.to_string());
        if bytes.len() < 18 {
            return Err(fail("too short for a predictor header"));
        }
        if &bytes[..4] != MODEL_MAGIC {
            return Err(fail("bad magic, expected FCPR"));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != MODEL_VERSION {
            return Err(fail("unsupported model version"));
        }
        let k = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let b = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        let s = u32::from_le_bytes(bytes[14..18].try_into().unwrap()) as usize;
        if k == 0 || b == 0 || s == 0 {
            return Err(fail("degenerate predictor dimensions"));
        }
        let latent = b.checked_mul(s).ok_or_else(|| fail("latent dims overflow"))?;
        let input = k.checked_mul(latent).ok_or_else(|| fail("input dims overflow"))?;
        let mut cur = nn::checkpoint_cursor(&bytes[18..]);
        let net = nn::read_embedded_mlp(&mut cur)?;
        if cur.remaining() != 0 {
            return Err(fail("trailing bytes after network"));
        }
        if net.in_dim() != Some(input) || net.out_dim() != Some(latent) {
            return Err(fail("network shape disagrees with the header"));
        }
        Ok(PredictorModel {
            k,
            segment_count: b,
            segment_width: s,
            net,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), PredictorError> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PredictorError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// The last K filled vectors, oldest first.
#[derive(Debug, Clone, Default)]
pub struct History {
    items: VecDeque<FeatureVector>,
    k: usize,
}

impl History {
    pub fn new(k: usize) -> Self {
        History {
            items: VecDeque::with_capacity(k + 1),
            k,
        }
    }

    pub fn push(&mut self, filled: FeatureVector) {
        self.items.push_back(filled);
        while self.items.len() > self.k {
            self.items.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// True once K vectors have accumulated.
    pub fn is_warm(&self) -> bool {
        self.items.len() == self.k
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureVector> {
        self.items.iter()
    }
}

/// Predict c̃_i from exactly K history vectors.
pub fn predict(
    model: &PredictorModel,
    history: &History,
) -> Result<FeatureVector, PredictorError> {
    if history.len() != model.k {
        return Err(PredictorError::HistoryTooShort {
            have: history.len(),
            need: model.k,
        });
    }
    let mut input = Vec::with_capacity(model.k * model.latent_dim());
    for v in history.iter() {
        if v.segment_count() != model.segment_count || v.segment_width() != model.segment_width {
            return Err(PredictorError::ShapeMismatch(format!(
                "history vector {}x{} vs model {}x{}",
                v.segment_count(),
                v.segment_width(),
                model.segment_count,
                model.segment_width
            )));
        }
        input.extend_from_slice(v.values());
    }
    let (out, _) = forward(&model.net, &input)?;
    Ok(FeatureVector::new(out, model.segment_width)?)
}

/// Received segments verbatim, predicted values for the dropped tail.
pub fn fill_missing(
    prefix: &ReceivedPrefix,
    predicted: &FeatureVector,
) -> Result<FeatureVector, PredictorError> {
    let s = predicted.segment_width();
    if prefix.data().len() % s != 0 || prefix.m() * s != prefix.data().len() {
        return Err(PredictorError::ShapeMismatch(
            "prefix and prediction disagree on segment width".into(),
        ));
    }
    if prefix.data().len() > predicted.values().len() {
        return Err(PredictorError::ShapeMismatch(format!(
            "prefix of {} segments exceeds predicted {}",
            prefix.data().len() / s,
            predicted.segment_count()
        )));
    }
    let mut values = predicted.values().to_vec();
    values[..prefix.data().len()].copy_from_slice(prefix.data());
    Ok(FeatureVector::new(values, s)?)
}

/// Receiver-side streaming state: applies the temporal-fill policy with
/// zero-fill fallback while the history is still cold, and maintains the
/// history with each filled vector.
#[derive(Debug, Clone)]
pub struct TemporalFiller<'a> {
    model: &'a PredictorModel,
    history: History,
}

impl<'a> TemporalFiller<'a> {
    pub fn new(model: &'a PredictorModel) -> Self {
        TemporalFiller {
            model,
            history: History::new(model.k),
        }
    }

    pub fn fill(&mut self, prefix: &ReceivedPrefix) -> Result<FeatureVector, PredictorError> {
        let filled = if self.history.is_warm() {
            let predicted = predict(self.model, &self.history)?;
            fill_missing(prefix, &predicted)?
        } else {
            zero_pad(prefix, self.model.segment_count, self.model.segment_width)?
        };
        self.history.push(filled.clone());
        Ok(filled)
    }
}

/// Batch convenience over [`TemporalFiller`].
pub fn fill_sequence(
    model: &PredictorModel,
    prefixes: &[ReceivedPrefix],
) -> Result<Vec<FeatureVector>, PredictorError> {
    let mut filler = TemporalFiller::new(model);
    prefixes.iter().map(|p| filler.fill(p)).collect()
}

/// Train the predictor on latent sequences from a frozen encoder.
///
/// Each epoch, every position i >= K of every training sequence becomes a
/// sample: the previous K true vectors, each independently taildropped and
/// zero-padded, predict the true full c_i. Sequences shorter than K+1 are
/// skipped (their count is reported); it is an error if nothing remains.
/// Validation positions use full (undropped) history vectors.
pub fn train_predictor(
    train: &[Vec<FeatureVector>],
    val: &[Vec<FeatureVector>],
    k: usize,
    config: &TrainConfig,
    dist: TaildropDistribution,
) -> Result<(PredictorModel, FitReport, usize), PredictorError> {
    config.validate()?;
    let (b, s) = train
        .iter()
        .chain(val)
        .flat_map(|seq| seq.first())
        .map(|v| (v.segment_count(), v.segment_width()))
        .next()
        .ok_or(PredictorError::AllSequencesTooShort(k + 1))?;

    let usable: Vec<&Vec<FeatureVector>> =
        train.iter().filter(|seq| seq.len() >= k + 1).collect();
    let skipped = train.len() - usable.len();
    if usable.is_empty() {
        return Err(PredictorError::AllSequencesTooShort(k + 1));
    }

    let val_samples = positions(val, k)
        .map(|(seq, i)| {
            let mut input = Vec::with_capacity(k * b * s);
            for v in &seq[i - k..i] {
                input.extend_from_slice(v.values());
            }
            (input, seq[i].values().to_vec())
        })
        .collect::<Vec<_>>();
    if val_samples.is_empty() {
        return Err(PredictorError::AllSequencesTooShort(k + 1));
    }

    let model = PredictorModel::new_seeded(k, b, s, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let train_refs: Vec<&Vec<FeatureVector>> = usable;
    let fitted = fit_regression(
        model.net.clone(),
        config,
        &mut rng,
        |rng| {
            positions(&train_refs, k)
                .map(|(seq, i)| {
                    let mut input = Vec::with_capacity(k * b * s);
                    for v in &seq[i - k..i] {
                        let m = dist.sample_keep_length(b, rng);
                        let prefix = v.prefix(m).expect("keep length within range");
                        let padded = zero_pad(&prefix, b, s).expect("pad within range");
                        input.extend_from_slice(padded.values());
                    }
                    (input, seq[i].values().to_vec())
                })
                .collect()
        },
        &val_samples,
    )?;

    Ok((
        PredictorModel {
            k,
            segment_count: b,
            segment_width: s,
            net: fitted.net,
        },
        fitted.report,
        skipped,
    ))
}

/// All (sequence, position) pairs with a full K-history.
fn positions<'a, S>(seqs: &'a [S], k: usize) -> impl Iterator<Item = (&'a [FeatureVector], usize)>
where
    S: AsRef<[FeatureVector]> + 'a,
{
    seqs.iter().flat_map(move |seq| {
        let slice = seq.as_ref();
        (k..slice.len()).map(move |i| (slice, i))
    })
}
