//! Frame ingestion: PGM/PPM images, the FCRW raw sequence format, bilinear
//! resizing, manifest-driven dataset splits, and synthetic test sequences.
//!
//! All pixel values are normalized to [0,1] on load and stored row-major,
//! channel-last: `pixels[(y * width + x) * channels + ch]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use thiserror::Error;

/// Largest accepted width/height/channel product per frame. Parsers check
/// declared sizes against actual payload length before allocating, so forged
/// headers cannot force large allocations.
const MAX_FRAME_PIXELS: u64 = 1 << 26;

pub const FCRW_MAGIC: &[u8; 4] = b"FCRW";

#[derive(Debug, Error)]
pub enum FrameIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {msg}")]
    Decode { path: String, msg: String },
    #[error("directory {0} contains no decodable frames")]
    EmptyDirectory(String),
    #[error("mixed frame dimensions in {path}: {a} vs {b}")]
    MixedDimensions { path: String, a: String, b: String },
    #[error("zero dimension: {0}")]
    ZeroDimension(&'static str),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("manifest source_id {0:?} has no loaded sequence")]
    UnknownSourceId(String),
    #[error("split {0} is empty but training requires it")]
    EmptySplit(Split),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), width * height * channels);
        debug_assert!(pixels.iter().all(|&p| (0.0..=1.0).contains(&p)));
        Frame {
            width,
            height,
            channels,
            pixels,
        }
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Frame::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn pixel(&self, x: usize, y: usize, ch: usize) -> f64 {
        self.pixels[(y * self.width + x) * self.channels + ch]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    /// Quantize back to bytes, rounding half away from zero and clamping.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    pub label: Option<String>,
    pub source_id: String,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, source_id: impl Into<String>) -> Self {
        debug_assert!(!frames.is_empty());
        FrameSequence {
            frames,
            label: None,
            source_id: source_id.into(),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.frames[0].dims()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

// ---------------------------------------------------------------------------
// PGM / PPM (binary, maxval 255)

/// Decode a binary PGM ("P5", one channel) or PPM ("P6", three channels).
pub fn decode_pnm(bytes: &[u8], origin: &str) -> Result<Frame, FrameIoError> {
    let fail = |msg: String| FrameIoError::Decode {
        path: origin.to_string(),
        msg,
    };
    if bytes.len() < 2 {
        return Err(fail("too short for a PNM header".into()));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(fail("not a binary PGM/PPM (expected P5 or P6)".into())),
    };
    let mut pos = 2;
    let mut header = [0u64; 3];
    for slot in &mut header {
        *slot = next_pnm_number(bytes, &mut pos).ok_or_else(|| fail("truncated header".into()))?;
    }
    let [width, height, maxval] = header;
    if maxval != 255 {
        return Err(fail(format!("maxval {maxval} unsupported, expected 255")));
    }
    if width == 0 || height == 0 {
        return Err(fail("zero dimension".into()));
    }
    if width as u128 * height as u128 * channels as u128 > MAX_FRAME_PIXELS as u128 {
        return Err(fail(format!("{width}x{height} exceeds the frame size limit")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(fail("missing whitespace before raster".into())),
    }
    let expected = (width * height * channels as u64) as usize;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(fail(format!(
            "raster truncated: need {expected} bytes, have {}",
            raster.len()
        )));
    }
    if raster.len() > expected {
        return Err(fail(format!(
            "{} trailing bytes after raster",
            raster.len() - expected
        )));
    }
    let pixels = raster.iter().map(|&b| b as f64 / 255.0).collect();
    Ok(Frame::new(width as usize, height as usize, channels, pixels))
}

/// Scan the next decimal token, skipping whitespace and `#` comments.
fn next_pnm_number(bytes: &[u8], pos: &mut usize) -> Option<u64> {
    loop {
        match bytes.get(*pos)? {
            b if b.is_ascii_whitespace() => *pos += 1,
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            _ => break,
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if *pos == start || *pos - start > 10 {
        return None;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}

pub fn encode_pnm(frame: &Frame) -> Vec<u8> {
    let tag = if frame.channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{tag}\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.to_bytes());
    out
}

// ---------------------------------------------------------------------------
// FCRW raw sequences

/// Decode an FCRW raw sequence: a 16-byte header (magic "FCRW", then u32
/// little-endian width, height, channels) followed by whole frames of
/// width*height*channels bytes each. Frame count is implied by file length.
pub fn decode_fcrw(bytes: &[u8], origin: &str) -> Result<Vec<Frame>, FrameIoError> {
    let fail = |msg: String| FrameIoError::Decode {
        path: origin.to_string(),
        msg,
    };
    if bytes.len() < 16 {
        return Err(fail("too short for an FCRW header".into()));
    }
    if &bytes[..4] != FCRW_MAGIC {
        return Err(fail("bad magic, expected FCRW".into()));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as u64;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as u64;
    let channels = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as u64;
    if width == 0 || height == 0 {
        return Err(fail("zero dimension".into()));
    }
    if channels != 1 && channels != 3 {
        return Err(fail(format!("channels {channels} unsupported, expected 1 or 3")));
    }
    if width as u128 * height as u128 * channels as u128 > MAX_FRAME_PIXELS as u128 {
        return Err(fail(format!("{width}x{height}x{channels} exceeds the frame size limit")));
    }
    let frame_bytes = width * height * channels;
    let payload = &bytes[16..];
    if payload.is_empty() || payload.len() as u64 % frame_bytes != 0 {
        return Err(fail(format!(
            "payload of {} bytes is not a positive multiple of the {frame_bytes}-byte frame size",
            payload.len()
        )));
    }
    Ok(payload
        .chunks_exact(frame_bytes as usize)
        .map(|chunk| {
            Frame::new(
                width as usize,
                height as usize,
                channels as usize,
                chunk.iter().map(|&b| b as f64 / 255.0).collect(),
            )
        })
        .collect())
}

pub fn encode_fcrw(frames: &[Frame]) -> Result<Vec<u8>, FrameIoError> {
    let first = frames.first().ok_or(FrameIoError::ZeroDimension("no frames"))?;
    let (w, h, c) = first.dims();
    let mut out = Vec::with_capacity(16 + frames.len() * w * h * c);
    out.extend_from_slice(FCRW_MAGIC);
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(c as u32).to_le_bytes());
    for frame in frames {
        if frame.dims() != (w, h, c) {
            return Err(FrameIoError::MixedDimensions {
                path: "<encode>".into(),
                a: format!("{:?}", (w, h, c)),
                b: format!("{:?}", frame.dims()),
            });
        }
        out.extend_from_slice(&frame.to_bytes());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Directory loading

/// Load every decodable file in `dir` (lexicographic filename order) as one
/// sequence, resizing each frame to `target` (width, height). PGM/PPM files
/// contribute one frame each; FCRW files contribute all their frames.
pub fn load_sequence(dir: &Path, target: (usize, usize)) -> Result<FrameSequence, FrameIoError> {
    let mut names: Vec<_> = fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    names.sort();

    let mut frames: Vec<Frame> = Vec::new();
    for path in &names {
        let bytes = fs::read(path)?;
        let origin = path.display().to_string();
        let decoded: Vec<Frame> = if bytes.starts_with(FCRW_MAGIC) {
            decode_fcrw(&bytes, &origin)?
        } else {
            vec![decode_pnm(&bytes, &origin)?]
        };
        for frame in decoded {
            let resized = resize_bilinear(&frame, target.0, target.1)?;
            if let Some(prev) = frames.last() {
                if prev.channels != resized.channels {
                    return Err(FrameIoError::MixedDimensions {
                        path: origin.clone(),
                        a: format!("{} channels", prev.channels),
                        b: format!("{} channels", resized.channels),
                    });
                }
            }
            frames.push(resized);
        }
    }
    if frames.is_empty() {
        return Err(FrameIoError::EmptyDirectory(dir.display().to_string()));
    }
    let source_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    Ok(FrameSequence::new(frames, source_id))
}

// ---------------------------------------------------------------------------
// Resize

/// Bilinear resize with corner-aligned sampling: output pixel `ox` samples
/// source coordinate `ox * (in-1) / (out-1)`; a single-pixel output samples
/// the source midpoint.
pub fn resize_bilinear(frame: &Frame, out_w: usize, out_h: usize) -> Result<Frame, FrameIoError> {
    if out_w == 0 || out_h == 0 {
        return Err(FrameIoError::ZeroDimension("resize target"));
    }
    if (out_w, out_h) == (frame.width, frame.height) {
        return Ok(frame.clone());
    }
    let src_coord = |o: usize, out: usize, inp: usize| -> f64 {
        if out == 1 {
            (inp - 1) as f64 / 2.0
        } else {
            o as f64 * (inp - 1) as f64 / (out - 1) as f64
        }
    };
    let c = frame.channels;
    let mut pixels = vec![0.0; out_w * out_h * c];
    for oy in 0..out_h {
        let sy = src_coord(oy, out_h, frame.height);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(frame.height - 1);
        let fy = sy - y0 as f64;
        for ox in 0..out_w {
            let sx = src_coord(ox, out_w, frame.width);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(frame.width - 1);
            let fx = sx - x0 as f64;
            for ch in 0..c {
                let p00 = frame.pixel(x0, y0, ch);
                let p10 = frame.pixel(x1, y0, ch);
                let p01 = frame.pixel(x0, y1, ch);
                let p11 = frame.pixel(x1, y1, ch);
                let top = p00 + (p10 - p00) * fx;
                let bottom = p01 + (p11 - p01) * fx;
                pixels[(oy * out_w + ox) * c + ch] = top + (bottom - top) * fy;
            }
        }
    }
    Ok(Frame::new(out_w, out_h, c, pixels))
}

// ---------------------------------------------------------------------------
// Synthetic sequences

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// A bright square (value 0.9) on a dark background (value 0.1) that
    /// translates one pixel per frame in both axes, wrapping around. The
    /// exact levels make analytic error baselines easy: against a constant
    /// 0.5 prediction every pixel contributes (0.4)^2.
    MovingSquare,
    /// One uniform-random frame repeated.
    Constant,
    /// Independent uniform [0,1] noise per frame.
    Noise,
}

impl SynthKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "moving_square" => Some(SynthKind::MovingSquare),
            "constant" => Some(SynthKind::Constant),
            "noise" => Some(SynthKind::Noise),
            _ => None,
        }
    }
}

pub fn synth_sequence(
    kind: SynthKind,
    n_frames: usize,
    dims: (usize, usize, usize),
    seed: u64,
) -> Result<FrameSequence, FrameIoError> {
    let (w, h, c) = dims;
    if w == 0 || h == 0 || c == 0 {
        return Err(FrameIoError::ZeroDimension("synth dims"));
    }
    if n_frames == 0 {
        return Err(FrameIoError::ZeroDimension("synth frame count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = match kind {
        SynthKind::MovingSquare => {
            let side = (w.min(h) / 4).max(2).min(w.min(h));
            let x0 = rng.gen_range(0..w);
            let y0 = rng.gen_range(0..h);
            (0..n_frames)
                .map(|i| {
                    let mut frame = Frame::constant(w, h, c, 0.1);
                    for dy in 0..side {
                        for dx in 0..side {
                            let x = (x0 + i + dx) % w;
                            let y = (y0 + i + dy) % h;
                            for ch in 0..c {
                                frame.pixels[(y * w + x) * c + ch] = 0.9;
                            }
                        }
                    }
                    frame
                })
                .collect()
        }
        SynthKind::Constant => {
            let pixels: Vec<f64> = (0..w * h * c).map(|_| rng.gen_range(0.0..=1.0)).collect();
            vec![Frame::new(w, h, c, pixels); n_frames]
        }
        SynthKind::Noise => (0..n_frames)
            .map(|_| Frame::new(w, h, c, (0..w * h * c).map(|_| rng.gen_range(0.0..=1.0)).collect()))
            .collect(),
    };
    let name = match kind {
        SynthKind::MovingSquare => "moving_square",
        SynthKind::Constant => "constant",
        SynthKind::Noise => "noise",
    };
    Ok(FrameSequence::new(frames, format!("synth-{name}-{seed}")))
}

// ---------------------------------------------------------------------------
// Manifest and splits

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "validation" => Some(Split::Validation),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub source_id: String,
    pub split: Split,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Parse the UTF-8 CSV form: header `source_id,split,label`, one entry
    /// per line. Labels must not contain commas.
    pub fn parse(text: &str) -> Result<Self, FrameIoError> {
        let mut lines = text.lines().map(str::trim_end);
        let header = lines.next().ok_or_else(|| FrameIoError::Manifest("empty file".into()))?;
        if header.trim() != "source_id,split,label" {
            return Err(FrameIoError::Manifest(format!(
                "bad header {header:?}, expected source_id,split,label"
            )));
        }
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(FrameIoError::Manifest(format!(
                    "line {}: expected 3 fields, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let source_id = fields[0].trim().to_string();
            if source_id.is_empty() {
                return Err(FrameIoError::Manifest(format!("line {}: empty source_id", lineno + 2)));
            }
            if !seen.insert(source_id.clone()) {
                return Err(FrameIoError::Manifest(format!(
                    "duplicate source_id {source_id:?}"
                )));
            }
            let split = Split::parse(fields[1].trim()).ok_or_else(|| {
                FrameIoError::Manifest(format!(
                    "line {}: unknown split {:?}",
                    lineno + 2,
                    fields[1].trim()
                ))
            })?;
            entries.push(ManifestEntry {
                source_id,
                split,
                label: fields[2].trim().to_string(),
            });
        }
        Ok(DatasetManifest { entries })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("source_id,split,label\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.source_id, e.split, e.label));
        }
        out
    }
}

/// The manifest-directed partition of loaded sequences. Sequences on disk
/// that the manifest does not mention are excluded and reported by id.
#[derive(Debug, Default)]
pub struct SplitDataset {
    pub train: Vec<FrameSequence>,
    pub validation: Vec<FrameSequence>,
    pub test: Vec<FrameSequence>,
    pub unlisted: Vec<String>,
}

/// Partition `sequences` by manifest split. Every manifest entry must
/// resolve to a loaded sequence. With `for_training` set, every split must
/// come out non-empty.
pub fn split_dataset(
    manifest: &DatasetManifest,
    sequences: Vec<FrameSequence>,
    for_training: bool,
) -> Result<SplitDataset, FrameIoError> {
    let mut by_id: BTreeMap<String, FrameSequence> = sequences
        .into_iter()
        .map(|s| (s.source_id.clone(), s))
        .collect();
    let mut out = SplitDataset::default();
    for entry in &manifest.entries {
        let mut seq = by_id
            .remove(&entry.source_id)
            .ok_or_else(|| FrameIoError::UnknownSourceId(entry.source_id.clone()))?;
        seq.label = Some(entry.label.clone());
        match entry.split {
            Split::Train => out.train.push(seq),
            Split::Validation => out.validation.push(seq),
            Split::Test => out.test.push(seq),
        }
    }
    out.unlisted = by_id.into_keys().collect();
    if for_training {
        for (split, bucket) in [
            (Split::Train, &out.train),
            (Split::Validation, &out.validation),
            (Split::Test, &out.test),
        ] {
            if bucket.is_empty() {
                return Err(FrameIoError::EmptySplit(split));
            }
        }
    }
    Ok(out)
}
