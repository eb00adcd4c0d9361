//! A modeled monolithic codec: block-DCT intra frames plus co-located-delta
//! predicted frames behind a single checksum, decodable only from a complete
//! bitstream. It stands in for an AVC/ABR pipeline wherever the experiments
//! need all-or-nothing delivery semantics and a size/quality ladder, without
//! pretending to be bit-compatible with any real codec.
//!
//! Pixel math runs on integer byte values (0..255) held in f64. Quantizer
//! step `q == 1` bypasses the transform and codes raw integer residuals, so
//! it round-trips integer-valued frames exactly; every `q >= 2` uses the
//! 8x8 orthonormal DCT-II with round-half-away-from-zero quantization, whose
//! per-pixel reconstruction error is bounded by `q/2` times the squared
//! maximum inverse-transform row L1 norm (about 3.49 per unit q).

use crate::frame_io::Frame;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BITSTREAM_MAGIC: &[u8; 4] = b"FCMV";
const BITSTREAM_VERSION: u16 = 1;
const HEADER_LEN: usize = 26;

const BLOCK: usize = 8;
/// End-of-block marker byte; zero runs inside a block never exceed 63.
const EOB: u8 = 0xFF;

const MAX_FRAME_COUNT: u32 = 1 << 20;
const MAX_PLANE_PIXELS: u64 = 1 << 26;

#[derive(Debug, Error)]
pub enum MonolithicError {
    #[error("empty frame sequence")]
    EmptySequence,
    #[error("quantizer step must be >= 1")]
    BadQuantizer,
    #[error("GOP length must be >= 1")]
    BadGop,
    #[error("frame {index} is {got:?}, expected {expected:?}")]
    MixedDims {
        index: usize,
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },
    #[error("truncated bitstream: {0}")]
    TruncatedBitstream(String),
    #[error("{0} trailing bytes after checksum")]
    TrailingBytes(usize),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("quality ladder needs at least 2 steps")]
    TooFewSteps,
    #[error("quantizer steps must be strictly increasing")]
    UnorderedSteps,
    #[error("bitrate tie between q={a_q} and q={b_q}: both measure {bits} bits")]
    BitrateTie { a_q: u16, b_q: u16, bits: u64 },
}

// ---------------------------------------------------------------------------
// 8x8 DCT-II

/// Orthonormal 8-point DCT-II basis, `MATRIX[u][x]`.
fn dct_matrix() -> [[f64; BLOCK]; BLOCK] {
    let mut m = [[0.0; BLOCK]; BLOCK];
    for (u, row) in m.iter_mut().enumerate() {
        let scale = if u == 0 {
            (1.0 / BLOCK as f64).sqrt()
        } else {
            (2.0 / BLOCK as f64).sqrt()
        };
        for (x, v) in row.iter_mut().enumerate() {
            *v = scale
                * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / (2.0 * BLOCK as f64))
                    .cos();
        }
    }
    m
}

/// F = A f Aᵀ, flattened row-major blocks.
fn forward_dct(block: &[f64; 64], a: &[[f64; 8]; 8]) -> [f64; 64] {
    let mut tmp = [0.0; 64];
    for u in 0..8 {
        for y in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                acc += a[u][x] * block[y * 8 + x];
            }
            tmp[y * 8 + u] = acc;
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for y in 0..8 {
                acc += a[v][y] * tmp[y * 8 + u];
            }
            out[v * 8 + u] = acc;
        }
    }
    out
}

/// f = Aᵀ F A.
fn inverse_dct(coeffs: &[f64; 64], a: &[[f64; 8]; 8]) -> [f64; 64] {
    let mut tmp = [0.0; 64];
    for x in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += a[u][x] * coeffs[v * 8 + u];
            }
            tmp[v * 8 + x] = acc;
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut acc = 0.0;
            for v in 0..8 {
                acc += a[v][y] * tmp[v * 8 + x];
            }
            out[y * 8 + x] = acc;
        }
    }
    out
}

/// Worst-case absolute reconstruction error per pixel for quantizer `q`, on
/// the 0..255 byte scale: (q/2) * (max row L1 norm of the inverse 1-D
/// transform)^2. The lossless q=1 path has zero error.
pub fn quantization_error_bound(q: u16) -> f64 {
    if q <= 1 {
        return 0.0;
    }
    let a = dct_matrix();
    let max_l1 = (0..8)
        .map(|x| (0..8).map(|u| a[u][x].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    q as f64 / 2.0 * max_l1 * max_l1
}

/// Same bound expressed on the [0,1] pixel scale frames use.
pub fn quantization_error_bound_unit(q: u16) -> f64 {
    quantization_error_bound(q) / 255.0
}

// ---------------------------------------------------------------------------
// Scan order and token coding

/// Standard zig-zag scan for an 8x8 block, flat row-major indices.
fn zigzag_order() -> [usize; 64] {
    let mut order = [0usize; 64];
    let mut i = 0;
    for s in 0..15 {
        // Walk each anti-diagonal, alternating direction.
        let range: Vec<usize> = (0..8).filter(|&y| s >= y && s - y < 8).collect();
        let walk: Box<dyn Iterator<Item = usize>> = if s % 2 == 0 {
            Box::new(range.into_iter().rev())
        } else {
            Box::new(range.into_iter())
        };
        for y in walk {
            order[i] = y * 8 + (s - y);
            i += 1;
        }
    }
    order
}

/// Round half away from zero and clamp into i16. Inputs stay well inside
/// range by construction (|coefficient| <= 8 * 255).
fn quantize(value: f64, q: u16) -> i16 {
    (value / q as f64).round() as i16
}

/// Append (zero-run, nonzero value) tokens plus an end-of-block marker when
/// a zero tail remains.
fn write_block_tokens(coeffs: &[i16; 64], zigzag: &[usize; 64], out: &mut Vec<u8>) {
    let scanned: Vec<i16> = zigzag.iter().map(|&i| coeffs[i]).collect();
    let last_nonzero = scanned.iter().rposition(|&v| v != 0);
    let mut run = 0u8;
    if let Some(last) = last_nonzero {
        for &v in &scanned[..=last] {
            if v == 0 {
                run += 1;
            } else {
                out.push(run);
                out.extend_from_slice(&v.to_le_bytes());
                run = 0;
            }
        }
    }
    if last_nonzero != Some(63) {
        out.push(EOB);
    }
}

/// Inverse of [`write_block_tokens`]; rejects non-canonical streams.
fn read_block_tokens(
    bytes: &[u8],
    pos: &mut usize,
    zigzag: &[usize; 64],
) -> Result<[i16; 64], MonolithicError> {
    let mut scanned = [0i16; 64];
    let mut filled = 0usize;
    loop {
        if filled == 64 {
            break;
        }
        let run = *bytes
            .get(*pos)
            .ok_or_else(|| MonolithicError::CorruptPayload("block ends mid-token".into()))?;
        *pos += 1;
        if run == EOB {
            break;
        }
        let run = run as usize;
        if filled + run + 1 > 64 {
            return Err(MonolithicError::CorruptPayload(format!(
                "zero run {run} overflows the block at position {filled}"
            )));
        }
        let raw = bytes
            .get(*pos..*pos + 2)
            .ok_or_else(|| MonolithicError::CorruptPayload("value ends mid-token".into()))?;
        *pos += 2;
        let value = i16::from_le_bytes(raw.try_into().unwrap());
        if value == 0 {
            return Err(MonolithicError::CorruptPayload(
                "explicit zero value is non-canonical".into(),
            ));
        }
        filled += run;
        scanned[filled] = value;
        filled += 1;
    }
    let mut coeffs = [0i16; 64];
    for (slot, &v) in zigzag.iter().zip(&scanned) {
        coeffs[*slot] = v;
    }
    Ok(coeffs)
}

// ---------------------------------------------------------------------------
// Planes

/// One channel of one frame as integer byte values in f64, padded to block
/// multiples by edge replication.
struct PaddedPlane {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl PaddedPlane {
    fn from_frame(frame: &Frame, ch: usize) -> Self {
        let w = frame.width.div_ceil(BLOCK) * BLOCK;
        let h = frame.height.div_ceil(BLOCK) * BLOCK;
        let mut data = vec![0.0; w * h];
        for y in 0..h {
            let sy = y.min(frame.height - 1);
            for x in 0..w {
                let sx = x.min(frame.width - 1);
                data[y * w + x] = (frame.pixel(sx, sy, ch) * 255.0).round().clamp(0.0, 255.0);
            }
        }
        PaddedPlane { w, h, data }
    }

    fn zeros(w: usize, h: usize) -> Self {
        PaddedPlane {
            w,
            h,
            data: vec![0.0; w * h],
        }
    }

    fn block(&self, bx: usize, by: usize) -> [f64; 64] {
        let mut out = [0.0; 64];
        for y in 0..BLOCK {
            for x in 0..BLOCK {
                out[y * BLOCK + x] = self.data[(by * BLOCK + y) * self.w + bx * BLOCK + x];
            }
        }
        out
    }

    fn set_block(&mut self, bx: usize, by: usize, values: &[f64; 64]) {
        for y in 0..BLOCK {
            for x in 0..BLOCK {
                self.data[(by * BLOCK + y) * self.w + bx * BLOCK + x] = values[y * BLOCK + x];
            }
        }
    }
}

/// Code one block of source-minus-base values and return its reconstruction
/// (base + dequantized values, clamped to the byte range). Shared verbatim
/// by encoder and decoder so their reconstructions match bit-exactly.
struct BlockCodec {
    a: [[f64; 8]; 8],
    zigzag: [usize; 64],
    q: u16,
}

impl BlockCodec {
    fn new(q: u16) -> Self {
        BlockCodec {
            a: dct_matrix(),
            zigzag: zigzag_order(),
            q,
        }
    }

    fn encode_block(&self, diff: &[f64; 64], out: &mut Vec<u8>) -> [i16; 64] {
        let mut coeffs = [0i16; 64];
        if self.q == 1 {
            for (c, &d) in coeffs.iter_mut().zip(diff.iter()) {
                *c = d.round() as i16;
            }
        } else {
            let freq = forward_dct(diff, &self.a);
            for (c, &f) in coeffs.iter_mut().zip(freq.iter()) {
                *c = quantize(f, self.q);
            }
        }
        write_block_tokens(&coeffs, &self.zigzag, out);
        coeffs
    }

    /// Dequantized spatial values for coded coefficients.
    fn dequantize_block(&self, coeffs: &[i16; 64]) -> [f64; 64] {
        if self.q == 1 {
            let mut out = [0.0; 64];
            for (o, &c) in out.iter_mut().zip(coeffs.iter()) {
                *o = c as f64;
            }
            out
        } else {
            let mut freq = [0.0; 64];
            for (f, &c) in freq.iter_mut().zip(coeffs.iter()) {
                *f = c as f64 * self.q as f64;
            }
            inverse_dct(&freq, &self.a)
        }
    }

    fn reconstruct_block(&self, base: &[f64; 64], coeffs: &[i16; 64]) -> [f64; 64] {
        let diff = self.dequantize_block(coeffs);
        let mut out = [0.0; 64];
        for i in 0..64 {
            out[i] = (base[i] + diff[i]).clamp(0.0, 255.0);
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Bitstream

#[derive(Debug, Clone)]
pub struct DecodedVideo {
    pub frames: Vec<Frame>,
    pub q: u16,
    pub gop: u16,
}

pub fn encode_monolithic(
    frames: &[Frame],
    q: u16,
    gop: u16,
) -> Result<Vec<u8>, MonolithicError> {
    encode_with_reconstruction(frames, q, gop).map(|(bytes, _)| bytes)
}

/// Encode and also return the reconstructed frames the decoder will produce.
/// Senders use these to know exactly what quality the receiver sees.
pub fn encode_with_reconstruction(
    frames: &[Frame],
    q: u16,
    gop: u16,
) -> Result<(Vec<u8>, Vec<Frame>), MonolithicError> {
    let first = frames.first().ok_or(MonolithicError::EmptySequence)?;
    if q == 0 {
        return Err(MonolithicError::BadQuantizer);
    }
    if gop == 0 {
        return Err(MonolithicError::BadGop);
    }
    let dims = first.dims();
    for (index, f) in frames.iter().enumerate() {
        if f.dims() != dims {
            return Err(MonolithicError::MixedDims {
                index,
                expected: dims,
                got: f.dims(),
            });
        }
    }
    let (w, h, c) = dims;

    let mut out = Vec::new();
    out.extend_from_slice(BITSTREAM_MAGIC);
    out.extend_from_slice(&BITSTREAM_VERSION.to_le_bytes());
    for v in [w as u32, h as u32, c as u32, frames.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&q.to_le_bytes());
    out.extend_from_slice(&gop.to_le_bytes());

    let codec = BlockCodec::new(q);
    let mut recon: Vec<PaddedPlane> = Vec::new();
    let mut recon_frames = Vec::with_capacity(frames.len());
    for (index, frame) in frames.iter().enumerate() {
        let is_intra = index % gop as usize == 0;
        let mut payload = Vec::new();
        let mut new_recon = Vec::with_capacity(c);
        for ch in 0..c {
            let src = PaddedPlane::from_frame(frame, ch);
            let base = if is_intra {
                PaddedPlane {
                    w: src.w,
                    h: src.h,
                    data: vec![128.0; src.w * src.h],
                }
            } else {
                PaddedPlane {
                    w: src.w,
                    h: src.h,
                    data: recon[ch].data.clone(),
                }
            };
            let mut plane_recon = PaddedPlane::zeros(src.w, src.h);
            for by in 0..src.h / BLOCK {
                for bx in 0..src.w / BLOCK {
                    let s = src.block(bx, by);
                    let b = base.block(bx, by);
                    let mut diff = [0.0; 64];
                    for i in 0..64 {
                        diff[i] = s[i] - b[i];
                    }
                    let coeffs = codec.encode_block(&diff, &mut payload);
                    plane_recon.set_block(bx, by, &codec.reconstruct_block(&b, &coeffs));
                }
            }
            new_recon.push(plane_recon);
        }
        recon = new_recon;
        recon_frames.push(planes_to_frame(&recon, w, h, c));

        out.push(if is_intra { 0 } else { 1 });
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&payload);
    }

    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok((out, recon_frames))
}

fn planes_to_frame(planes: &[PaddedPlane], w: usize, h: usize, c: usize) -> Frame {
    let mut pixels = vec![0.0; w * h * c];
    for (ch, plane) in planes.iter().enumerate() {
        for y in 0..h {
            for x in 0..w {
                pixels[(y * w + x) * c + ch] = plane.data[y * plane.w + x] / 255.0;
            }
        }
    }
    Frame::new(w, h, c, pixels)
}

/// Decode a complete bitstream. Any strict prefix reports
/// [`MonolithicError::TruncatedBitstream`]; any corruption of a complete
/// stream reports [`MonolithicError::ChecksumMismatch`] (or a payload error
/// if the corruption keeps the checksum valid, which requires a collision).
pub fn decode_monolithic(bytes: &[u8]) -> Result<DecodedVideo, MonolithicError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(MonolithicError::TruncatedBitstream(format!(
            "{} bytes is shorter than any valid stream",
            bytes.len()
        )));
    }
    if &bytes[..4] != BITSTREAM_MAGIC {
        return Err(MonolithicError::InvalidHeader("bad magic, expected FCMV".into()));
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != BITSTREAM_VERSION {
        return Err(MonolithicError::InvalidHeader(format!(
            "unsupported version {version}"
        )));
    }
    let mut dims = [0u32; 4];
    for (i, d) in dims.iter_mut().enumerate() {
        *d = u32::from_le_bytes(bytes[6 + 4 * i..10 + 4 * i].try_into().unwrap());
    }
    let [w, h, c, frame_count] = dims;
    let q = u16::from_le_bytes(bytes[22..24].try_into().unwrap());
    let gop = u16::from_le_bytes(bytes[24..26].try_into().unwrap());
    if w == 0 || h == 0 || !(c == 1 || c == 3) {
        return Err(MonolithicError::InvalidHeader(format!(
            "degenerate dimensions {w}x{h}x{c}"
        )));
    }
    if w as u64 * h as u64 > MAX_PLANE_PIXELS {
        return Err(MonolithicError::InvalidHeader("frame size over limit".into()));
    }
    if frame_count == 0 || frame_count > MAX_FRAME_COUNT {
        return Err(MonolithicError::InvalidHeader(format!(
            "frame count {frame_count} out of range"
        )));
    }
    if q == 0 {
        return Err(MonolithicError::InvalidHeader("quantizer step 0".into()));
    }
    if gop == 0 {
        return Err(MonolithicError::InvalidHeader("GOP 0".into()));
    }

    // Structural walk before any payload parsing: distinguish truncation
    // from corruption without trusting payload contents.
    let mut pos = HEADER_LEN;
    let mut records = Vec::with_capacity(frame_count as usize);
    for index in 0..frame_count {
        if bytes.len() < pos + 5 {
            return Err(MonolithicError::TruncatedBitstream(format!(
                "frame record {index} header missing"
            )));
        }
        let frame_type = bytes[pos];
        let payload_len =
            u32::from_le_bytes(bytes[pos + 1..pos + 5].try_into().unwrap()) as usize;
        pos += 5;
        if bytes.len() < pos + payload_len {
            return Err(MonolithicError::TruncatedBitstream(format!(
                "frame {index} payload needs {payload_len} bytes, {} remain",
                bytes.len() - pos
            )));
        }
        records.push((frame_type, &bytes[pos..pos + payload_len]));
        pos += payload_len;
    }
    if bytes.len() < pos + 4 {
        return Err(MonolithicError::TruncatedBitstream("checksum missing".into()));
    }
    if bytes.len() > pos + 4 {
        return Err(MonolithicError::TrailingBytes(bytes.len() - pos - 4));
    }
    let stored = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
    let computed = crc32fast::hash(&bytes[..pos]);
    if stored != computed {
        return Err(MonolithicError::ChecksumMismatch { stored, computed });
    }

    let (w, h, c) = (w as usize, h as usize, c as usize);
    let codec = BlockCodec::new(q);
    let pw = w.div_ceil(BLOCK) * BLOCK;
    let ph = h.div_ceil(BLOCK) * BLOCK;
    let mut recon: Vec<PaddedPlane> = Vec::new();
    let mut frames = Vec::with_capacity(records.len());
    for (index, (frame_type, payload)) in records.iter().enumerate() {
        let is_intra = match frame_type {
            0 => true,
            1 => false,
            other => {
                return Err(MonolithicError::CorruptPayload(format!(
                    "frame {index} has unknown type {other}"
                )))
            }
        };
        let expected_intra = index % gop as usize == 0;
        if is_intra != expected_intra {
            return Err(MonolithicError::CorruptPayload(format!(
                "frame {index} type disagrees with the GOP structure"
            )));
        }
        let mut ppos = 0usize;
        let mut new_recon = Vec::with_capacity(c);
        for ch in 0..c {
            let base = if is_intra {
                PaddedPlane {
                    w: pw,
                    h: ph,
                    data: vec![128.0; pw * ph],
                }
            } else {
                PaddedPlane {
                    w: pw,
                    h: ph,
                    data: recon[ch].data.clone(),
                }
            };
            let mut plane = PaddedPlane::zeros(pw, ph);
            for by in 0..ph / BLOCK {
                for bx in 0..pw / BLOCK {
                    let coeffs = read_block_tokens(payload, &mut ppos, &codec.zigzag)?;
                    let b = base.block(bx, by);
                    plane.set_block(bx, by, &codec.reconstruct_block(&b, &coeffs));
                }
            }
            new_recon.push(plane);
        }
        if ppos != payload.len() {
            return Err(MonolithicError::CorruptPayload(format!(
                "frame {index}: {} unused payload bytes",
                payload.len() - ppos
            )));
        }
        recon = new_recon;
        frames.push(planes_to_frame(&recon, w, h, c));
    }

    Ok(DecodedVideo { frames, q, gop })
}

// ---------------------------------------------------------------------------
// Quality ladder

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub level_id: String,
    pub q: u16,
    pub bitrate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityLadder {
    pub levels: Vec<LadderLevel>,
    pub fps: f64,
}

pub const DEFAULT_GOP: u16 = 12;
pub const DEFAULT_LADDER_STEPS: [u16; 3] = [4, 8, 16];

/// Encode at each quantizer step and measure actual bitrates. Steps must be
/// strictly increasing; measured bitrates must come out strictly decreasing,
/// and a tie is reported rather than silently reordered.
pub fn build_ladder(
    frames: &[Frame],
    steps: &[u16],
    gop: u16,
    fps: f64,
) -> Result<QualityLadder, MonolithicError> {
    if steps.len() < 2 {
        return Err(MonolithicError::TooFewSteps);
    }
    if steps.windows(2).any(|p| p[1] <= p[0]) {
        return Err(MonolithicError::UnorderedSteps);
    }
    // Named after familiar CRF ladder points when the shape matches.
    let names: Vec<String> = if steps.len() == 3 {
        vec!["18".into(), "23".into(), "30".into()]
    } else {
        steps.iter().map(|q| format!("q{q}")).collect()
    };
    let duration_s = frames.len() as f64 / fps;
    let mut levels = Vec::with_capacity(steps.len());
    let mut sizes: Vec<u64> = Vec::with_capacity(steps.len());
    for (q, name) in steps.iter().zip(names) {
        let bytes = encode_monolithic(frames, *q, gop)?;
        let bits = bytes.len() as u64 * 8;
        sizes.push(bits);
        levels.push(LadderLevel {
            level_id: name,
            q: *q,
            bitrate_bps: bits as f64 / duration_s,
        });
    }
    for i in 1..levels.len() {
        if sizes[i] >= sizes[i - 1] {
            return Err(MonolithicError::BitrateTie {
                a_q: levels[i - 1].q,
                b_q: levels[i].q,
                bits: sizes[i].min(sizes[i - 1]),
            });
        }
    }
    Ok(QualityLadder { levels, fps })
}

/// The highest-bitrate level whose bitrate fits within `safety * estimate`,
/// or the lowest-bitrate level when nothing fits.
pub fn select_quality<'a>(
    ladder: &'a QualityLadder,
    throughput_estimate_bps: f64,
    safety: f64,
) -> &'a LadderLevel {
    debug_assert!(safety > 0.0 && safety <= 1.0);
    let budget = safety * throughput_estimate_bps;
    let mut best: Option<&LadderLevel> = None;
    let mut lowest = &ladder.levels[0];
    for level in &ladder.levels {
        if level.bitrate_bps < lowest.bitrate_bps {
            lowest = level;
        }
        if level.bitrate_bps <= budget
            && best.is_none_or(|b| level.bitrate_bps > b.bitrate_bps)
        {
            best = Some(level);
        }
    }
    best.unwrap_or(lowest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame_io::{synth_sequence, SynthKind};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_frames(n: usize, dims: (usize, usize, usize)) -> Vec<Frame> {
        synth_sequence(SynthKind::Noise, n, dims, 424).unwrap().frames
    }

    /// Snap pixels to exact byte levels so q=1 can round-trip them.
    fn integerized(frames: Vec<Frame>) -> Vec<Frame> {
        frames
            .into_iter()
            .map(|f| {
                let bytes = f.to_bytes();
                Frame::new(
                    f.width,
                    f.height,
                    f.channels,
                    bytes.iter().map(|&b| b as f64 / 255.0).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn dct_matrix_is_orthonormal() {
        let a = dct_matrix();
        for i in 0..8 {
            for j in 0..8 {
                let dot: f64 = (0..8).map(|x| a[i][x] * a[j][x]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dct_round_trips_arbitrary_blocks() {
        let a = dct_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let mut block = [0.0; 64];
            for v in &mut block {
                *v = rng.gen_range(-255.0..255.0);
            }
            let back = inverse_dct(&forward_dct(&block, &a), &a);
            for (x, y) in block.iter().zip(&back) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zigzag_matches_the_standard_prefix() {
        let order = zigzag_order();
        assert_eq!(&order[..10], &[0, 1, 8, 16, 9, 2, 3, 10, 17, 24]);
        assert_eq!(order[63], 63);
        let mut seen = order;
        seen.sort_unstable();
        assert!(seen.iter().enumerate().all(|(i, &v)| i == v));
    }

    #[test]
    fn block_tokens_round_trip() {
        let zz = zigzag_order();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for density in [0.0, 0.05, 0.5, 1.0] {
            for _ in 0..50 {
                let mut coeffs = [0i16; 64];
                for v in &mut coeffs {
                    if rng.gen::<f64>() < density {
                        *v = rng.gen_range(-300..=300);
                    }
                }
                let mut bytes = Vec::new();
                write_block_tokens(&coeffs, &zz, &mut bytes);
                let mut pos = 0;
                let back = read_block_tokens(&bytes, &mut pos, &zz).unwrap();
                assert_eq!(pos, bytes.len());
                assert_eq!(back, coeffs);
            }
        }
    }

    #[test]
    fn quantization_bound_holds_on_random_blocks() {
        // Brute force: 1000 random blocks through the exact coding path.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for q in [1u16, 4, 8, 16] {
            let codec = BlockCodec::new(q);
            let bound = quantization_error_bound(q);
            for _ in 0..1000 {
                let mut diff = [0.0; 64];
                for v in &mut diff {
                    // Integer-valued for q=1 (its contract), real otherwise.
                    *v = if q == 1 {
                        rng.gen_range(-255..=255) as f64
                    } else {
                        rng.gen_range(-255.0..=255.0)
                    };
                }
                let mut sink = Vec::new();
                let coeffs = codec.encode_block(&diff, &mut sink);
                let back = codec.dequantize_block(&coeffs);
                for (a, b) in diff.iter().zip(&back) {
                    assert!(
                        (a - b).abs() <= bound + 1e-9,
                        "q={q}: error {} exceeds bound {bound}",
                        (a - b).abs()
                    );
                }
            }
        }
    }

    #[test]
    fn decode_reconstruction_respects_the_bound_end_to_end() {
        let frames = noise_frames(6, (20, 12, 1));
        for q in [2u16, 4, 8, 16] {
            let bytes = encode_monolithic(&frames, q, 4).unwrap();
            let decoded = decode_monolithic(&bytes).unwrap();
            let bound = quantization_error_bound_unit(q);
            for (orig, recon) in frames.iter().zip(&decoded.frames) {
                // Compare against the integerized source the codec codes.
                for (o, r) in orig.to_bytes().iter().zip(&recon.pixels) {
                    let err = (*o as f64 / 255.0 - r).abs();
                    assert!(err <= bound + 1e-12, "q={q}: error {err} > bound {bound}");
                }
            }
        }
    }

    #[test]
    fn q1_round_trips_integer_frames_exactly() {
        let frames = integerized(noise_frames(5, (11, 9, 3)));
        let bytes = encode_monolithic(&frames, 1, 3).unwrap();
        let decoded = decode_monolithic(&bytes).unwrap();
        for (orig, recon) in frames.iter().zip(&decoded.frames) {
            assert_eq!(orig.pixels, recon.pixels);
        }
    }

    #[test]
    fn constant_sequence_p_frames_collapse_to_markers() {
        let frames = synth_sequence(SynthKind::Constant, 5, (16, 16, 1), 3)
            .unwrap()
            .frames;
        let bytes = encode_monolithic(&frames, 4, 12).unwrap();
        // Walk records: 4 blocks over 16x16, so an all-zero P payload is
        // exactly 4 end-of-block markers.
        let mut pos = HEADER_LEN;
        let mut payload_lens = Vec::new();
        for _ in 0..5 {
            let len = u32::from_le_bytes(bytes[pos + 1..pos + 5].try_into().unwrap()) as usize;
            payload_lens.push(len);
            pos += 5 + len;
        }
        assert!(payload_lens[0] > payload_lens[1]);
        for &p in &payload_lens[1..] {
            assert_eq!(p, 4);
        }
    }

    #[test]
    fn coarser_quantizer_shrinks_noise_bitstreams() {
        let frames = noise_frames(4, (16, 16, 1));
        let fine = encode_monolithic(&frames, 4, 12).unwrap();
        let coarse = encode_monolithic(&frames, 16, 12).unwrap();
        assert!(coarse.len() < fine.len());
    }

    #[test]
    fn encoding_is_deterministic() {
        let frames = noise_frames(3, (16, 16, 3));
        assert_eq!(
            encode_monolithic(&frames, 8, 2).unwrap(),
            encode_monolithic(&frames, 8, 2).unwrap()
        );
    }

    #[test]
    fn decoder_matches_encoder_reconstruction_bit_exactly() {
        let frames = noise_frames(6, (13, 10, 1));
        let (bytes, encoder_view) = encode_with_reconstruction(&frames, 8, 3).unwrap();
        let decoded = decode_monolithic(&bytes).unwrap();
        for (a, b) in encoder_view.iter().zip(&decoded.frames) {
            for (x, y) in a.pixels.iter().zip(&b.pixels) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn every_strict_prefix_is_truncated() {
        let frames = noise_frames(3, (8, 8, 1));
        let bytes = encode_monolithic(&frames, 8, 2).unwrap();
        assert!(decode_monolithic(&bytes).is_ok());
        for cut in 0..bytes.len() {
            match decode_monolithic(&bytes[..cut]) {
                Err(MonolithicError::TruncatedBitstream(_)) => {}
                other => panic!("prefix {cut}: expected truncation, got {other:?}"),
            }
        }
    }

    #[test]
    fn flipped_bits_fail_the_checksum() {
        let frames = noise_frames(2, (8, 8, 1));
        let bytes = encode_monolithic(&frames, 8, 2).unwrap();
        // Flip one bit inside the first frame payload.
        let mut corrupt = bytes.clone();
        corrupt[HEADER_LEN + 7] ^= 0x10;
        assert!(matches!(
            decode_monolithic(&corrupt),
            Err(MonolithicError::ChecksumMismatch { .. })
        ));
        let mut trailing = bytes;
        trailing.push(0);
        assert!(matches!(
            decode_monolithic(&trailing),
            Err(MonolithicError::TrailingBytes(1))
        ));
    }

    #[test]
    fn garbage_inputs_error_without_panicking() {
        assert!(decode_monolithic(&[]).is_err());
        assert!(decode_monolithic(b"FCMVnot really a stream at all......").is_err());
        assert!(decode_monolithic(&[0xFF; 64]).is_err());
    }

    #[test]
    fn ladder_on_noise_is_strictly_ordered() {
        let frames = noise_frames(4, (16, 16, 1));
        let ladder = build_ladder(&frames, &[4, 8, 16], DEFAULT_GOP, 30.0).unwrap();
        assert_eq!(ladder.levels.len(), 3);
        assert_eq!(ladder.levels[0].level_id, "18");
        assert!(ladder.levels[0].bitrate_bps > ladder.levels[1].bitrate_bps);
        assert!(ladder.levels[1].bitrate_bps > ladder.levels[2].bitrate_bps);
    }

    #[test]
    fn ladder_rejects_degenerate_steps_and_reports_ties() {
        let frames = noise_frames(2, (8, 8, 1));
        assert!(matches!(
            build_ladder(&frames, &[8], DEFAULT_GOP, 30.0),
            Err(MonolithicError::TooFewSteps)
        ));
        assert!(matches!(
            build_ladder(&frames, &[8, 4], DEFAULT_GOP, 30.0),
            Err(MonolithicError::UnorderedSteps)
        ));
        // A mid-gray constant video quantizes to nothing at any step, so all
        // levels measure identical sizes: surfaced as a tie.
        let flat = vec![Frame::constant(16, 16, 1, 128.0 / 255.0); 4];
        assert!(matches!(
            build_ladder(&flat, &[4, 8, 16], DEFAULT_GOP, 30.0),
            Err(MonolithicError::BitrateTie { .. })
        ));
    }

    #[test]
    fn quality_selection_rules() {
        let ladder = QualityLadder {
            levels: vec![
                LadderLevel {
                    level_id: "A".into(),
                    q: 4,
                    bitrate_bps: 900_000.0,
                },
                LadderLevel {
                    level_id: "B".into(),
                    q: 8,
                    bitrate_bps: 400_000.0,
                },
            ],
            fps: 30.0,
        };
        assert_eq!(select_quality(&ladder, 100_000.0, 1.0).level_id, "B");
        assert_eq!(select_quality(&ladder, 10_000_000.0, 1.0).level_id, "A");
        // 0.8 * 1M = 800k excludes the 900k level.
        assert_eq!(select_quality(&ladder, 1_000_000.0, 0.8).level_id, "B");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn all_or_nothing_under_random_truncation(cut_fraction in 0.0f64..1.0) {
            let frames = noise_frames(3, (8, 8, 1));
            let bytes = encode_monolithic(&frames, 8, 2).unwrap();
            let cut = ((bytes.len() as f64) * cut_fraction) as usize;
            if cut < bytes.len() {
                prop_assert!(matches!(
                    decode_monolithic(&bytes[..cut]),
                    Err(MonolithicError::TruncatedBitstream(_))
                ));
            }
        }
    }
}
