//! Sender/receiver state machines over a byte stream: wire framing with a
//! 3-byte delimiter, per-feature or per-frame acknowledgments, per-frame
//! deadline truncation for the progressive codec, and whole-video deadline
//! semantics for the monolithic baseline.
//!
//! Latent values travel as 32-bit IEEE-754 little-endian. The reference
//! reconstruction for a fully delivered frame is therefore
//! `decode(wire_quantize(encode(frame)))`, which transmission must match
//! bit-exactly whenever nothing is dropped.
//!
//! ACK granularity:
//! * per-feature: stop-and-wait; the sender submits one segment, then blocks
//!   until its ACK crosses the reverse channel. ACKs observed equal segments
//!   delivered, exactly.
//! * per-frame: the sender is paced only by the shaper (a message is
//!   submitted the moment the previous one clears); the receiver sends one
//!   ACK as each frame completes. The sender never blocks on these, so the
//!   mode isolates what stop-and-wait ACKing costs.

use crate::channel::{Channel, ChannelConfig, ChannelError, Micros};
use crate::frame_io::Frame;
use crate::predictor::{PredictorError, PredictorModel, TemporalFiller};
use crate::progressive::{
    decode, encode, zero_pad, AutoencoderModel, FeatureVector, ProgressiveError, ReceivedPrefix,
};
use thiserror::Error;

pub const DELIMITER: [u8; 3] = *b"FCM";
pub const ACK: [u8; 3] = *b"ACK";

/// Wire messages: delimiter, u32 big-endian payload length, kind, payload.
const WIRE_OVERHEAD: usize = 8;
/// Parser guard against absurd forged lengths.
const MAX_PAYLOAD: u32 = 1 << 26;
/// Monolithic blobs travel in chunks of this many payload bytes.
const BLOB_CHUNK: usize = 1400;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Codec(#[from] ProgressiveError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error("payload of {0} bytes exceeds the u32 length field")]
    OversizePayload(usize),
    #[error("deadline budget must be positive")]
    BadBudget,
    #[error("temporal reconstructor selected but no predictor supplied")]
    MissingPredictor,
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    FrameHeader = 1,
    FeatureSegment = 2,
    VideoBlob = 3,
    EndOfVideo = 4,
}

impl MessageKind {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(MessageKind::FrameHeader),
            2 => Some(MessageKind::FeatureSegment),
            3 => Some(MessageKind::VideoBlob),
            4 => Some(MessageKind::EndOfVideo),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub kind: MessageKind,
    pub payload: Vec<u8>,
}

pub fn frame_message(kind: MessageKind, payload: &[u8]) -> Result<Vec<u8>, TransportError> {
    if payload.len() > u32::MAX as usize {
        return Err(TransportError::OversizePayload(payload.len()));
    }
    let mut out = Vec::with_capacity(WIRE_OVERHEAD + payload.len());
    out.extend_from_slice(&DELIMITER);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.push(kind as u8);
    out.extend_from_slice(payload);
    Ok(out)
}

/// Incremental wire parser. Bytes may arrive in arbitrary chunks; complete
/// messages come out as soon as they close. Garbage between messages is
/// skipped (counted, never fatal) by scanning forward to the next delimiter.
#[derive(Debug)]
pub struct StreamParser {
    buffer: Vec<u8>,
    skipped: u64,
    max_payload: u32,
}

impl Default for StreamParser {
    fn default() -> Self {
        StreamParser::new()
    }
}

impl StreamParser {
    pub fn new() -> Self {
        StreamParser::with_max_payload(MAX_PAYLOAD)
    }

    /// A parser that rejects payload lengths above `limit`. Receivers that
    /// know their message-size envelope should bound it tightly: a corrupted
    /// length field can otherwise stall parsing on up to `limit` bytes of
    /// phantom payload.
    pub fn with_max_payload(limit: u32) -> Self {
        StreamParser {
            buffer: Vec::new(),
            skipped: 0,
            max_payload: limit.min(MAX_PAYLOAD),
        }
    }

    /// Bytes discarded while resynchronizing.
    pub fn skipped_bytes(&self) -> u64 {
        self.skipped
    }

    /// Unconsumed tail (partial message, if any).
    pub fn pending_bytes(&self) -> usize {
        self.buffer.len()
    }

    pub fn push(&mut self, chunk: &[u8]) -> Vec<WireMessage> {
        self.buffer.extend_from_slice(chunk);
        let mut out = Vec::new();
        loop {
            // Align the buffer on a delimiter, dropping leading garbage.
            match find_delimiter(&self.buffer) {
                Some(0) => {}
                Some(at) => {
                    self.skipped += at as u64;
                    self.buffer.drain(..at);
                }
                None => {
                    // No delimiter anywhere; keep a tail short enough to be
                    // a delimiter prefix, drop the rest.
                    let keep = delimiter_prefix_len(&self.buffer);
                    self.skipped += (self.buffer.len() - keep) as u64;
                    self.buffer.drain(..self.buffer.len() - keep);
                    break;
                }
            }
            if self.buffer.len() < WIRE_OVERHEAD {
                break;
            }
            let len = u32::from_be_bytes(self.buffer[3..7].try_into().unwrap());
            let kind = MessageKind::from_byte(self.buffer[7]);
            let (len, kind) = match (len <= self.max_payload, kind) {
                (true, Some(kind)) => (len as usize, kind),
                // Corrupt header: skip the delimiter byte and resynchronize.
                _ => {
                    self.skipped += 1;
                    self.buffer.drain(..1);
                    continue;
                }
            };
            if self.buffer.len() < WIRE_OVERHEAD + len {
                break;
            }
            let payload = self.buffer[WIRE_OVERHEAD..WIRE_OVERHEAD + len].to_vec();
            self.buffer.drain(..WIRE_OVERHEAD + len);
            out.push(WireMessage { kind, payload });
        }
        out
    }
}

fn find_delimiter(buf: &[u8]) -> Option<usize> {
    buf.windows(3).position(|w| w == DELIMITER)
}

/// Length of the longest delimiter prefix ending the buffer.
fn delimiter_prefix_len(buf: &[u8]) -> usize {
    for keep in (1..3.min(buf.len()) + 1).rev() {
        if buf[buf.len() - keep..] == DELIMITER[..keep] {
            return keep;
        }
    }
    0
}

// ---------------------------------------------------------------------------
// Payload layouts

/// frame_index u32 BE, segment count u8, segment width u16 BE.
fn header_payload(frame_index: u32, num_segments: u8, segment_width: u16) -> Vec<u8> {
    let mut p = Vec::with_capacity(7);
    p.extend_from_slice(&frame_index.to_be_bytes());
    p.push(num_segments);
    p.extend_from_slice(&segment_width.to_be_bytes());
    p
}

fn parse_header_payload(p: &[u8]) -> Result<(u32, u8, u16), TransportError> {
    if p.len() != 7 {
        return Err(TransportError::Protocol(format!(
            "frame header payload is {} bytes, expected 7",
            p.len()
        )));
    }
    Ok((
        u32::from_be_bytes(p[..4].try_into().unwrap()),
        p[4],
        u16::from_be_bytes(p[5..7].try_into().unwrap()),
    ))
}

/// frame_index u32 BE, segment index u8, then S little-endian f32 values.
fn segment_payload(frame_index: u32, segment_index: u8, values: &[f64]) -> Vec<u8> {
    let mut p = Vec::with_capacity(5 + 4 * values.len());
    p.extend_from_slice(&frame_index.to_be_bytes());
    p.push(segment_index);
    for &v in values {
        p.extend_from_slice(&(v as f32).to_le_bytes());
    }
    p
}

fn parse_segment_payload(p: &[u8]) -> Result<(u32, u8, Vec<f64>), TransportError> {
    if p.len() < 5 || (p.len() - 5) % 4 != 0 {
        return Err(TransportError::Protocol(format!(
            "feature segment payload of {} bytes is malformed",
            p.len()
        )));
    }
    let values = p[5..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((
        u32::from_be_bytes(p[..4].try_into().unwrap()),
        p[4],
        values,
    ))
}

/// Round a feature vector through the 32-bit wire representation. This is
/// what a receiver holds after lossless delivery of every segment.
pub fn wire_quantize(fv: &FeatureVector) -> FeatureVector {
    let values = fv.values().iter().map(|&v| v as f32 as f64).collect();
    FeatureVector::new(values, fv.segment_width()).expect("finite by construction")
}

/// Wire bytes one frame costs when `segments_sent` of its segments go out:
/// the header message plus one message per segment.
pub fn progressive_frame_wire_bytes(segments_sent: usize, segment_width: usize) -> u64 {
    let header = (WIRE_OVERHEAD + 7) as u64;
    let per_segment = (WIRE_OVERHEAD + 5 + 4 * segment_width) as u64;
    header + segments_sent as u64 * per_segment
}

// ---------------------------------------------------------------------------
// Logs

#[derive(Debug, Clone, serde::Serialize)]
pub struct FrameLog {
    pub frame_index: usize,
    pub segments_sent: usize,
    pub segments_delivered: usize,
    pub bytes_sent: u64,
    pub bytes_delivered: u64,
    pub send_start: Micros,
    pub send_end: Micros,
    pub deadline_hit: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TransmissionLog {
    pub frames: Vec<FrameLog>,
    pub total_bytes: u64,
    pub total_elapsed_us: Micros,
    pub acks_received: u64,
}

/// Delivered bits over elapsed time across the last `window` frames. Returns
/// 0 when nothing was delivered or no time passed.
pub fn estimate_throughput(log: &TransmissionLog, window: usize) -> f64 {
    let n = log.frames.len();
    if n == 0 || window == 0 {
        return 0.0;
    }
    let frames = &log.frames[n.saturating_sub(window)..];
    let bits: u64 = frames.iter().map(|f| f.bytes_delivered * 8).sum();
    let elapsed = frames.last().unwrap().send_end - frames[0].send_start;
    if elapsed == 0 {
        return 0.0;
    }
    bits as f64 / (elapsed as f64 / 1_000_000.0)
}

// ---------------------------------------------------------------------------
// Progressive transmission

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckGranularity {
    /// One ACK per feature segment; the sender stop-and-waits on each.
    PerFeature,
    /// One ACK per completed frame; the sender never blocks on it.
    PerFrame,
}

impl AckGranularity {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "feature" => Some(AckGranularity::PerFeature),
            "frame" => Some(AckGranularity::PerFrame),
            _ => None,
        }
    }
}

/// How the receiver fills segments the deadline cut off.
#[derive(Debug, Clone, Copy)]
pub enum Reconstructor<'a> {
    ZeroFill,
    Temporal(&'a PredictorModel),
}

#[derive(Debug)]
pub struct ProgressiveOutcome {
    pub reconstructed: Vec<Frame>,
    /// What actually arrived per frame, before any filling.
    pub prefixes: Vec<ReceivedPrefix>,
    pub log: TransmissionLog,
}

/// Receiver state machine shared by the emulated and socket modes.
struct ProgressiveReceiver {
    segment_width: usize,
    current: Option<(u32, ReceivedPrefix)>,
    finished: Vec<ReceivedPrefix>,
    violations: u64,
}

enum ReceiverEvent {
    /// A feature segment was accepted and, in per-feature mode, needs an ACK.
    SegmentStored,
    /// A frame was finalized (per-frame mode ACKs here).
    FrameDone,
    Nothing,
}

impl ProgressiveReceiver {
    fn new(segment_width: usize) -> Self {
        ProgressiveReceiver {
            segment_width,
            current: None,
            finished: Vec::new(),
            violations: 0,
        }
    }

    fn ingest(&mut self, msg: &WireMessage) -> Vec<ReceiverEvent> {
        match msg.kind {
            MessageKind::FrameHeader => match parse_header_payload(&msg.payload) {
                Ok((index, _, width)) => {
                    let mut events = Vec::new();
                    if self.finalize_current() {
                        events.push(ReceiverEvent::FrameDone);
                    }
                    self.current =
                        Some((index, ReceivedPrefix::empty(width as usize)));
                    if width as usize != self.segment_width {
                        self.violations += 1;
                    }
                    events
                }
                Err(_) => {
                    self.violations += 1;
                    vec![ReceiverEvent::Nothing]
                }
            },
            MessageKind::FeatureSegment => match parse_segment_payload(&msg.payload) {
                Ok((index, seg_index, values)) => {
                    let ok = match &mut self.current {
                        Some((cur_index, prefix))
                            if *cur_index == index
                                && seg_index as usize == prefix.m()
                                && values.len() == self.segment_width =>
                        {
                            prefix.push_segment(&values);
                            true
                        }
                        _ => false,
                    };
                    if ok {
                        vec![ReceiverEvent::SegmentStored]
                    } else {
                        self.violations += 1;
                        vec![ReceiverEvent::Nothing]
                    }
                }
                Err(_) => {
                    self.violations += 1;
                    vec![ReceiverEvent::Nothing]
                }
            },
            MessageKind::EndOfVideo => {
                if self.finalize_current() {
                    vec![ReceiverEvent::FrameDone]
                } else {
                    vec![ReceiverEvent::Nothing]
                }
            }
            MessageKind::VideoBlob => {
                self.violations += 1;
                vec![ReceiverEvent::Nothing]
            }
        }
    }

    fn finalize_current(&mut self) -> bool {
        if let Some((_, prefix)) = self.current.take() {
            self.finished.push(prefix);
            true
        } else {
            false
        }
    }
}

/// Reconstruct every received prefix with the selected fill policy.
fn reconstruct_all(
    model: &AutoencoderModel,
    reconstructor: Reconstructor<'_>,
    prefixes: &[ReceivedPrefix],
) -> Result<Vec<Frame>, TransportError> {
    let mut frames = Vec::with_capacity(prefixes.len());
    match reconstructor {
        Reconstructor::ZeroFill => {
            for prefix in prefixes {
                let padded = zero_pad(prefix, model.segment_count, model.segment_width)?;
                frames.push(decode(model, &padded)?);
            }
        }
        Reconstructor::Temporal(predictor) => {
            let mut filler = TemporalFiller::new(predictor);
            for prefix in prefixes {
                let filled = filler.fill(prefix)?;
                frames.push(decode(model, &filled)?);
            }
        }
    }
    Ok(frames)
}

/// Transmit a video through the emulated channel pair under a per-frame
/// deadline. The frame header always goes out (so the receiver can account
/// for every frame); segments stop the moment the budget expires, making
/// truncation tail-only by construction.
pub fn send_progressive(
    video: &[Frame],
    model: &AutoencoderModel,
    reconstructor: Reconstructor<'_>,
    config: ChannelConfig,
    budget_ms: f64,
    ack: AckGranularity,
) -> Result<ProgressiveOutcome, TransportError> {
    if !(budget_ms > 0.0) {
        return Err(TransportError::BadBudget);
    }
    if let Reconstructor::Temporal(p) = reconstructor {
        if p.segment_count != model.segment_count || p.segment_width != model.segment_width {
            return Err(TransportError::Protocol(
                "predictor and autoencoder disagree on latent shape".into(),
            ));
        }
    }
    let budget_us: Micros = (budget_ms * 1000.0).floor() as Micros;
    let b = model.segment_count;
    let s = model.segment_width;

    let mut data = Channel::new(config)?;
    let mut acks = Channel::new(config)?;
    let mut receiver = ProgressiveReceiver::new(s);
    let mut now: Micros = 0;
    let mut acks_received: u64 = 0;
    let mut frame_logs = Vec::with_capacity(video.len());
    let mut total_bytes: u64 = 0;

    // Feed everything the receiver has seen by time `t`; returns ACK-channel
    // submissions made (per the granularity) so the sender can await them.
    let pump = |data: &mut Channel,
                    acks: &mut Channel,
                    receiver: &mut ProgressiveReceiver,
                    t: Micros,
                    mode: AckGranularity|
     -> Result<Vec<Micros>, TransportError> {
        let mut ack_arrivals = Vec::new();
        for delivered in data.poll_delivered(t) {
            let mut parser_msgs = Vec::new();
            // Messages arrive whole (the channel is message-preserving), so
            // parse each delivery directly.
            let mut parser = StreamParser::new();
            parser_msgs.extend(parser.push(&delivered.data));
            for msg in &parser_msgs {
                for event in receiver.ingest(msg) {
                    let ack_due = match (mode, &event) {
                        (AckGranularity::PerFeature, ReceiverEvent::SegmentStored) => true,
                        (AckGranularity::PerFrame, ReceiverEvent::FrameDone) => true,
                        _ => false,
                    };
                    if ack_due {
                        let out = acks.submit(&ACK, delivered.delivered_at)?;
                        ack_arrivals.push(out.delivery);
                    }
                }
            }
        }
        Ok(ack_arrivals)
    };

    for (index, frame) in video.iter().enumerate() {
        let latent = encode(model, frame)?;
        debug_assert_eq!(latent.segment_count(), b);
        let t0 = now;
        let header = frame_message(
            MessageKind::FrameHeader,
            &header_payload(index as u32, b as u8, s as u16),
        )?;
        let header_out = data.submit(&header, now)?;
        let mut bytes_sent = header.len() as u64;
        let mut bytes_delivered = header.len() as u64;
        let mut send_end = header_out.completion;
        let mut segments_sent = 0usize;
        let mut segments_delivered = 0usize;

        for seg in 0..b {
            if now - t0 >= budget_us {
                break;
            }
            let msg = frame_message(
                MessageKind::FeatureSegment,
                &segment_payload(index as u32, seg as u8, latent.segment(seg)),
            )?;
            let out = data.submit(&msg, now)?;
            segments_sent += 1;
            bytes_sent += msg.len() as u64;
            send_end = out.completion;
            match ack {
                AckGranularity::PerFeature => {
                    // Stop-and-wait: block until the ACK crosses back.
                    let arrivals = pump(&mut data, &mut acks, &mut receiver, out.delivery, ack)?;
                    for arrival in arrivals {
                        acks_received += 1;
                        segments_delivered += 1;
                        bytes_delivered += msg.len() as u64;
                        now = now.max(arrival);
                    }
                }
                AckGranularity::PerFrame => {
                    // Shaper-paced: next submission the instant this one
                    // clears the link.
                    now = out.completion;
                    segments_delivered += 1;
                    bytes_delivered += msg.len() as u64;
                }
            }
        }

        now = now.max(send_end);
        total_bytes += bytes_sent;
        frame_logs.push(FrameLog {
            frame_index: index,
            segments_sent,
            segments_delivered,
            bytes_sent,
            bytes_delivered,
            send_start: t0,
            send_end,
            deadline_hit: segments_sent < b,
        });
    }

    let eov = frame_message(MessageKind::EndOfVideo, &[])?;
    let eov_out = data.submit(&eov, now)?;
    total_bytes += eov.len() as u64;

    // Drain the tail: everything still in flight arrives eventually.
    let arrivals = pump(
        &mut data,
        &mut acks,
        &mut receiver,
        Micros::MAX,
        ack,
    )?;
    if ack == AckGranularity::PerFrame {
        acks_received += arrivals.len() as u64;
    }
    let _ = acks.poll_delivered(Micros::MAX);

    if receiver.finished.len() != video.len() {
        return Err(TransportError::Protocol(format!(
            "receiver finalized {} frames of {}",
            receiver.finished.len(),
            video.len()
        )));
    }
    if receiver.violations != 0 {
        return Err(TransportError::Protocol(format!(
            "{} protocol violations over a lossless channel",
            receiver.violations
        )));
    }

    let reconstructed = reconstruct_all(model, reconstructor, &receiver.finished)?;
    let log = TransmissionLog {
        frames: frame_logs,
        total_bytes,
        total_elapsed_us: eov_out.completion,
        acks_received,
    };
    Ok(ProgressiveOutcome {
        reconstructed,
        prefixes: receiver.finished,
        log,
    })
}

// ---------------------------------------------------------------------------
// Monolithic transmission

#[derive(Debug, Clone, serde::Serialize)]
pub struct MonolithicLog {
    pub bytes_sent: u64,
    pub chunks_sent: usize,
    pub send_start: Micros,
    /// Delivery time of the last chunk, when everything was submitted.
    pub last_delivery: Option<Micros>,
    pub within_budget: bool,
}

#[derive(Debug)]
pub struct MonolithicOutcome {
    /// The reassembled bitstream, present only on full in-budget delivery.
    pub delivered: Option<Vec<u8>>,
    pub log: MonolithicLog,
}

/// Stream a complete bitstream under a whole-video deadline. Success is
/// all-or-nothing: every chunk submitted within the budget AND the final
/// delivery landing inside it; otherwise the transfer counts as 0%.
pub fn send_monolithic(
    bitstream: &[u8],
    config: ChannelConfig,
    budget_ms: f64,
) -> Result<MonolithicOutcome, TransportError> {
    if !(budget_ms > 0.0) {
        return Err(TransportError::BadBudget);
    }
    let budget_us: Micros = (budget_ms * 1000.0).floor() as Micros;
    let mut data = Channel::new(config)?;
    let t0: Micros = 0;
    let mut now = t0;
    let mut bytes_sent = 0u64;
    let mut chunks_sent = 0usize;
    let mut last_delivery = None;
    let mut aborted = false;

    for chunk in bitstream.chunks(BLOB_CHUNK) {
        if now - t0 >= budget_us {
            aborted = true;
            break;
        }
        let msg = frame_message(MessageKind::VideoBlob, chunk)?;
        let out = data.submit(&msg, now)?;
        bytes_sent += msg.len() as u64;
        chunks_sent += 1;
        now = out.completion;
        last_delivery = Some(out.delivery);
    }
    if !aborted {
        let eov = frame_message(MessageKind::EndOfVideo, &[])?;
        let out = data.submit(&eov, now)?;
        bytes_sent += eov.len() as u64;
        last_delivery = Some(out.delivery);
    }

    let within_budget =
        !aborted && last_delivery.is_some_and(|d| d <= t0 + budget_us);

    let delivered = if within_budget {
        // Reassemble through the real parser for fidelity.
        let mut parser = StreamParser::new();
        let mut blob = Vec::with_capacity(bitstream.len());
        for msg in data.poll_delivered(Micros::MAX) {
            for wire in parser.push(&msg.data) {
                if wire.kind == MessageKind::VideoBlob {
                    blob.extend_from_slice(&wire.payload);
                }
            }
        }
        Some(blob)
    } else {
        None
    };

    Ok(MonolithicOutcome {
        delivered,
        log: MonolithicLog {
            bytes_sent,
            chunks_sent,
            send_start: t0,
            last_delivery,
            within_budget,
        },
    })
}

// ---------------------------------------------------------------------------
// Real-socket mode

/// Run the progressive protocol over an OS loopback TCP connection instead
/// of the emulated channel. The stream is unshaped, so nothing is dropped;
/// reconstructions must match the emulated channel at unlimited rate.
pub fn send_progressive_loopback(
    video: &[Frame],
    model: &AutoencoderModel,
    reconstructor: Reconstructor<'_>,
    ack: AckGranularity,
) -> Result<ProgressiveOutcome, TransportError> {
    use std::io::{Read, Write};
    use std::net::TcpListener;

    let b = model.segment_count;
    let s = model.segment_width;
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let n_frames = video.len();

    let receiver_thread = std::thread::spawn(move || -> Result<(Vec<ReceivedPrefix>, u64), std::io::Error> {
        let (mut sock, _) = listener.accept()?;
        let mut receiver = ProgressiveReceiver::new(s);
        let mut parser = StreamParser::new();
        let mut buf = [0u8; 4096];
        'outer: loop {
            let n = sock.read(&mut buf)?;
            if n == 0 {
                break;
            }
            for msg in parser.push(&buf[..n]) {
                let done = msg.kind == MessageKind::EndOfVideo;
                for event in receiver.ingest(&msg) {
                    let ack_due = match (ack, &event) {
                        (AckGranularity::PerFeature, ReceiverEvent::SegmentStored) => true,
                        (AckGranularity::PerFrame, ReceiverEvent::FrameDone) => true,
                        _ => false,
                    };
                    if ack_due {
                        sock.write_all(&ACK)?;
                    }
                }
                if done {
                    break 'outer;
                }
            }
        }
        Ok((receiver.finished, receiver.violations))
    });

    let mut sock = std::net::TcpStream::connect(addr)?;
    sock.set_nodelay(true)?;
    let mut ack_buf = [0u8; 3];
    let mut acks_received = 0u64;
    let mut frame_logs = Vec::with_capacity(n_frames);
    let mut total_bytes = 0u64;
    for (index, frame) in video.iter().enumerate() {
        let latent = encode(model, frame)?;
        let header = frame_message(
            MessageKind::FrameHeader,
            &header_payload(index as u32, b as u8, s as u16),
        )?;
        sock.write_all(&header)?;
        let mut bytes_sent = header.len() as u64;
        for seg in 0..b {
            let msg = frame_message(
                MessageKind::FeatureSegment,
                &segment_payload(index as u32, seg as u8, latent.segment(seg)),
            )?;
            sock.write_all(&msg)?;
            bytes_sent += msg.len() as u64;
            if ack == AckGranularity::PerFeature {
                sock.read_exact(&mut ack_buf)?;
                if ack_buf != ACK {
                    return Err(TransportError::Protocol("malformed ACK".into()));
                }
                acks_received += 1;
            }
        }
        total_bytes += bytes_sent;
        frame_logs.push(FrameLog {
            frame_index: index,
            segments_sent: b,
            segments_delivered: b,
            bytes_sent,
            bytes_delivered: bytes_sent,
            send_start: 0,
            send_end: 0,
            deadline_hit: false,
        });
    }
    let eov = frame_message(MessageKind::EndOfVideo, &[])?;
    sock.write_all(&eov)?;
    total_bytes += eov.len() as u64;

    let (prefixes, violations) = receiver_thread
        .join()
        .map_err(|_| TransportError::Protocol("receiver thread panicked".into()))??;
    if ack == AckGranularity::PerFrame {
        // Frame ACKs are not awaited; drain whatever arrived.
        sock.set_nonblocking(true)?;
        let mut drain = [0u8; 64];
        while let Ok(n) = sock.read(&mut drain) {
            if n == 0 {
                break;
            }
            acks_received += (n / 3) as u64;
        }
    }
    if violations != 0 {
        return Err(TransportError::Protocol(format!(
            "{violations} protocol violations over loopback"
        )));
    }
    if prefixes.len() != n_frames {
        return Err(TransportError::Protocol(format!(
            "receiver finalized {} frames of {n_frames}",
            prefixes.len()
        )));
    }

    let reconstructed = reconstruct_all(model, reconstructor, &prefixes)?;
    Ok(ProgressiveOutcome {
        reconstructed,
        prefixes,
        log: TransmissionLog {
            frames: frame_logs,
            total_bytes,
            total_elapsed_us: 0,
            acks_received,
        },
    })
}
