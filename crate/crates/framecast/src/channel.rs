//! Deterministic network emulation: a token-bucket rate limiter with a burst
//! allowance and fixed one-way latency, driven by a virtual microsecond
//! clock. Mirrors a `tc tbf` shaper closely enough for elapsed-time
//! experiments while staying bit-exact across platforms.
//!
//! The model is fluid: a message of n bits completes transmission the moment
//! n tokens have been consumed, starting from the later of its submission and
//! the previous completion (FIFO). Tokens are tracked in units of 1e-6 bit so
//! that accrual is exactly `rate` units per microsecond with no rounding;
//! the only rounding anywhere is the ceiling on the wait for a token deficit.
//! The channel is lossless and ordered, like the TCP transport it stands in
//! for: congestion shows up as delay, never as loss.

use std::collections::VecDeque;
use thiserror::Error;

/// Virtual time in microseconds since session start.
pub type Micros = u64;

pub const MICROS_PER_SEC: u64 = 1_000_000;

/// Tokens are bits scaled by 1e6, so they accrue at `rate_bps` per µs.
const TOKEN_SCALE: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("rate must be positive")]
    ZeroRate,
    #[error("submission at {t}us precedes previous submission at {prev}us")]
    NonMonotone { t: Micros, prev: Micros },
    #[error("unknown channel preset {0:?} (expected low, medium, or high)")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ChannelConfig {
    pub rate_bps: u64,
    pub burst_bits: u64,
    pub latency_ms: u64,
}

impl ChannelConfig {
    pub fn latency_us(&self) -> Micros {
        self.latency_ms * 1_000
    }
}

/// The three emulated network conditions, named by congestion level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Heavily congested: 1 Mbit/s, 32 kbit burst, 400 ms latency.
    High,
    /// Moderately congested: 10 Mbit/s, 64 kbit burst, 200 ms latency.
    Medium,
    /// Minimally congested: 50 Mbit/s, 128 kbit burst, 50 ms latency.
    Low,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self, ChannelError> {
        match name {
            "high" => Ok(Preset::High),
            "medium" => Ok(Preset::Medium),
            "low" => Ok(Preset::Low),
            other => Err(ChannelError::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::High => "high",
            Preset::Medium => "medium",
            Preset::Low => "low",
        }
    }

    pub fn config(&self) -> ChannelConfig {
        match self {
            Preset::High => ChannelConfig {
                rate_bps: 1_000_000,
                burst_bits: 32_000,
                latency_ms: 400,
            },
            Preset::Medium => ChannelConfig {
                rate_bps: 10_000_000,
                burst_bits: 64_000,
                latency_ms: 200,
            },
            Preset::Low => ChannelConfig {
                rate_bps: 50_000_000,
                burst_bits: 128_000,
                latency_ms: 50,
            },
        }
    }

    pub fn all() -> [Preset; 3] {
        [Preset::High, Preset::Medium, Preset::Low]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivered {
    pub data: Vec<u8>,
    pub submitted_at: Micros,
    pub delivered_at: Micros,
}

/// Transmission times for one submitted message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubmitOutcome {
    /// Instant the last bit clears the shaper.
    pub completion: Micros,
    /// Completion plus the one-way latency.
    pub delivery: Micros,
}

#[derive(Debug, Clone)]
pub struct Channel {
    config: ChannelConfig,
    /// Scaled tokens available as of `token_time`.
    tokens: u128,
    token_time: Micros,
    prev_completion: Micros,
    prev_submission: Micros,
    in_flight: VecDeque<Delivered>,
    submitted_any: bool,
}

impl Channel {
    pub fn new(config: ChannelConfig) -> Result<Self, ChannelError> {
        if config.rate_bps == 0 {
            return Err(ChannelError::ZeroRate);
        }
        Ok(Channel {
            config,
            // The bucket starts full.
            tokens: config.burst_bits as u128 * TOKEN_SCALE,
            token_time: 0,
            prev_completion: 0,
            prev_submission: 0,
            in_flight: VecDeque::new(),
            submitted_any: false,
        })
    }

    pub fn config(&self) -> ChannelConfig {
        self.config
    }

    /// Queue `data` for transmission at virtual time `t`. Submissions must
    /// be non-decreasing in `t` (one FIFO source per channel). Oversized
    /// messages are never an error; they just wait for tokens.
    pub fn submit(&mut self, data: &[u8], t: Micros) -> Result<SubmitOutcome, ChannelError> {
        if self.submitted_any && t < self.prev_submission {
            return Err(ChannelError::NonMonotone {
                t,
                prev: self.prev_submission,
            });
        }
        self.prev_submission = t;
        self.submitted_any = true;

        let start = t.max(self.prev_completion);
        // Idle accrual up to the start instant, capped at the burst size.
        let burst = self.config.burst_bits as u128 * TOKEN_SCALE;
        let accrued = self.config.rate_bps as u128 * (start - self.token_time) as u128;
        self.tokens = (self.tokens + accrued).min(burst);
        self.token_time = start;

        let need = data.len() as u128 * 8 * TOKEN_SCALE;
        let completion = if self.tokens >= need {
            self.tokens -= need;
            start
        } else {
            // Tokens accrue while the message drains; no burst cap applies
            // because the bucket never idles during the wait.
            let deficit = need - self.tokens;
            let rate = self.config.rate_bps as u128;
            let wait = deficit.div_ceil(rate);
            self.tokens = self.tokens + rate * wait - need;
            self.token_time += wait as Micros;
            start + wait as Micros
        };
        self.prev_completion = completion;

        let delivery = completion + self.config.latency_us();
        self.in_flight.push_back(Delivered {
            data: data.to_vec(),
            submitted_at: t,
            delivered_at: delivery,
        });
        Ok(SubmitOutcome {
            completion,
            delivery,
        })
    }

    /// All messages whose delivery time has passed, in submission order.
    /// Each message is returned exactly once.
    pub fn poll_delivered(&mut self, t: Micros) -> Vec<Delivered> {
        let mut out = Vec::new();
        while self
            .in_flight
            .front()
            .is_some_and(|m| m.delivered_at <= t)
        {
            out.push(self.in_flight.pop_front().unwrap());
        }
        out
    }

    /// Delivery time of the next undelivered message, if any.
    pub fn next_delivery(&self) -> Option<Micros> {
        self.in_flight.front().map(|m| m.delivered_at)
    }

    pub fn in_flight_len(&self) -> usize {
        self.in_flight.len()
    }
}
