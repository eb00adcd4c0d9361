//! Desk-scale toolkit for deadline-constrained video frame transmission.
//!
//! The pipeline has three competing delivery strategies:
//!
//! * a progressive autoencoder ([`progressive`]) whose latent vector is split
//!   into importance-ordered segments, any prefix of which decodes to a
//!   usable frame (missing segments are zero-filled),
//! * the same codec with a temporal predictor ([`predictor`]) that fills
//!   missing latent segments from the previous frames' latents instead of
//!   zeros,
//! * a modeled monolithic codec ([`monolithic`]) with a quality ladder that
//!   only decodes from a complete, checksum-valid bitstream.
//!
//! Everything runs over a deterministic token-bucket channel emulator
//! ([`channel`]) with a framed sender/receiver protocol ([`transport`]), and
//! [`metrics`] turns transmission logs into CSV/JSON reports.

pub mod channel;
pub mod frame_io;
pub mod metrics;
pub mod monolithic;
pub mod nn;
pub mod predictor;
pub mod progressive;
pub mod transport;

pub use channel::{ChannelConfig, Preset};
pub use frame_io::{Frame, FrameSequence};
pub use progressive::{AutoencoderModel, FeatureVector, ReceivedPrefix};

