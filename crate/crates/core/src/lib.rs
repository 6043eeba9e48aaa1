//! Sequence-decoding toolkit that fuses a black-box ASR service transcript
//! with a local model's frame-level character posteriors.
//!
//! The inference path force-aligns the service transcript onto the local
//! posteriors ([`align`]), selectively revises frame distributions toward
//! plausible service characters ([`merge`]) and beam-decodes the revised
//! matrix with a trigram LM ([`decode`], [`pipeline`]). Around that sit
//! word- and character-level combination baselines ([`baselines`]), WER/CER
//! metrics ([`metrics`]), a grid-search tuner ([`tune`]), a seeded synthetic
//! benchmark ([`synth`]) and file formats plus batch plumbing ([`io`]).
//!
//! All probability math is generic over the scalar type; `f32` matches the
//! posterior file format, `f64` is used end to end by the CLI.

pub mod align;
pub mod baselines;
pub mod decode;
pub mod error;
pub mod io;
pub mod lm;
pub mod merge;
pub mod metrics;
pub mod pipeline;
pub mod posteriors;
pub mod scalar;
pub mod synth;
pub mod tune;
pub mod types;
pub mod vocab;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use vocab::{normalize_text, Vocabulary};

/// Posterior matrix in the file-format precision.
pub type FramePosteriors32 = posteriors::FramePosteriors<f32>;
/// Posterior matrix in decoding precision.
pub type FramePosteriors64 = posteriors::FramePosteriors<f64>;
/// Alignment in decoding precision.
pub type FrameAlignment64 = align::FrameAlignment<f64>;
