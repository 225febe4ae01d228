//! Airborne-sound bearing fault detection.
//!
//! The crate covers the whole processing chain used to tell healthy from
//! damaged rolling bearings by listening to them:
//!
//! * [`dsp`]: windowed DFT power spectrum, Mel filterbank energies and
//!   cepstral coefficients computed over non-overlapping frames.
//! * [`synth`]: a seeded generator of drivetrain sound (shaft harmonics,
//!   broadband noise and resonance-exciting fault impacts) with a default
//!   six-microphone campaign.
//! * [`audio`]: recordings, 16-bit PCM WAV I/O and rotational-speed sidecars.
//! * [`dataset`]: manifests, rotational-frequency gating, train/test splits,
//!   z-score normalization and the binary feature cache.
//! * [`classifier`]: a feed-forward MLP trained with cross-entropy and Adam.
//! * [`eval`]: confusion matrices, column-normalized metrics and scatter export.
//!
//! Data-parallel loops (frame extraction, channel synthesis, batch inference,
//! per-chunk gradients) go through [`Execution`]. With the `parallel` feature
//! disabled every path runs sequentially and produces identical results.

pub mod audio;
pub mod classifier;
pub mod dataset;
pub mod dsp;
pub mod eval;
pub mod synth;

mod error;
mod exec;
mod label;

pub use error::{Error, ErrorKind, Result};
pub use exec::Execution;
pub use label::Label;
