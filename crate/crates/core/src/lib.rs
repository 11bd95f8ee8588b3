//! Seeded simulator and analysis library for transmit-side phase calibration
//! of a fully digital MIMO array.
//!
//! A run transmits one chirp per TX chain in a TDMA frame every
//! `cycle_interval_s`, observes each chain's phase at a wired local reference
//! receiver and at an over-the-air receiver, feeds the estimates into a
//! smoothed calibrator and reports RMS cycle-to-cycle jitter before and after
//! calibration.
//!
//! The pipeline stages live in their own modules:
//!
//! - [`model`]: configuration, signal buffers and phase estimates
//! - [`waveform`]: baseband chirp and TDMA frame schedule
//! - [`impairments`]: oscillator phase noise, CFO, frontend phase and drift
//! - [`channel`]: local (wired sum) and OTA (LOS array + AWGN) propagation
//! - [`receiver`]: downconversion, slot extraction, dechirp, phase estimation
//! - [`calibration`]: smoothed calibrator, precoding, feedback datagrams
//! - [`metrics`]: jitter, KDE, coherence factor and the report
//! - [`campaign`]: config files, scenarios, the cycle loop and exporters

pub mod calibration;
pub mod campaign;
pub mod channel;
mod error;
pub mod impairments;
pub mod metrics;
pub mod model;
pub mod par;
pub mod receiver;
pub mod rng;
pub mod selftest;
pub mod waveform;

pub use error::{Error, Result};
pub use model::{ComplexSignal, PhaseEstimate, ReceiverKind, SystemConfig};
