//! Baseband chirp synchronization signal and TDMA frame assembly.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;

use crate::model::{ComplexSignal, SignalError, SystemConfig};

/// Slot layout of one TDMA frame. Chain `m` owns
/// `[m·slot, (m+1)·slot)` and transmits its chirp after `guard` zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSchedule {
    pub slot_length_samples: usize,
    pub slot_offsets: Vec<usize>,
    pub frame_length_samples: usize,
    pub guard_samples: usize,
    pub chirp_samples: usize,
}

impl FrameSchedule {
    pub fn new(num_chains: usize, chirp_samples: usize, guard_samples: usize) -> Self {
        let slot = chirp_samples + 2 * guard_samples;
        Self {
            slot_length_samples: slot,
            slot_offsets: (0..num_chains).map(|m| m * slot).collect(),
            frame_length_samples: num_chains * slot,
            guard_samples,
            chirp_samples,
        }
    }

    pub fn from_config(config: &SystemConfig) -> Self {
        Self::new(
            config.num_chains,
            config.num_chirp_samples,
            config.guard_samples,
        )
    }

    pub fn num_slots(&self) -> usize {
        self.slot_offsets.len()
    }

    /// Sample range carrying chain `m`'s chirp.
    pub fn chirp_range(&self, m: usize) -> Result<Range<usize>, SignalError> {
        let offset = *self
            .slot_offsets
            .get(m)
            .ok_or(SignalError::SlotOutOfRange {
                index: m,
                num_slots: self.num_slots(),
            })?;
        let start = offset + self.guard_samples;
        Ok(start..start + self.chirp_samples)
    }
}

/// Samples of `x_BB(t) = exp(jπ(B/T)t²)` at `t = n/f_s`, `T = N/f_s`.
pub fn generate_chirp(bandwidth_hz: f64, sample_rate_hz: f64, num_samples: usize) -> ComplexSignal {
    let samples = (0..num_samples)
        .map(|n| {
            Complex64::from_polar(
                1.0,
                chirp_phase(bandwidth_hz, sample_rate_hz, num_samples, n),
            )
        })
        .collect();
    ComplexSignal::new(samples, sample_rate_hz)
}

/// Instantaneous phase `π(B/T)(n·T_s)²` of chirp sample `n`.
pub fn chirp_phase(bandwidth_hz: f64, sample_rate_hz: f64, num_samples: usize, n: usize) -> f64 {
    // (B/T)(n/fs)² with T = N/fs reduces to B·n²/(N·fs)
    let n = n as f64;
    PI * bandwidth_hz * n * n / (num_samples as f64 * sample_rate_hz)
}

/// Places the chirp into each chain's slot of an otherwise silent frame.
pub fn build_frame(
    config: &SystemConfig,
    chirp: &ComplexSignal,
) -> Result<(Vec<ComplexSignal>, FrameSchedule), SignalError> {
    if chirp.len() != config.num_chirp_samples {
        return Err(SignalError::LengthMismatch {
            expected: config.num_chirp_samples,
            actual: chirp.len(),
        });
    }
    let schedule = FrameSchedule::from_config(config);
    let frames = (0..config.num_chains)
        .map(|m| {
            let mut frame =
                ComplexSignal::zeros(schedule.frame_length_samples, chirp.sample_rate_hz);
            let range = schedule.chirp_range(m)?;
            frame.samples[range].copy_from_slice(&chirp.samples);
            Ok(frame)
        })
        .collect::<Result<Vec<_>, SignalError>>()?;
    Ok((frames, schedule))
}
