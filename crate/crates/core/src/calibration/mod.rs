//! Smoothed calibration controller and the TX precoder it drives.
//!
//! Each chain's precoding phase is the mean of its last `window` phase
//! estimates (all available ones while the buffer fills). Estimates reach the
//! controller over a [`FeedbackLink`]; an estimate from cycle `l` first
//! affects the precoding used in cycle `l + 1`.

mod feedback;
mod transport;

use std::collections::VecDeque;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{wrap_phase, ComplexSignal, PhaseEstimate};

pub use feedback::{
    decode_feedback, encode_feedback, FeedbackError, FeedbackMessage, FEEDBACK_LEN, FEEDBACK_MAGIC,
    FEEDBACK_VERSION,
};
pub use transport::{FeedbackLink, InProcLink, UdpLink};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("chain index {chain} out of range for {num_chains} chains")]
    ChainOutOfRange { chain: usize, num_chains: usize },

    #[error("{actual} precoding phases for {expected} chains")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Mean of phases unwrapped relative to the newest (last) entry, re-wrapped.
/// Values straddling `±π` average to a point near `±π`, not near zero.
pub fn circular_safe_mean<'a>(
    values: impl DoubleEndedIterator<Item = &'a f64> + Clone,
) -> Option<f64> {
    let newest = *values.clone().next_back()?;
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), &v| {
        (s + newest + wrap_phase(v - newest), n + 1)
    });
    Some(wrap_phase(sum / n as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedCalibrator {
    window: usize,
    history: Vec<VecDeque<f64>>,
    precoding: Vec<f64>,
}

impl SmoothedCalibrator {
    pub fn new(num_chains: usize, window: usize) -> Self {
        assert!(window >= 1, "smoothing window must be at least 1");
        Self {
            window,
            history: vec![VecDeque::with_capacity(window + 1); num_chains],
            precoding: vec![0.0; num_chains],
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn num_chains(&self) -> usize {
        self.precoding.len()
    }

    /// Current precoding phase per chain, each in `(−π, π]`.
    pub fn precoding(&self) -> &[f64] {
        &self.precoding
    }

    /// Buffered estimates of chain `m`, oldest first.
    pub fn history(&self, m: usize) -> impl Iterator<Item = f64> + '_ {
        self.history[m].iter().copied()
    }

    /// Pushes an estimate and returns the chain's new precoding phase.
    pub fn update(&mut self, est: &PhaseEstimate) -> Result<f64, CalibrationError> {
        self.update_phase(est.chain_index, est.theta_rad)
    }

    pub fn update_phase(&mut self, chain: usize, theta_rad: f64) -> Result<f64, CalibrationError> {
        let num_chains = self.num_chains();
        let buf = self
            .history
            .get_mut(chain)
            .ok_or(CalibrationError::ChainOutOfRange { chain, num_chains })?;
        buf.push_back(theta_rad);
        if buf.len() > self.window {
            buf.pop_front();
        }
        let p = circular_safe_mean(buf.iter()).unwrap_or(0.0);
        self.precoding[chain] = p;
        Ok(p)
    }
}

/// Multiplies chain `m`'s frame by `exp(−j·p_m)`.
pub fn apply_precoding(
    frames: &[ComplexSignal],
    phases: &[f64],
) -> Result<Vec<ComplexSignal>, CalibrationError> {
    if frames.len() != phases.len() {
        return Err(CalibrationError::LengthMismatch {
            expected: frames.len(),
            actual: phases.len(),
        });
    }
    Ok(frames
        .iter()
        .zip(phases)
        .map(|(f, &p)| {
            let rot = Complex64::from_polar(1.0, -p);
            ComplexSignal {
                samples: f.samples.iter().map(|s| s * rot).collect(),
                sample_rate_hz: f.sample_rate_hz,
                start_time_s: f.start_time_s,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ReceiverKind;
    use std::f64::consts::PI;

    #[test]
    fn constant_history() {
        let mut cal = SmoothedCalibrator::new(1, 10);
        for _ in 0..15 {
            cal.update_phase(0, 0.5).unwrap();
        }
        assert!((cal.precoding()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn startup_averages_available_entries() {
        let mut cal = SmoothedCalibrator::new(2, 10);
        for th in [0.1, 0.2, 0.3] {
            cal.update_phase(1, th).unwrap();
        }
        assert!((cal.precoding()[1] - 0.2).abs() < 1e-15);
        assert_eq!(cal.precoding()[0], 0.0);
    }

    #[test]
    fn linear_drift_window_mean() {
        let mut cal = SmoothedCalibrator::new(1, 10);
        for l in 0..20 {
            cal.update_phase(0, 0.01 * l as f64).unwrap();
        }
        assert_eq!(cal.history(0).count(), 10);
        assert!((cal.precoding()[0] - 0.145).abs() < 1e-14);
    }

    #[test]
    fn window_straddling_pi() {
        let mut cal = SmoothedCalibrator::new(1, 4);
        for th in [PI - 0.1, -PI + 0.1, PI - 0.05, -PI + 0.05] {
            cal.update_phase(0, th).unwrap();
        }
        assert!((cal.precoding()[0].abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_chain() {
        let mut cal = SmoothedCalibrator::new(2, 10);
        let est = PhaseEstimate::new(2, 0, 0.1, 1e9, ReceiverKind::Local);
        assert_eq!(
            cal.update(&est),
            Err(CalibrationError::ChainOutOfRange {
                chain: 2,
                num_chains: 2
            })
        );
    }

    #[test]
    fn precoding_cases() {
        let ones = ComplexSignal::new(vec![Complex64::new(1.0, 0.0); 3], 1.0);
        let frames = vec![ones.clone(), ones.clone()];
        assert_eq!(apply_precoding(&frames, &[0.0, 0.0]).unwrap(), frames);
        let flipped = apply_precoding(&frames, &[PI, PI]).unwrap();
        for f in &flipped {
            for s in &f.samples {
                assert!((s - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
            }
        }
        assert!(apply_precoding(&frames, &[0.0]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn precoding_stays_wrapped_and_buffer_bounded(
                window in 1usize..16,
                thetas in proptest::collection::vec(-PI..PI, 1..60),
            ) {
                let mut cal = SmoothedCalibrator::new(1, window);
                for th in &thetas {
                    let p = cal.update_phase(0, *th).unwrap();
                    prop_assert!(p > -PI && p <= PI);
                    prop_assert!(cal.history(0).count() <= window);
                }
            }

            #[test]
            fn linear_drift_residual_is_constant(slope in -0.2f64..0.2, offset in -3.0f64..3.0) {
                let window = 10;
                let mut cal = SmoothedCalibrator::new(1, window);
                let mut residuals = Vec::new();
                for l in 0..60 {
                    let theta = wrap_phase(offset + slope * l as f64);
                    if l >= window {
                        residuals.push(wrap_phase(theta - cal.precoding()[0]));
                    }
                    cal.update_phase(0, theta).unwrap();
                }
                let want = slope * (window as f64 + 1.0) / 2.0;
                for r in residuals {
                    prop_assert!((r - want).abs() < 1e-12);
                }
            }
        }
    }
}
