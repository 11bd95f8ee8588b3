//! Propagation to the two observation points.
//!
//! The local reference receiver sees the plain sum of the chain outputs
//! through splitter and combiner. The OTA receiver sees every chain through a
//! single line-of-sight tap: common complex gain `ρ`, common path delay
//! `τ_ch = R/c`, per-element array delay `τ_p,m`, plus circular AWGN.
//!
//! Delay enters as the carrier phase `−2π f_c τ` only (narrowband model). The
//! baseband dechirp ramp a true sub-sample delay would add is deterministic
//! for fixed geometry and lands in the constant channel phase anyway;
//! [`DelayModel::SampleShift`] adds a nearest-sample shift for sensitivity
//! runs.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::model::{
    ChannelModel, ComplexSignal, DelayModel, SignalError, SystemConfig, SPEED_OF_LIGHT,
};
use crate::rng::{gaussian, SimRng};

/// `τ_p,m = m·(d/c)·sin φ`.
pub fn ula_delay(m: usize, spacing_m: f64, angle_rad: f64) -> f64 {
    m as f64 * (spacing_m / SPEED_OF_LIGHT) * angle_rad.sin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtaChannelParams {
    pub gain: Complex64,
    pub path_delay_s: f64,
    pub element_delays_s: Vec<f64>,
    pub noise_var: f64,
}

impl OtaChannelParams {
    pub fn from_config(config: &SystemConfig) -> Self {
        match config.ota_channel {
            ChannelModel::Ideal => Self {
                noise_var: config.ota_noise_var(),
                ..Self::ideal(config.num_chains)
            },
            ChannelModel::Los => Self {
                gain: Complex64::from_polar(config.ota_gain_magnitude, config.ota_gain_phase_rad),
                path_delay_s: config.rx_distance_m / SPEED_OF_LIGHT,
                element_delays_s: (0..config.num_chains)
                    .map(|m| ula_delay(m, config.element_spacing_m, config.rx_angle_rad))
                    .collect(),
                noise_var: config.ota_noise_var(),
            },
        }
    }

    /// Unit gain, no delay, no noise.
    pub fn ideal(num_chains: usize) -> Self {
        Self {
            gain: Complex64::new(1.0, 0.0),
            path_delay_s: 0.0,
            element_delays_s: vec![0.0; num_chains],
            noise_var: 0.0,
        }
    }

    pub fn total_delay_s(&self, m: usize) -> f64 {
        self.element_delays_s[m] + self.path_delay_s
    }

    /// Carrier phase `−2π f_c (τ_p,m + τ_ch)`, reduced modulo one cycle.
    pub fn carrier_phase(&self, m: usize, carrier_freq_hz: f64) -> f64 {
        -TAU * (carrier_freq_hz * self.total_delay_s(m)).fract()
    }

    /// Complex coefficient applied to chain `m`.
    pub fn coefficient(&self, m: usize, carrier_freq_hz: f64) -> Complex64 {
        self.gain * Complex64::from_polar(1.0, self.carrier_phase(m, carrier_freq_hz))
    }
}

fn check_frames(frames: &[ComplexSignal]) -> Result<(), SignalError> {
    let first = frames.first().ok_or(SignalError::Empty)?;
    for f in &frames[1..] {
        first.check_compatible(f)?;
    }
    Ok(())
}

/// `r_LOC = Σ_m s_m`.
pub fn propagate_local(frames: &[ComplexSignal]) -> Result<ComplexSignal, SignalError> {
    check_frames(frames)?;
    let mut out = frames[0].clone();
    for f in &frames[1..] {
        for (acc, x) in out.samples.iter_mut().zip(&f.samples) {
            *acc += x;
        }
    }
    Ok(out)
}

/// `r_OTA = Σ_m ρ e^{−j2πf_c(τ_p,m+τ_ch)} s_m + v`, `v ~ CN(0, σ_v²)`.
pub fn propagate_ota(
    frames: &[ComplexSignal],
    params: &OtaChannelParams,
    carrier_freq_hz: f64,
    delay_model: DelayModel,
    rng: &mut SimRng,
) -> Result<ComplexSignal, SignalError> {
    check_frames(frames)?;
    if params.element_delays_s.len() < frames.len() {
        return Err(SignalError::LengthMismatch {
            expected: frames.len(),
            actual: params.element_delays_s.len(),
        });
    }
    let len = frames[0].len();
    let fs = frames[0].sample_rate_hz;
    let mut out = ComplexSignal {
        samples: vec![Complex64::new(0.0, 0.0); len],
        sample_rate_hz: fs,
        start_time_s: frames[0].start_time_s,
    };
    for (m, frame) in frames.iter().enumerate() {
        let coef = params.coefficient(m, carrier_freq_hz);
        let shift = match delay_model {
            DelayModel::Narrowband => 0,
            DelayModel::SampleShift => (params.total_delay_s(m) * fs).round().max(0.0) as usize,
        };
        for (acc, x) in out.samples[shift.min(len)..].iter_mut().zip(&frame.samples) {
            *acc += coef * x;
        }
    }
    if params.noise_var > 0.0 {
        let half = params.noise_var / 2.0;
        for s in out.samples.iter_mut() {
            let re = gaussian(rng, half);
            let im = gaussian(rng, half);
            *s += Complex64::new(re, im);
        }
    }
    Ok(out)
}
