//! Shared domain types: the validated run configuration, complex baseband
//! buffers and per-chain phase estimates.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Default smoothing window of the calibrator (number of past estimates).
pub const DEFAULT_SMOOTHING_WINDOW: usize = 10;

/// A configuration value violates one of the documented invariants.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Shape errors raised when signals are combined or sliced.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("sample rate mismatch: {expected} Hz vs {actual} Hz")]
    SampleRateMismatch { expected: f64, actual: f64 },

    #[error("slot index {index} out of range for {num_slots} slots")]
    SlotOutOfRange { index: usize, num_slots: usize },

    #[error("frame has {actual} samples, schedule needs {required}")]
    FrameTooShort { required: usize, actual: usize },

    #[error("empty signal")]
    Empty,
}

/// Which observation point produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverKind {
    Local,
    Ota,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 2] = [ReceiverKind::Local, ReceiverKind::Ota];

    pub fn as_str(self) -> &'static str {
        match self {
            ReceiverKind::Local => "local",
            ReceiverKind::Ota => "ota",
        }
    }
}

impl std::fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shape of the slow frontend drift term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftMode {
    /// `A·(1 − exp(−t/τ_w))`, a warm-up settle.
    #[default]
    Exponential,
    /// `A·t/τ_w`, the `τ_w → ∞` limit at fixed initial slope.
    Linear,
}

/// How the oscillator phase excursion behaves between bursts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OscillatorMode {
    /// The excursion restarts from the shared reference at the start of each
    /// chain's burst; only the in-burst random walk is observed.
    #[default]
    Locked,
    /// The Wiener state accumulates through the whole frame and idle gap.
    Free,
}

/// Discretization of the slot time average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Unwrap per-sample arguments, take the mean, re-wrap.
    #[default]
    UnwrapMean,
    /// Argument of the complex sum of the system function.
    Circular,
}

/// How propagation delay enters the OTA channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayModel {
    /// Carrier-phase rotation only.
    #[default]
    Narrowband,
    /// Carrier-phase rotation plus a nearest-sample baseband shift.
    SampleShift,
}

/// OTA channel geometry switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    /// Single line-of-sight tap with ULA geometry.
    #[default]
    Los,
    /// Unit gain, zero delay.
    Ideal,
}

/// Per-TX-chain impairment knobs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainParams {
    pub theta_rf_rad: f64,
    pub cfo_hz: f64,
    pub wiener_rate_rad2_per_s: f64,
    pub white_phase_var_rad2: f64,
    pub drift_amplitude_rad: f64,
    pub drift_tau_s: f64,
    pub drift_mode: DriftMode,
}

impl ChainParams {
    /// No impairments at all.
    pub fn ideal() -> Self {
        Self {
            drift_tau_s: 1.0,
            ..Self::default()
        }
    }
}

/// Receiver frontend knobs (`φ_RF`, synthesizer offset, oscillator white phase).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RxParams {
    pub phase_rad: f64,
    pub cfo_hz: f64,
    pub white_var_rad2: f64,
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub sample_rate_hz: f64,
    pub num_chains: usize,
    pub num_chirp_samples: usize,
    pub guard_samples: usize,
    pub num_cycles: usize,
    pub cycle_interval_s: f64,
    pub element_spacing_m: f64,
    pub rx_distance_m: f64,
    pub rx_angle_rad: f64,
    /// Metadata only; chirp power is normalized to one.
    pub tx_power_dbm: f64,
    pub ota_snr_db: f64,
    pub ota_awgn: bool,
    pub ota_channel: ChannelModel,
    pub ota_gain_magnitude: f64,
    pub ota_gain_phase_rad: f64,
    pub rng_seed: u64,
    pub smoothing_window: usize,
    pub oscillator_mode: OscillatorMode,
    pub estimator: EstimatorKind,
    pub delay_model: DelayModel,
    pub local_rx: RxParams,
    pub ota_rx: RxParams,
    pub chains: Vec<ChainParams>,
}

impl SystemConfig {
    /// High-bandwidth measurement parameters with every impairment switched
    /// off. Useful as a starting point in tests.
    pub fn high_bandwidth_ideal() -> Self {
        let carrier = 3.75e9;
        Self {
            carrier_freq_hz: carrier,
            bandwidth_hz: 40e6,
            sample_rate_hz: 80e6,
            num_chains: 4,
            num_chirp_samples: 1500,
            guard_samples: 500,
            num_cycles: 10_000,
            cycle_interval_s: 50e-3,
            element_spacing_m: half_wavelength(carrier),
            rx_distance_m: 2.0,
            rx_angle_rad: 0.0,
            tx_power_dbm: 0.0,
            ota_snr_db: 30.0,
            ota_awgn: true,
            ota_channel: ChannelModel::Los,
            ota_gain_magnitude: 1.0,
            ota_gain_phase_rad: 0.0,
            rng_seed: 0,
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            oscillator_mode: OscillatorMode::Locked,
            estimator: EstimatorKind::UnwrapMean,
            delay_model: DelayModel::Narrowband,
            local_rx: RxParams::default(),
            ota_rx: RxParams::default(),
            chains: vec![ChainParams::ideal(); 4],
        }
    }

    /// Chirp duration `T = N / f_s`.
    pub fn chirp_duration_s(&self) -> f64 {
        self.num_chirp_samples as f64 / self.sample_rate_hz
    }

    pub fn slot_length_samples(&self) -> usize {
        self.num_chirp_samples + 2 * self.guard_samples
    }

    pub fn frame_length_samples(&self) -> usize {
        self.num_chains * self.slot_length_samples()
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_length_samples() as f64 / self.sample_rate_hz
    }

    /// OTA noise variance for unit signal power, zero when AWGN is off.
    pub fn ota_noise_var(&self) -> f64 {
        if self.ota_awgn {
            10f64.powf(-self.ota_snr_db / 10.0)
        } else {
            0.0
        }
    }

    /// Checks every invariant; see [`validate`].
    pub fn validate(self) -> Result<Self, ConfigError> {
        validate(self)
    }
}

/// `c / (2 f_c)`.
pub fn half_wavelength(carrier_freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * carrier_freq_hz)
}

fn require(cond: bool, field: &str, reason: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::new(field, reason()))
    }
}

fn finite(value: f64, field: &str) -> Result<(), ConfigError> {
    require(value.is_finite(), field, || {
        format!("must be finite, got {value}")
    })
}

/// Returns the configuration unchanged if it satisfies every invariant.
///
/// Validation is idempotent: a config that passes once passes again and is
/// returned as-is.
pub fn validate(config: SystemConfig) -> Result<SystemConfig, ConfigError> {
    let c = &config;
    finite(c.carrier_freq_hz, "carrier_freq_hz")?;
    require(c.carrier_freq_hz > 0.0, "carrier_freq_hz", || {
        "carrier frequency must be positive".into()
    })?;
    finite(c.sample_rate_hz, "sample_rate_hz")?;
    require(c.sample_rate_hz > 0.0, "sample_rate_hz", || {
        "sample rate must be positive".into()
    })?;
    finite(c.bandwidth_hz, "bandwidth_hz")?;
    require(c.bandwidth_hz > 0.0, "bandwidth_hz", || {
        "bandwidth must be positive".into()
    })?;
    require(c.bandwidth_hz <= c.sample_rate_hz, "bandwidth_hz", || {
        format!(
            "B ≤ f_s required (bandwidth {} Hz exceeds sample rate {} Hz)",
            c.bandwidth_hz, c.sample_rate_hz
        )
    })?;
    require(c.num_chirp_samples >= 2, "num_chirp_samples", || {
        format!(
            "at least 2 chirp samples required, got {}",
            c.num_chirp_samples
        )
    })?;
    require(c.num_chains >= 1, "num_chains", || {
        "at least one TX chain required".into()
    })?;
    require(c.num_chains <= 256, "num_chains", || {
        format!(
            "at most 256 chains fit the feedback format, got {}",
            c.num_chains
        )
    })?;
    require(c.num_cycles >= 2, "num_cycles", || {
        format!("at least 2 cycles required, got {}", c.num_cycles)
    })?;
    require(c.num_cycles <= u32::MAX as usize, "num_cycles", || {
        "cycle index must fit in 32 bits".into()
    })?;
    finite(c.cycle_interval_s, "cycle_interval_s")?;
    require(
        c.cycle_interval_s >= c.frame_duration_s(),
        "cycle_interval_s",
        || {
            format!(
                "cycle interval {} s shorter than frame duration {} s",
                c.cycle_interval_s,
                c.frame_duration_s()
            )
        },
    )?;
    finite(c.element_spacing_m, "element_spacing_m")?;
    require(c.element_spacing_m > 0.0, "element_spacing_m", || {
        "element spacing must be positive".into()
    })?;
    finite(c.rx_distance_m, "rx_distance_m")?;
    require(c.rx_distance_m > 0.0, "rx_distance_m", || {
        "receiver distance must be positive".into()
    })?;
    finite(c.rx_angle_rad, "rx_angle_rad")?;
    require(c.rx_angle_rad.abs() <= FRAC_PI_2, "rx_angle_rad", || {
        format!("|angle| ≤ π/2 required, got {}", c.rx_angle_rad)
    })?;
    finite(c.ota_snr_db, "ota_snr_db")?;
    finite(c.ota_gain_magnitude, "ota_gain_magnitude")?;
    require(c.ota_gain_magnitude >= 0.0, "ota_gain_magnitude", || {
        "channel gain magnitude must be non-negative".into()
    })?;
    finite(c.ota_gain_phase_rad, "ota_gain_phase_rad")?;
    require(c.smoothing_window >= 1, "smoothing_window", || {
        "smoothing window must hold at least one estimate".into()
    })?;
    for (name, rx) in [("local_rx", &c.local_rx), ("ota_rx", &c.ota_rx)] {
        finite(rx.phase_rad, &format!("{name}.phase_rad"))?;
        finite(rx.cfo_hz, &format!("{name}.cfo_hz"))?;
        finite(rx.white_var_rad2, &format!("{name}.white_var_rad2"))?;
        require(
            rx.white_var_rad2 >= 0.0,
            &format!("{name}.white_var_rad2"),
            || "variance must be non-negative".into(),
        )?;
    }
    require(c.chains.len() == c.num_chains, "chain", || {
        format!(
            "{} chain blocks given for num_chains = {}",
            c.chains.len(),
            c.num_chains
        )
    })?;
    for (m, ch) in c.chains.iter().enumerate() {
        let field = |k: &str| format!("chain[{m}].{k}");
        finite(ch.theta_rf_rad, &field("theta_rf_rad"))?;
        finite(ch.cfo_hz, &field("cfo_hz"))?;
        finite(ch.wiener_rate_rad2_per_s, &field("wiener_rate_rad2_per_s"))?;
        require(
            ch.wiener_rate_rad2_per_s >= 0.0,
            &field("wiener_rate_rad2_per_s"),
            || "Wiener rate must be non-negative".into(),
        )?;
        finite(ch.white_phase_var_rad2, &field("white_phase_var_rad2"))?;
        require(
            ch.white_phase_var_rad2 >= 0.0,
            &field("white_phase_var_rad2"),
            || "white phase variance must be non-negative".into(),
        )?;
        finite(ch.drift_amplitude_rad, &field("drift_amplitude_rad"))?;
        finite(ch.drift_tau_s, &field("drift_tau_s"))?;
        require(ch.drift_tau_s > 0.0, &field("drift_tau_s"), || {
            "drift time constant must be positive".into()
        })?;
    }
    Ok(config)
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// A sample-rate-annotated buffer of complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    /// Offset of sample 0 within the frame.
    pub start_time_s: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
            start_time_s: 0.0,
        }
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate_hz)
    }

    pub fn with_start_time(mut self, start_time_s: f64) -> Self {
        self.start_time_s = start_time_s;
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Time of sample `n` relative to the frame start.
    pub fn time_of(&self, n: usize) -> f64 {
        self.start_time_s + n as f64 / self.sample_rate_hz
    }

    /// `Σ |x[n]|²`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub(crate) fn check_compatible(&self, other: &ComplexSignal) -> Result<(), SignalError> {
        if self.len() != other.len() {
            return Err(SignalError::LengthMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        if self.sample_rate_hz != other.sample_rate_hz {
            return Err(SignalError::SampleRateMismatch {
                expected: self.sample_rate_hz,
                actual: other.sample_rate_hz,
            });
        }
        Ok(())
    }
}

/// One phase observation of chain `m` in cycle `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    pub chain_index: usize,
    pub cycle_index: usize,
    /// Wrapped to `(−π, π]`.
    pub theta_rad: f64,
    /// `theta_rad / (2π f_c)`.
    pub jitter_s: f64,
    pub receiver: ReceiverKind,
}

impl PhaseEstimate {
    /// Wraps `theta_rad` and derives the jitter from `carrier_freq_hz`.
    pub fn new(
        chain_index: usize,
        cycle_index: usize,
        theta_rad: f64,
        carrier_freq_hz: f64,
        receiver: ReceiverKind,
    ) -> Self {
        let theta_rad = wrap_phase(theta_rad);
        Self {
            chain_index,
            cycle_index,
            theta_rad,
            jitter_s: theta_rad / (TAU * carrier_freq_hz),
            receiver,
        }
    }
}
