//! TOML configuration files.
//!
//! Flat top-level keys carry the system parameters; `[local_rx]` and
//! `[ota_rx]` tables describe the receiver frontends and one `[[chain]]`
//! table per TX chain lists its impairment knobs. Omitted optional keys take
//! the defaults listed in [`OPTIONAL_KEYS`]. See `configs/table1_high.cfg`.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;
use toml::Table;

use crate::model::{
    half_wavelength, ChainParams, ChannelModel, ConfigError, DelayModel, EstimatorKind,
    OscillatorMode, RxParams, SystemConfig, DEFAULT_SMOOTHING_WINDOW,
};
use crate::Error;

/// Keys every file must define.
pub const REQUIRED_KEYS: &[&str] = &[
    "carrier_freq_hz",
    "bandwidth_hz",
    "sample_rate_hz",
    "num_chains",
    "num_chirp_samples",
    "guard_samples",
    "num_cycles",
    "cycle_interval_s",
    "rx_distance_m",
    "rx_angle_rad",
];

/// Optional top-level keys and their defaults.
pub const OPTIONAL_KEYS: &[(&str, &str)] = &[
    ("element_spacing_m", "c / (2 f_c)"),
    ("tx_power_dbm", "0"),
    ("ota_snr_db", "30"),
    ("ota_awgn", "true"),
    ("ota_channel", "\"los\""),
    ("ota_gain_magnitude", "1"),
    ("ota_gain_phase_rad", "0"),
    ("rng_seed", "0"),
    ("smoothing_window", "10"),
    ("oscillator_mode", "\"locked\""),
    ("estimator", "\"unwrap_mean\""),
    ("delay_model", "\"narrowband\""),
    ("local_rx", "all zero"),
    ("ota_rx", "all zero"),
    ("chain", "ideal chains"),
];

const CHAIN_KEYS: &[&str] = &[
    "theta_rf_rad",
    "cfo_hz",
    "wiener_rate_rad2_per_s",
    "white_phase_var_rad2",
    "drift_amplitude_rad",
    "drift_tau_s",
    "drift_mode",
];

const RX_KEYS: &[&str] = &["phase_rad", "cfo_hz", "white_var_rad2"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error: {0}")]
    Syntax(String),

    #[error("missing required keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("invalid configuration: {0}")]
    Invalid(#[from] ConfigError),
}

#[derive(Deserialize)]
struct RawChain {
    #[serde(default)]
    theta_rf_rad: f64,
    #[serde(default)]
    cfo_hz: f64,
    #[serde(default)]
    wiener_rate_rad2_per_s: f64,
    #[serde(default)]
    white_phase_var_rad2: f64,
    #[serde(default)]
    drift_amplitude_rad: f64,
    drift_tau_s: Option<f64>,
    #[serde(default)]
    drift_mode: crate::model::DriftMode,
}

#[derive(Deserialize)]
struct RawConfig {
    carrier_freq_hz: f64,
    bandwidth_hz: f64,
    sample_rate_hz: f64,
    num_chains: usize,
    num_chirp_samples: usize,
    guard_samples: usize,
    num_cycles: usize,
    cycle_interval_s: f64,
    rx_distance_m: f64,
    rx_angle_rad: f64,
    element_spacing_m: Option<f64>,
    tx_power_dbm: Option<f64>,
    ota_snr_db: Option<f64>,
    ota_awgn: Option<bool>,
    ota_channel: Option<ChannelModel>,
    ota_gain_magnitude: Option<f64>,
    ota_gain_phase_rad: Option<f64>,
    rng_seed: Option<u64>,
    smoothing_window: Option<usize>,
    oscillator_mode: Option<OscillatorMode>,
    estimator: Option<EstimatorKind>,
    delay_model: Option<DelayModel>,
    local_rx: Option<RxParams>,
    ota_rx: Option<RxParams>,
    #[serde(default)]
    chain: Vec<RawChain>,
}

fn check_keys<'a>(
    table: &Table,
    allowed: impl Iterator<Item = &'a str> + Clone,
    prefix: &str,
) -> Result<(), ParseError> {
    match table
        .keys()
        .find(|k| !allowed.clone().any(|a| a == k.as_str()))
    {
        Some(k) => Err(ParseError::UnknownKey(format!("{prefix}{k}"))),
        None => Ok(()),
    }
}

fn check_subtable(value: &toml::Value, allowed: &[&str], prefix: &str) -> Result<(), ParseError> {
    match value {
        toml::Value::Table(t) => check_keys(t, allowed.iter().copied(), prefix),
        other => Err(ParseError::TypeMismatch(format!(
            "`{}` must be a table, found {}",
            prefix.trim_end_matches('.'),
            other.type_str()
        ))),
    }
}

/// Parses and validates a configuration file's text.
pub fn parse_config(text: &str) -> Result<SystemConfig, ParseError> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ParseError::Syntax(e.message().to_string()))?;

    let top = REQUIRED_KEYS
        .iter()
        .copied()
        .chain(OPTIONAL_KEYS.iter().map(|(k, _)| *k));
    check_keys(&table, top, "")?;
    for rx in ["local_rx", "ota_rx"] {
        if let Some(v) = table.get(rx) {
            check_subtable(v, RX_KEYS, &format!("{rx}."))?;
        }
    }
    if let Some(chains) = table.get("chain") {
        let toml::Value::Array(chains) = chains else {
            return Err(ParseError::TypeMismatch(
                "`chain` must be an array of tables".into(),
            ));
        };
        for (m, c) in chains.iter().enumerate() {
            check_subtable(c, CHAIN_KEYS, &format!("chain[{m}]."))?;
        }
    }

    let missing: Vec<String> = REQUIRED_KEYS
        .iter()
        .filter(|k| !table.contains_key(**k))
        .map(|k| k.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(ParseError::MissingKeys(missing));
    }

    let raw: RawConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| ParseError::TypeMismatch(e.message().to_string()))?;

    let chains = if raw.chain.is_empty() {
        vec![ChainParams::ideal(); raw.num_chains]
    } else {
        raw.chain
            .into_iter()
            .map(|c| ChainParams {
                theta_rf_rad: c.theta_rf_rad,
                cfo_hz: c.cfo_hz,
                wiener_rate_rad2_per_s: c.wiener_rate_rad2_per_s,
                white_phase_var_rad2: c.white_phase_var_rad2,
                drift_amplitude_rad: c.drift_amplitude_rad,
                drift_tau_s: c.drift_tau_s.unwrap_or(1.0),
                drift_mode: c.drift_mode,
            })
            .collect()
    };

    let config = SystemConfig {
        carrier_freq_hz: raw.carrier_freq_hz,
        bandwidth_hz: raw.bandwidth_hz,
        sample_rate_hz: raw.sample_rate_hz,
        num_chains: raw.num_chains,
        num_chirp_samples: raw.num_chirp_samples,
        guard_samples: raw.guard_samples,
        num_cycles: raw.num_cycles,
        cycle_interval_s: raw.cycle_interval_s,
        element_spacing_m: raw
            .element_spacing_m
            .unwrap_or_else(|| half_wavelength(raw.carrier_freq_hz)),
        rx_distance_m: raw.rx_distance_m,
        rx_angle_rad: raw.rx_angle_rad,
        tx_power_dbm: raw.tx_power_dbm.unwrap_or(0.0),
        ota_snr_db: raw.ota_snr_db.unwrap_or(30.0),
        ota_awgn: raw.ota_awgn.unwrap_or(true),
        ota_channel: raw.ota_channel.unwrap_or_default(),
        ota_gain_magnitude: raw.ota_gain_magnitude.unwrap_or(1.0),
        ota_gain_phase_rad: raw.ota_gain_phase_rad.unwrap_or(0.0),
        rng_seed: raw.rng_seed.unwrap_or(0),
        smoothing_window: raw.smoothing_window.unwrap_or(DEFAULT_SMOOTHING_WINDOW),
        oscillator_mode: raw.oscillator_mode.unwrap_or_default(),
        estimator: raw.estimator.unwrap_or_default(),
        delay_model: raw.delay_model.unwrap_or_default(),
        local_rx: raw.local_rx.unwrap_or_default(),
        ota_rx: raw.ota_rx.unwrap_or_default(),
        chains,
    };
    Ok(config.validate()?)
}

/// Reads and parses a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig, Error> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_config(&text)?)
}
