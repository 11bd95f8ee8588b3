//! Named scenarios: transformations applied to a loaded configuration.

use std::fmt;
use std::str::FromStr;

use crate::model::{ChainParams, ChannelModel, DriftMode, RxParams, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// The configuration as loaded.
    Default,
    /// High-bandwidth framing (B = 40 MHz, f_s = 80 MHz).
    Table1HighBw,
    /// Low-bandwidth framing (B = 2 MHz, f_s = 4 MHz).
    Table1LowBw,
    /// Every impairment, channel effect and noise source off.
    Clean,
    /// Clean, plus `θ_RF,m = 0.1·(m+1)` and the LOS geometry.
    ConstPhase,
    /// Clean LOS, plus a linear drift of `0.30 + 0.04·m` rad/s per chain.
    DriftOnly,
    /// Clean LOS, plus an exponential −10° warm-up with `τ_m = 40 + 10·m` s.
    Warmup,
}

/// Phase offset of the OTA receiver frontend in the `const-phase` scenario.
pub const CONST_PHASE_RX_OFFSET_RAD: f64 = 0.25;

/// Linear drift slope of chain `m` in the `drift-only` scenario (rad/s).
pub fn drift_only_slope(m: usize) -> f64 {
    0.30 + 0.04 * m as f64
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Default,
        Scenario::Table1HighBw,
        Scenario::Table1LowBw,
        Scenario::Clean,
        Scenario::ConstPhase,
        Scenario::DriftOnly,
        Scenario::Warmup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Default => "default",
            Scenario::Table1HighBw => "table1-highbw",
            Scenario::Table1LowBw => "table1-lowbw",
            Scenario::Clean => "clean",
            Scenario::ConstPhase => "const-phase",
            Scenario::DriftOnly => "drift-only",
            Scenario::Warmup => "warmup",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::Default => "configuration as loaded (stochastic noise + drift)",
            Scenario::Table1HighBw => "B = 40 MHz, f_s = 80 MHz, other knobs as loaded",
            Scenario::Table1LowBw => "B = 2 MHz, f_s = 4 MHz, other knobs as loaded",
            Scenario::Clean => "all impairments, channel effects and noise disabled",
            Scenario::ConstPhase => "only θ_RF = 0.1·(m+1) rad, noiseless LOS channel",
            Scenario::DriftOnly => "only linear drift 0.30 + 0.04·m rad/s, noiseless LOS channel",
            Scenario::Warmup => {
                "only exponential −10° warm-up, τ = 40 + 10·m s, noiseless LOS channel"
            }
        }
    }

    /// Returns the configuration this scenario runs.
    pub fn apply(self, config: &SystemConfig) -> SystemConfig {
        let mut c = config.clone();
        match self {
            Scenario::Default => {}
            Scenario::Table1HighBw => {
                c.bandwidth_hz = 40e6;
                c.sample_rate_hz = 80e6;
            }
            Scenario::Table1LowBw => {
                c.bandwidth_hz = 2e6;
                c.sample_rate_hz = 4e6;
            }
            Scenario::Clean => {
                strip_impairments(&mut c);
                c.ota_channel = ChannelModel::Ideal;
            }
            Scenario::ConstPhase => {
                strip_impairments(&mut c);
                for (m, ch) in c.chains.iter_mut().enumerate() {
                    ch.theta_rf_rad = 0.1 * (m + 1) as f64;
                }
                c.ota_rx.phase_rad = CONST_PHASE_RX_OFFSET_RAD;
            }
            Scenario::DriftOnly => {
                strip_impairments(&mut c);
                for (m, ch) in c.chains.iter_mut().enumerate() {
                    ch.drift_mode = DriftMode::Linear;
                    ch.drift_amplitude_rad = drift_only_slope(m);
                    ch.drift_tau_s = 1.0;
                }
            }
            Scenario::Warmup => {
                strip_impairments(&mut c);
                for (m, ch) in c.chains.iter_mut().enumerate() {
                    ch.drift_mode = DriftMode::Exponential;
                    ch.drift_amplitude_rad = (-10f64).to_radians();
                    ch.drift_tau_s = 40.0 + 10.0 * m as f64;
                }
            }
        }
        c
    }
}

/// Zeroes every random and deterministic impairment; keeps the geometry.
fn strip_impairments(c: &mut SystemConfig) {
    c.chains = vec![ChainParams::ideal(); c.num_chains];
    c.local_rx = RxParams::default();
    c.ota_rx = RxParams::default();
    c.ota_awgn = false;
    c.ota_gain_magnitude = 1.0;
    c.ota_gain_phase_rad = 0.0;
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scenario `{0}` (known: default, stochastic, table1-highbw, table1-lowbw, clean, const-phase, drift-only, warmup)")]
pub struct UnknownScenario(pub String);

impl FromStr for Scenario {
    type Err = UnknownScenario;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stochastic" {
            return Ok(Scenario::Default);
        }
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| UnknownScenario(s.to_string()))
    }
}
