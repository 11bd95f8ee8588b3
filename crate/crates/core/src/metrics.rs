//! Jitter statistics and the per-chain calibration report.
//!
//! Cycle-to-cycle jitter is the conventional first-difference RMS
//! `sqrt(Σ (α_{l+1} − α_l)² / (L − 1))` of the jitter sequence
//! `α_l = θ̂_l / (2π f_c)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{wrap_phase, ReceiverKind, SystemConfig};
use crate::receiver::unwrap_phases;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("need at least {needed} samples, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },

    #[error("zero bandwidth: samples are all equal")]
    ZeroBandwidth,

    #[error("invalid KDE bandwidth {0}")]
    InvalidBandwidth(f64),

    #[error("incomplete stream: {0}")]
    IncompleteStream(String),
}

/// `α = θ / (2π f_c)`.
pub fn phase_to_jitter(theta_rad: f64, carrier_freq_hz: f64) -> f64 {
    theta_rad / (TAU * carrier_freq_hz)
}

pub fn rms_c2c_jitter(alpha: &[f64]) -> Result<f64, MetricsError> {
    if alpha.len() < 2 {
        return Err(MetricsError::TooFewSamples {
            needed: 2,
            actual: alpha.len(),
        });
    }
    let sum_sq: f64 = alpha.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok((sum_sq / (alpha.len() - 1) as f64).sqrt())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Central moments 2, 3 and 4 (population normalization).
fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let mu = mean(x);
    let n = x.len() as f64;
    let (m2, m3, m4) = x.iter().fold((0.0, 0.0, 0.0), |(a, b, c), v| {
        let d = v - mu;
        let d2 = d * d;
        (a + d2, b + d2 * d, c + d2 * d2)
    });
    (m2 / n, m3 / n, m4 / n)
}

/// Sample skewness `m3 / m2^{3/2}`; `None` for fewer than three samples or
/// zero spread.
pub fn skewness(x: &[f64]) -> Option<f64> {
    if x.len() < 3 {
        return None;
    }
    let (m2, m3, _) = central_moments(x);
    (m2 > 0.0).then(|| m3 / m2.powf(1.5))
}

/// Sample excess kurtosis `m4 / m2² − 3`; `None` for fewer than four samples
/// or zero spread.
pub fn excess_kurtosis(x: &[f64]) -> Option<f64> {
    if x.len() < 4 {
        return None;
    }
    let (m2, _, m4) = central_moments(x);
    (m2 > 0.0).then(|| m4 / (m2 * m2) - 3.0)
}

/// Sample standard deviation (`n − 1` normalization).
fn sample_std(x: &[f64]) -> f64 {
    let mu = mean(x);
    let ss: f64 = x.iter().map(|v| (v - mu).powi(2)).sum();
    (ss / (x.len() - 1) as f64).sqrt()
}

/// `1.06 · σ̂ · n^{−1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    1.06 * sample_std(samples) * (samples.len() as f64).powf(-0.2)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    #[default]
    Silverman,
    Fixed(f64),
}

/// Gaussian kernel density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde {
    samples: Vec<f64>,
    bandwidth: f64,
}

impl Kde {
    pub fn new(samples: &[f64], bandwidth: Bandwidth) -> Result<Self, MetricsError> {
        if samples.len() < 2 {
            return Err(MetricsError::TooFewSamples {
                needed: 2,
                actual: samples.len(),
            });
        }
        let h = match bandwidth {
            Bandwidth::Silverman => {
                let h = silverman_bandwidth(samples);
                if h == 0.0 {
                    return Err(MetricsError::ZeroBandwidth);
                }
                h
            }
            Bandwidth::Fixed(h) if h.is_finite() && h > 0.0 => h,
            Bandwidth::Fixed(h) => return Err(MetricsError::InvalidBandwidth(h)),
        };
        if !h.is_finite() {
            return Err(MetricsError::InvalidBandwidth(h));
        }
        Ok(Self {
            samples: samples.to_vec(),
            bandwidth: h,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / ((2.0 * PI).sqrt() * h * self.samples.len() as f64);
        norm * self
            .samples
            .iter()
            .map(|xi| {
                let u = (x - xi) / h;
                (-0.5 * u * u).exp()
            })
            .sum::<f64>()
    }

    /// `points` evenly spaced abscissae spanning the sample range padded by
    /// `8h` on each side, with the density at each.
    pub fn grid(&self, points: usize) -> Vec<(f64, f64)> {
        let points = points.max(2);
        let (lo, hi) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let (lo, hi) = (lo - 8.0 * self.bandwidth, hi + 8.0 * self.bandwidth);
        let step = (hi - lo) / (points - 1) as f64;
        (0..points)
            .map(|i| {
                let x = lo + step * i as f64;
                (x, self.evaluate(x))
            })
            .collect()
    }
}

/// Trapezoid rule over `(x, y)` pairs.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[1].1 + w[0].1))
        .sum()
}

/// `|Σ_m e^{j r_m}| / M`; 1 for an empty slice.
pub fn coherence_factor(residual_phases: &[f64]) -> f64 {
    if residual_phases.is_empty() {
        return 1.0;
    }
    let sum: Complex64 = residual_phases
        .iter()
        .map(|&r| Complex64::from_polar(1.0, r))
        .sum();
    sum.norm() / residual_phases.len() as f64
}

/// Per-cycle phases seen by one receiver, indexed `[chain][cycle]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReceiverTrace {
    /// Wrapped phase estimates `θ̂`.
    pub theta_rad: Vec<Vec<f64>>,
    /// Wrapped calibrated residuals `θ̂_l − p_l`.
    pub residual_rad: Vec<Vec<f64>>,
}

impl ReceiverTrace {
    pub fn new(num_chains: usize, num_cycles: usize) -> Self {
        Self {
            theta_rad: vec![Vec::with_capacity(num_cycles); num_chains],
            residual_rad: vec![Vec::with_capacity(num_cycles); num_chains],
        }
    }
}

/// Statistics of one jitter sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterCell {
    pub rms_c2c_jitter_s: f64,
    pub mean_phase_rad: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    /// One value per cycle.
    pub jitter_s: Vec<f64>,
}

impl JitterCell {
    /// Statistics are taken over `jitter_s[from..]`; the stored array is
    /// complete.
    fn from_sequence(
        jitter_s: Vec<f64>,
        phases: &[f64],
        from: usize,
    ) -> Result<Self, MetricsError> {
        let tail = &jitter_s[from.min(jitter_s.len())..];
        let tail_phase = &phases[from.min(phases.len())..];
        Ok(Self {
            rms_c2c_jitter_s: rms_c2c_jitter(tail)?,
            mean_phase_rad: wrap_phase(mean(tail_phase)),
            skewness: skewness(tail),
            excess_kurtosis: excess_kurtosis(tail),
            jitter_s,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverCells {
    pub measured: JitterCell,
    pub calibrated: JitterCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub chain_index: usize,
    pub local: ReceiverCells,
    pub ota: ReceiverCells,
}

impl ChainReport {
    pub fn cells(&self, receiver: ReceiverKind) -> &ReceiverCells {
        match receiver {
            ReceiverKind::Local => &self.local,
            ReceiverKind::Ota => &self.ota,
        }
    }
}

/// Mean coherence factor over the settled cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSummary {
    pub measured: f64,
    pub calibrated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub scenario: String,
    pub seed: u64,
    /// SHA-256 of the resolved configuration's JSON form.
    pub config_hash: String,
    pub carrier_freq_hz: f64,
    pub num_chains: usize,
    pub num_cycles: usize,
    /// Leading cycles left out of the calibrated statistics while the
    /// smoothing buffer fills.
    pub settle_cycles: usize,
    pub chains: Vec<ChainReport>,
    pub local_coherence: CoherenceSummary,
    pub ota_coherence: CoherenceSummary,
}

impl CalibrationReport {
    pub fn cell(&self, chain: usize, receiver: ReceiverKind) -> &ReceiverCells {
        self.chains[chain].cells(receiver)
    }
}

pub fn config_hash(config: &SystemConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&json))
}

fn check_trace(
    trace: &ReceiverTrace,
    chains: usize,
    cycles: usize,
    kind: ReceiverKind,
) -> Result<(), MetricsError> {
    for (name, rows) in [
        ("theta", &trace.theta_rad),
        ("residual", &trace.residual_rad),
    ] {
        if rows.len() != chains {
            return Err(MetricsError::IncompleteStream(format!(
                "{kind} {name}: {} chains, expected {chains}",
                rows.len()
            )));
        }
        if let Some((m, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != cycles) {
            return Err(MetricsError::IncompleteStream(format!(
                "{kind} {name} chain {m}: {} cycles, expected {cycles}",
                row.len()
            )));
        }
    }
    Ok(())
}

fn mean_coherence(rows: &[Vec<f64>], from: usize, cycles: usize) -> f64 {
    let from = from.min(cycles.saturating_sub(1));
    let n = cycles - from;
    let total: f64 = (from..cycles)
        .map(|l| {
            let phases: Vec<f64> = rows.iter().map(|r| r[l]).collect();
            coherence_factor(&phases)
        })
        .sum();
    total / n as f64
}

/// Assembles the report from the local and OTA traces.
///
/// Measured cells use the estimates unwrapped across cycles so a drifting
/// chain crossing `±π` does not register a full-cycle jump. Calibrated cells
/// use the wrapped residuals and skip the first `smoothing_window` cycles.
pub fn build_report(
    config: &SystemConfig,
    scenario: &str,
    local: &ReceiverTrace,
    ota: &ReceiverTrace,
) -> Result<CalibrationReport, MetricsError> {
    let chains = config.num_chains;
    let cycles = config.num_cycles;
    let fc = config.carrier_freq_hz;
    check_trace(local, chains, cycles, ReceiverKind::Local)?;
    check_trace(ota, chains, cycles, ReceiverKind::Ota)?;
    let settle = config.smoothing_window.min(cycles.saturating_sub(2));

    let cells = |trace: &ReceiverTrace, m: usize| -> Result<ReceiverCells, MetricsError> {
        let unwrapped = unwrap_phases(&trace.theta_rad[m]);
        let measured_alpha = unwrapped.iter().map(|&t| phase_to_jitter(t, fc)).collect();
        let residual = &trace.residual_rad[m];
        let calibrated_alpha = residual.iter().map(|&r| phase_to_jitter(r, fc)).collect();
        Ok(ReceiverCells {
            measured: JitterCell::from_sequence(measured_alpha, &unwrapped, 0)?,
            calibrated: JitterCell::from_sequence(calibrated_alpha, residual, settle)?,
        })
    };

    let chain_reports = (0..chains)
        .map(|m| {
            Ok(ChainReport {
                chain_index: m,
                local: cells(local, m)?,
                ota: cells(ota, m)?,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;

    let coherence = |trace: &ReceiverTrace| CoherenceSummary {
        measured: mean_coherence(&trace.theta_rad, 0, cycles),
        calibrated: mean_coherence(&trace.residual_rad, settle, cycles),
    };

    Ok(CalibrationReport {
        scenario: scenario.to_string(),
        seed: config.rng_seed,
        config_hash: config_hash(config),
        carrier_freq_hz: fc,
        num_chains: chains,
        num_cycles: cycles,
        settle_cycles: settle,
        chains: chain_reports,
        local_coherence: coherence(local),
        ota_coherence: coherence(ota),
    })
}
