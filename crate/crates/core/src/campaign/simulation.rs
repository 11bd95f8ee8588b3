//! The measurement campaign: `L` causal cycles of
//! frame → TX impairments → channels → receivers → feedback → calibrator.
//!
//! Within a cycle the TX chains, the two channels and the two receivers run
//! in parallel; cycles run in order because each one uses the precoding fed
//! back by the previous ones.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::export::{write_kde_csvs, write_manifest, write_report_json, write_trace_csv};
use super::scenario::Scenario;
use crate::calibration::{FeedbackLink, FeedbackMessage, InProcLink, SmoothedCalibrator, UdpLink};
use crate::channel::{propagate_local, propagate_ota, OtaChannelParams};
use crate::impairments::{apply_tx_impairments, ChainImpairmentState};
use crate::metrics::{build_report, CalibrationReport, ReceiverTrace};
use crate::model::{wrap_phase, ComplexSignal, PhaseEstimate, ReceiverKind, SystemConfig};
use crate::par;
use crate::receiver::{run_receiver, RxChainState};
use crate::rng::{stream, Stream};
use crate::waveform::{build_frame, generate_chirp};
use crate::{Error, Result};

/// How estimates reach the calibrators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    #[default]
    InProc,
    /// Loopback UDP. The local-receiver controller listens on `port`, the
    /// OTA controller on `port + 1`; 0 picks ephemeral ports.
    Udp { port: u16 },
}

/// How long a UDP controller waits for one cycle's estimates.
pub const UDP_TIMEOUT: Duration = Duration::from_secs(2);

impl Transport {
    fn link(self, offset: u16) -> Result<Box<dyn FeedbackLink + Send>> {
        Ok(match self {
            Transport::InProc => Box::new(InProcLink::new()),
            Transport::Udp { port: 0 } => Box::new(UdpLink::bind(0, UDP_TIMEOUT)?),
            Transport::Udp { port } => {
                Box::new(UdpLink::bind(port.wrapping_add(offset), UDP_TIMEOUT)?)
            }
        })
    }
}

/// Everything one run needs. Output files go under `out_dir` when set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Resolved configuration: scenario applied, seed and cycle overrides in.
    pub config: SystemConfig,
    pub seed: u64,
    pub scenario: String,
    pub transport: Transport,
    pub out_dir: Option<PathBuf>,
    /// Also write KDE grids of every jitter cell.
    pub kde: bool,
}

impl RunManifest {
    /// Applies `scenario`, the seed and an optional cycle-count override.
    pub fn new(
        config: &SystemConfig,
        scenario: Scenario,
        seed: u64,
        cycles: Option<usize>,
    ) -> Result<Self> {
        let mut config = scenario.apply(config);
        config.rng_seed = seed;
        if let Some(l) = cycles {
            config.num_cycles = l;
        }
        Ok(Self {
            config: config.validate()?,
            seed,
            scenario: scenario.name().to_string(),
            transport: Transport::InProc,
            out_dir: None,
            kde: false,
        })
    }

    pub fn with_transport(mut self, transport: Transport) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_output(mut self, dir: impl Into<PathBuf>, kde: bool) -> Self {
        self.out_dir = Some(dir.into());
        self.kde = kde;
        self
    }
}

/// In-memory result of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutput {
    pub config: SystemConfig,
    pub local: ReceiverTrace,
    pub ota: ReceiverTrace,
    pub report: CalibrationReport,
}

impl CampaignOutput {
    pub fn trace(&self, receiver: ReceiverKind) -> &ReceiverTrace {
        match receiver {
            ReceiverKind::Local => &self.local,
            ReceiverKind::Ota => &self.ota,
        }
    }
}

/// One receiver's feedback loop: its link, calibrator and recorded trace.
struct Loop {
    link: Box<dyn FeedbackLink + Send>,
    calibrator: SmoothedCalibrator,
    trace: ReceiverTrace,
}

impl Loop {
    /// Records `θ̂` and the residual against the current precoding, then
    /// feeds the estimates through the link into the calibrator.
    fn step(&mut self, estimates: &[PhaseEstimate], timestamp_us: u64) -> Result<()> {
        for est in estimates {
            let m = est.chain_index;
            let p = self.calibrator.precoding()[m];
            self.trace.theta_rad[m].push(est.theta_rad);
            self.trace.residual_rad[m].push(wrap_phase(est.theta_rad - p));
            self.link.send(&FeedbackMessage {
                chain_index: m as u8,
                cycle_index: est.cycle_index as u32,
                theta_rad: est.theta_rad,
                timestamp_us,
            })?;
        }
        for msg in self.link.receive(estimates.len())? {
            self.calibrator
                .update_phase(msg.chain_index as usize, msg.theta_rad)?;
        }
        Ok(())
    }
}

/// Runs the configured number of cycles and builds the report.
pub fn run_campaign(
    config: &SystemConfig,
    scenario: &str,
    transport: Transport,
) -> Result<CampaignOutput> {
    let cfg = config.clone().validate()?;
    let seed = cfg.rng_seed;
    let fc = cfg.carrier_freq_hz;
    let chirp = generate_chirp(cfg.bandwidth_hz, cfg.sample_rate_hz, cfg.num_chirp_samples);
    let (frames, schedule) = build_frame(&cfg, &chirp)?;
    let ota_params = OtaChannelParams::from_config(&cfg);

    let mut tx: Vec<ChainImpairmentState> = cfg
        .chains
        .iter()
        .enumerate()
        .map(|(m, p)| {
            ChainImpairmentState::new(m, *p, cfg.oscillator_mode, stream(seed, Stream::TxChain(m)))
        })
        .collect();
    let mut local_rx =
        RxChainState::new(cfg.local_rx, cfg.estimator, stream(seed, Stream::LocalRx));
    let mut ota_rx = RxChainState::new(cfg.ota_rx, cfg.estimator, stream(seed, Stream::OtaRx));
    let mut noise_rng = stream(seed, Stream::OtaNoise);

    let new_loop = |offset: u16| -> Result<Loop> {
        Ok(Loop {
            link: transport.link(offset)?,
            calibrator: SmoothedCalibrator::new(cfg.num_chains, cfg.smoothing_window),
            trace: ReceiverTrace::new(cfg.num_chains, cfg.num_cycles),
        })
    };
    let mut local_loop = new_loop(0)?;
    let mut ota_loop = new_loop(1)?;

    for l in 0..cfg.num_cycles {
        let t0 = l as f64 * cfg.cycle_interval_s;
        let emitted = par::map_mut(&mut tx, |m, state| {
            apply_tx_impairments(&frames[m], state, &schedule, t0, cfg.cycle_interval_s)
        })
        .into_iter()
        .collect::<Result<Vec<ComplexSignal>, _>>()?;

        let (local_frame, ota_frame) = par::join(
            || propagate_local(&emitted),
            || propagate_ota(&emitted, &ota_params, fc, cfg.delay_model, &mut noise_rng),
        );
        let (local_frame, ota_frame) = (local_frame?, ota_frame?);

        let (local_est, ota_est) = par::join(
            || {
                run_receiver(
                    &local_frame,
                    &mut local_rx,
                    &schedule,
                    &chirp,
                    fc,
                    l,
                    ReceiverKind::Local,
                )
            },
            || {
                run_receiver(
                    &ota_frame,
                    &mut ota_rx,
                    &schedule,
                    &chirp,
                    fc,
                    l,
                    ReceiverKind::Ota,
                )
            },
        );

        let timestamp_us = (t0 * 1e6).round() as u64;
        local_loop.step(&local_est?, timestamp_us)?;
        ota_loop.step(&ota_est?, timestamp_us)?;
    }

    let report = build_report(&cfg, scenario, &local_loop.trace, &ota_loop.trace)?;
    Ok(CampaignOutput {
        config: cfg,
        local: local_loop.trace,
        ota: ota_loop.trace,
        report,
    })
}

/// Files written by [`run_simulation`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub trace_csv: PathBuf,
    pub report_json: PathBuf,
    pub manifest_json: PathBuf,
    pub kde_csvs: Vec<PathBuf>,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            trace_csv: dir.join("trace.csv"),
            report_json: dir.join("report.json"),
            manifest_json: dir.join("manifest.json"),
            kde_csvs: Vec::new(),
        }
    }
}

/// Runs the manifest's campaign and writes its files when an output
/// directory is set.
pub fn run_simulation(manifest: &RunManifest) -> Result<(CampaignOutput, Option<OutputPaths>)> {
    let out = run_campaign(&manifest.config, &manifest.scenario, manifest.transport)?;
    let Some(dir) = &manifest.out_dir else {
        return Ok((out, None));
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = OutputPaths::in_dir(dir);
    write_trace_csv(&paths.trace_csv, &out)?;
    write_report_json(&paths.report_json, &out.report)?;
    write_manifest(&paths.manifest_json, manifest)?;
    if manifest.kde {
        paths.kde_csvs = write_kde_csvs(dir, &out.report)?;
    }
    Ok((out, Some(paths)))
}
