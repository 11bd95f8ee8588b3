//! Trace CSV, report JSON, KDE grids and the text summary.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::simulation::{CampaignOutput, RunManifest};
use crate::metrics::{phase_to_jitter, Bandwidth, CalibrationReport, Kde, MetricsError};
use crate::model::ReceiverKind;
use crate::{Error, Result};

/// Points per exported KDE grid.
pub const KDE_GRID_POINTS: usize = 2001;

pub const TRACE_HEADER: [&str; 6] = [
    "cycle",
    "chain",
    "receiver",
    "theta_rad",
    "alpha_s",
    "residual_rad",
];

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, e.into())
}

/// One row per `(cycle, chain, receiver)`, cycle-major, local before OTA.
pub fn write_trace_csv(path: &Path, out: &CampaignOutput) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(TRACE_HEADER).map_err(|e| csv_err(path, e))?;
    let fc = out.config.carrier_freq_hz;
    for l in 0..out.config.num_cycles {
        for m in 0..out.config.num_chains {
            for rx in ReceiverKind::ALL {
                let t = out.trace(rx);
                let theta = t.theta_rad[m][l];
                w.write_record([
                    l.to_string(),
                    m.to_string(),
                    rx.as_str().to_string(),
                    theta.to_string(),
                    format!("{:e}", phase_to_jitter(theta, fc)),
                    t.residual_rad[m][l].to_string(),
                ])
                .map_err(|e| csv_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Serde(e.to_string()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_report_json(path: &Path, report: &CalibrationReport) -> Result<()> {
    write_json(path, report)
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    write_json(path, manifest)
}

pub fn load_report(path: &Path) -> Result<CalibrationReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))
}

/// Writes `x_s,density` rows of a KDE grid.
pub fn write_kde_csv(path: &Path, grid: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["x_s", "density"])
        .map_err(|e| csv_err(path, e))?;
    for (x, y) in grid {
        w.write_record([format!("{x:e}"), y.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `kde_tx{m}_{receiver}_{measured|calibrated}.csv` for every cell
/// whose samples have spread. Calibrated grids use the settled cycles.
pub fn write_kde_csvs(dir: &Path, report: &CalibrationReport) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for ch in &report.chains {
        for rx in ReceiverKind::ALL {
            let cells = ch.cells(rx);
            let settle = report.settle_cycles.min(cells.calibrated.jitter_s.len());
            for (label, samples) in [
                ("measured", &cells.measured.jitter_s[..]),
                ("calibrated", &cells.calibrated.jitter_s[settle..]),
            ] {
                let kde = match Kde::new(samples, Bandwidth::Silverman) {
                    Ok(k) => k,
                    Err(MetricsError::ZeroBandwidth) => continue,
                    Err(e) => return Err(e.into()),
                };
                let path = dir.join(format!(
                    "kde_tx{}_{}_{label}.csv",
                    ch.chain_index + 1,
                    rx.as_str()
                ));
                write_kde_csv(&path, &kde.grid(KDE_GRID_POINTS))?;
                paths.push(path);
            }
        }
    }
    Ok(paths)
}

/// Human-scaled duration (`s`, `ms`, `µs`, `ns`, `ps`, `fs`).
pub fn format_seconds(s: f64) -> String {
    if s == 0.0 {
        return "0 s".into();
    }
    let units = [
        (1.0, "s"),
        (1e-3, "ms"),
        (1e-6, "µs"),
        (1e-9, "ns"),
        (1e-12, "ps"),
        (1e-15, "fs"),
    ];
    let (scale, unit) = units
        .iter()
        .find(|(scale, _)| s.abs() >= *scale)
        .copied()
        .unwrap_or((1e-15, "fs"));
    let v = s / scale;
    if v.abs() >= 100.0 {
        format!("{v:.0} {unit}")
    } else if v.abs() >= 10.0 {
        format!("{v:.1} {unit}")
    } else {
        format!("{v:.2} {unit}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:+.3}"))
}

/// Summary table: one row per chain, measured and calibrated RMS
/// cycle-to-cycle jitter for each receiver, plus Gaussianity of the
/// calibrated samples.
pub fn render_report(report: &CalibrationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "scenario {}  seed {}  cycles {}  chains {}  config {}",
        report.scenario,
        report.seed,
        report.num_cycles,
        report.num_chains,
        &report.config_hash[..report.config_hash.len().min(12)]
    );
    let _ = writeln!(s, "RMS cycle-to-cycle jitter");
    let _ = writeln!(
        s,
        "{:<6}{:>12}{:>12}{:>12}{:>12}   {:>8}{:>8}{:>8}{:>8}",
        "",
        "meas local",
        "meas OTA",
        "cal local",
        "cal OTA",
        "skew L",
        "kurt L",
        "skew O",
        "kurt O"
    );
    for ch in &report.chains {
        let _ = writeln!(
            s,
            "{:<6}{:>12}{:>12}{:>12}{:>12}   {:>8}{:>8}{:>8}{:>8}",
            format!("TX{}", ch.chain_index + 1),
            format_seconds(ch.local.measured.rms_c2c_jitter_s),
            format_seconds(ch.ota.measured.rms_c2c_jitter_s),
            format_seconds(ch.local.calibrated.rms_c2c_jitter_s),
            format_seconds(ch.ota.calibrated.rms_c2c_jitter_s),
            fmt_opt(ch.local.calibrated.skewness),
            fmt_opt(ch.local.calibrated.excess_kurtosis),
            fmt_opt(ch.ota.calibrated.skewness),
            fmt_opt(ch.ota.calibrated.excess_kurtosis),
        );
    }
    let _ = writeln!(
        s,
        "coherence (measured → calibrated): local {:.4} → {:.4}, OTA {:.4} → {:.4}",
        report.local_coherence.measured,
        report.local_coherence.calibrated,
        report.ota_coherence.measured,
        report.ota_coherence.calibrated
    );
    s
}
