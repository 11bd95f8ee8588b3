//! Fast oracle checks runnable from the command line.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::calibration::{decode_feedback, encode_feedback, FeedbackMessage, SmoothedCalibrator};
use crate::campaign::{run_campaign, RunManifest, Scenario, Transport};
use crate::channel::ula_delay;
use crate::metrics::{
    coherence_factor, phase_to_jitter, rms_c2c_jitter, trapezoid, Bandwidth, Kde,
};
use crate::model::{half_wavelength, wrap_phase, SystemConfig};
use crate::rng::{gaussian, stream, Stream};
use crate::waveform::{chirp_phase, FrameSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail: detail.into(),
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// hand-computed values, rounded to four decimals
#[allow(clippy::approx_constant)]
fn chirp_phases() -> CheckResult {
    let got: Vec<f64> = (0..4).map(|n| chirp_phase(2.0, 4.0, 4, n)).collect();
    let want = [0.0, 0.3927, 1.5708, 3.5343];
    let ok = got.iter().zip(want).all(|(g, w)| close(*g, w, 5e-5));
    check("chirp phase B=2 fs=4 N=4", ok, format!("{got:.4?}"))
}

fn table1_schedule() -> CheckResult {
    let s = FrameSchedule::new(4, 1500, 500);
    let ok = s.slot_length_samples == 2500
        && s.slot_offsets == [0, 2500, 5000, 7500]
        && s.frame_length_samples == 10_000
        && s.chirp_range(2).ok() == Some(5500..7000);
    check(
        "4-chain frame schedule",
        ok,
        format!("slot 2 = {:?}", s.chirp_range(2).ok()),
    )
}

fn array_delay() -> CheckResult {
    let tau = ula_delay(1, 0.04, 30f64.to_radians());
    let quarter =
        std::f64::consts::TAU * 3.75e9 * ula_delay(1, half_wavelength(3.75e9), 30f64.to_radians());
    check(
        "ULA delay d=4 cm, 30°",
        close(tau, 6.671e-11, 1e-14) && close(quarter, FRAC_PI_2, 1e-12),
        format!("{tau:.4e} s"),
    )
}

fn jitter_oracles() -> CheckResult {
    let ps = 1e-12;
    let a = rms_c2c_jitter(&[0.0, ps, 0.0, ps]).unwrap_or(f64::NAN);
    let b = rms_c2c_jitter(&[0.0, 3.0 * ps, 3.0 * ps]).unwrap_or(f64::NAN);
    let c = phase_to_jitter(0.0309, 3.75e9);
    let ok = close(a, ps, 1e-24) && close(b, 2.1213e-12, 1e-16) && close(c, 1.311e-12, 1e-15);
    check(
        "c2c jitter worked examples",
        ok,
        format!("{a:.4e}, {b:.4e}, {c:.4e}"),
    )
}

fn iid_c2c() -> CheckResult {
    let sigma = 1e-12;
    let mut rng = stream(0x5e1f, Stream::Custom(0));
    let a: Vec<f64> = (0..100_000)
        .map(|_| gaussian(&mut rng, sigma * sigma))
        .collect();
    let ratio = rms_c2c_jitter(&a).unwrap_or(f64::NAN) / (sigma * 2f64.sqrt());
    check(
        "i.i.d. c2c = σ√2 (1e5 samples)",
        (ratio - 1.0).abs() < 0.03,
        format!("ratio {ratio:.4}"),
    )
}

fn kde_oracles() -> CheckResult {
    match Kde::new(&[-1.0, 1.0], Bandwidth::Fixed(1.0)) {
        Ok(kde) => {
            let f0 = kde.evaluate(0.0);
            let integral = trapezoid(&kde.grid(2001));
            check(
                "KDE f(0) and normalization",
                close(f0, 0.2420, 1e-4) && close(integral, 1.0, 1e-3),
                format!("f(0) = {f0:.4}, ∫ = {integral:.6}"),
            )
        }
        Err(e) => check("KDE f(0) and normalization", false, e.to_string()),
    }
}

fn coherence() -> CheckResult {
    let q = coherence_factor(&[0.0, FRAC_PI_2, PI, 1.5 * PI]);
    let ok =
        coherence_factor(&[0.0; 4]) == 1.0 && q < 1e-15 && coherence_factor(&[0.0, PI]) < 1e-15;
    check("coherence factor", ok, format!("quadrature {q:.1e}"))
}

fn calibrator() -> CheckResult {
    let mut cal = SmoothedCalibrator::new(1, 10);
    let mut p = 0.0;
    for theta in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1] {
        p = cal.update_phase(0, theta).unwrap_or(f64::NAN);
    }
    let mut straddle = SmoothedCalibrator::new(1, 10);
    let mut q = 0.0;
    for theta in [3.1, -3.1] {
        q = straddle.update_phase(0, theta).unwrap_or(f64::NAN);
    }
    let ok = close(p, 0.65, 1e-12) && close(wrap_phase(q - PI), 0.0, 1e-12);
    check(
        "smoothed calibrator window 10",
        ok,
        format!("p = {p:.4}, straddle = {q:.4}"),
    )
}

fn feedback_codec() -> CheckResult {
    let msg = FeedbackMessage {
        chain_index: 2,
        cycle_index: 7,
        theta_rad: 0.0,
        timestamp_us: 0,
    };
    let bytes = encode_feedback(&msg);
    let layout = bytes[..10] == [0x50, 0x48, 0x43, 0x46, 0x01, 0x02, 0x07, 0, 0, 0]
        && bytes[10..].iter().all(|b| *b == 0);
    let mut rng = stream(0xfeed, Stream::Custom(1));
    let round_trip = (0..10_000).all(|_| {
        let m = FeedbackMessage {
            chain_index: rng.random(),
            cycle_index: rng.random(),
            theta_rad: f64::from_bits(rng.random()),
            timestamp_us: rng.random(),
        };
        decode_feedback(&encode_feedback(&m)) == Ok(m)
    });
    check(
        "feedback datagram layout and round trip",
        layout && round_trip,
        "26 bytes, 1e4 random messages",
    )
}

fn campaign_check(
    name: &'static str,
    scenario: Scenario,
    verify: impl Fn(&crate::campaign::CampaignOutput) -> (bool, String),
) -> CheckResult {
    let out = RunManifest::new(&SystemConfig::high_bandwidth_ideal(), scenario, 1, Some(20))
        .and_then(|m| run_campaign(&m.config, &m.scenario, Transport::InProc));
    match out {
        Ok(out) => {
            let (ok, detail) = verify(&out);
            check(name, ok, detail)
        }
        Err(e) => check(name, false, e.to_string()),
    }
}

fn max_abs(rows: &[Vec<f64>], f: impl Fn(usize, f64) -> f64) -> f64 {
    rows.iter()
        .enumerate()
        .flat_map(|(m, r)| r.iter().map(move |&v| (m, v)))
        .map(|(m, v)| f(m, v).abs())
        .fold(0.0, f64::max)
}

/// Runs every check in order.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        chirp_phases(),
        table1_schedule(),
        array_delay(),
        jitter_oracles(),
        iid_c2c(),
        kde_oracles(),
        coherence(),
        calibrator(),
        feedback_codec(),
        campaign_check(
            "clean campaign estimates are zero",
            Scenario::Clean,
            |out| {
                let worst = max_abs(&out.local.theta_rad, |_, v| v)
                    .max(max_abs(&out.ota.theta_rad, |_, v| v));
                (worst < 1e-12, format!("max |θ̂| = {worst:.1e} rad"))
            },
        ),
        campaign_check(
            "constant θ_RF recovered locally",
            Scenario::ConstPhase,
            |out| {
                let worst = max_abs(&out.local.theta_rad, |m, v| {
                    wrap_phase(v - 0.1 * (m + 1) as f64)
                });
                (worst < 1e-12, format!("max error {worst:.1e} rad"))
            },
        ),
    ]
}
