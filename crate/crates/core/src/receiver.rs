//! Receive chain: downconversion, TDMA slot windowing, dechirp and the
//! slot-averaged phase estimate.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::model::{
    wrap_phase, ComplexSignal, EstimatorKind, PhaseEstimate, ReceiverKind, RxParams, SignalError,
};
use crate::par;
use crate::rng::{gaussian, SimRng};
use crate::waveform::FrameSchedule;

/// Receiver frontend state (`φ_RF`, synthesizer offset, oscillator white
/// phase) plus its private random stream.
#[derive(Debug, Clone)]
pub struct RxChainState {
    pub params: RxParams,
    pub estimator: EstimatorKind,
    rng: SimRng,
}

impl RxChainState {
    pub fn new(params: RxParams, estimator: EstimatorKind, rng: SimRng) -> Self {
        Self {
            params,
            estimator,
            rng,
        }
    }
}

/// Multiplies by `exp(−j(2π·cfo·t + φ_OS[n] + φ_RF))`, `t` relative to the
/// signal's frame start.
pub fn downconvert(signal: &ComplexSignal, rx: &mut RxChainState) -> ComplexSignal {
    let RxParams {
        phase_rad,
        cfo_hz,
        white_var_rad2,
    } = rx.params;
    let zero = Complex64::new(0.0, 0.0);
    let samples = signal
        .samples
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            if x == zero {
                return zero;
            }
            let osc = if white_var_rad2 > 0.0 {
                gaussian(&mut rx.rng, white_var_rad2)
            } else {
                0.0
            };
            let phase = TAU * cfo_hz * signal.time_of(n) + osc + phase_rad;
            x * Complex64::from_polar(1.0, -phase)
        })
        .collect();
    ComplexSignal {
        samples,
        sample_rate_hz: signal.sample_rate_hz,
        start_time_s: signal.start_time_s,
    }
}

/// The `N` chirp-bearing samples of slot `m`, guards dropped.
pub fn extract_slot(
    frame: &ComplexSignal,
    m: usize,
    schedule: &FrameSchedule,
) -> Result<ComplexSignal, SignalError> {
    let range = schedule.chirp_range(m)?;
    if frame.len() < schedule.frame_length_samples {
        return Err(SignalError::FrameTooShort {
            required: schedule.frame_length_samples,
            actual: frame.len(),
        });
    }
    let start_time_s = frame.time_of(range.start);
    Ok(ComplexSignal {
        samples: frame.samples[range].to_vec(),
        sample_rate_hz: frame.sample_rate_hz,
        start_time_s,
    })
}

/// System function `ĥ[n] = slot[n]·conj(reference[n])`.
pub fn dechirp(
    slot: &ComplexSignal,
    reference: &ComplexSignal,
) -> Result<ComplexSignal, SignalError> {
    if slot.len() != reference.len() {
        return Err(SignalError::LengthMismatch {
            expected: reference.len(),
            actual: slot.len(),
        });
    }
    Ok(ComplexSignal {
        samples: slot
            .samples
            .iter()
            .zip(&reference.samples)
            .map(|(s, r)| s * r.conj())
            .collect(),
        sample_rate_hz: slot.sample_rate_hz,
        start_time_s: slot.start_time_s,
    })
}

/// Removes `2π` jumps so consecutive values differ by at most `π`.
/// The first element is kept as is.
pub fn unwrap_phases(wrapped: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(wrapped.len());
    let mut iter = wrapped.iter();
    let Some(&first) = iter.next() else {
        return out;
    };
    out.push(first);
    let (mut prev_raw, mut prev) = (first, first);
    for &x in iter {
        let d = x - prev_raw;
        let step = d - TAU * (d / TAU).round();
        prev += step;
        prev_raw = x;
        out.push(prev);
    }
    out
}

/// Slot time average of `arg ĥ`, wrapped to `(−π, π]`.
pub fn estimate_phase(h: &ComplexSignal, estimator: EstimatorKind) -> Result<f64, SignalError> {
    if h.is_empty() {
        return Err(SignalError::Empty);
    }
    let theta = match estimator {
        EstimatorKind::UnwrapMean => {
            let args: Vec<f64> = h.samples.iter().map(|s| s.arg()).collect();
            let unwrapped = unwrap_phases(&args);
            unwrapped.iter().sum::<f64>() / unwrapped.len() as f64
        }
        EstimatorKind::Circular => h.samples.iter().sum::<Complex64>().arg(),
    };
    Ok(wrap_phase(theta))
}

/// Downconverts one received frame and estimates every chain's phase.
pub fn run_receiver(
    frame: &ComplexSignal,
    rx: &mut RxChainState,
    schedule: &FrameSchedule,
    reference_chirp: &ComplexSignal,
    carrier_freq_hz: f64,
    cycle_index: usize,
    kind: ReceiverKind,
) -> Result<Vec<PhaseEstimate>, SignalError> {
    let baseband = downconvert(frame, rx);
    let estimator = rx.estimator;
    par::map_indexed(schedule.num_slots(), |m| {
        let slot = extract_slot(&baseband, m, schedule)?;
        let h = dechirp(&slot, reference_chirp)?;
        let theta = estimate_phase(&h, estimator)?;
        Ok(PhaseEstimate::new(
            m,
            cycle_index,
            theta,
            carrier_freq_hz,
            kind,
        ))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use crate::waveform::{build_frame, generate_chirp};
    use crate::SystemConfig;

    fn rx(params: RxParams) -> RxChainState {
        RxChainState::new(
            params,
            EstimatorKind::UnwrapMean,
            stream(0, Stream::LocalRx),
        )
    }

    fn tone(phases: impl Iterator<Item = f64>) -> ComplexSignal {
        ComplexSignal::new(
            phases.map(|p| Complex64::from_polar(1.0, p)).collect(),
            80e6,
        )
    }

    #[test]
    fn ideal_downconversion_is_identity() {
        let s = generate_chirp(40e6, 80e6, 64);
        assert_eq!(downconvert(&s, &mut rx(RxParams::default())), s);
    }

    #[test]
    fn frontend_phase_rotates_back() {
        let s = generate_chirp(40e6, 80e6, 64);
        let out = downconvert(
            &s,
            &mut rx(RxParams {
                phase_rad: 0.2,
                ..RxParams::default()
            }),
        );
        for (a, b) in s.samples.iter().zip(&out.samples) {
            assert!(wrap_phase((b / a).arg() + 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn matching_cfo_cancels_in_slot() {
        use crate::impairments::{apply_tx_impairments, ChainImpairmentState};
        use crate::model::{ChainParams, OscillatorMode};
        let mut cfg = SystemConfig::high_bandwidth_ideal();
        cfg.num_chains = 1;
        cfg.chains.truncate(1);
        let chirp = generate_chirp(cfg.bandwidth_hz, cfg.sample_rate_hz, cfg.num_chirp_samples);
        let (frames, sched) = build_frame(&cfg, &chirp).unwrap();
        let p = ChainParams {
            cfo_hz: 2.5e3,
            ..ChainParams::ideal()
        };
        let mut tx =
            ChainImpairmentState::new(0, p, OscillatorMode::Locked, stream(1, Stream::TxChain(0)));
        let sent = apply_tx_impairments(&frames[0], &mut tx, &sched, 0.0, 0.05).unwrap();
        let mut r = rx(RxParams {
            cfo_hz: 2.5e3,
            ..RxParams::default()
        });
        let base = downconvert(&sent, &mut r);
        let h = dechirp(&extract_slot(&base, 0, &sched).unwrap(), &chirp).unwrap();
        let args: Vec<f64> = h.samples.iter().map(|s| s.arg()).collect();
        let spread = args.iter().cloned().fold(f64::MIN, f64::max)
            - args.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-9, "spread {spread}");
    }

    #[test]
    fn slot_extraction() {
        let whole = generate_chirp(1e6, 4e6, 32);
        let sched = FrameSchedule::new(1, 32, 0);
        assert_eq!(
            extract_slot(&whole, 0, &sched).unwrap().samples,
            whole.samples
        );

        let sched = FrameSchedule::new(4, 1500, 500);
        let ramp = ComplexSignal::new(
            (0..10_000).map(|n| Complex64::new(n as f64, 0.0)).collect(),
            80e6,
        );
        let slot = extract_slot(&ramp, 2, &sched).unwrap();
        assert_eq!(slot.len(), 1500);
        assert_eq!(slot.samples[0].re, 5500.0);
        assert_eq!(slot.samples[1499].re, 6999.0);
        assert!(matches!(
            extract_slot(&ramp, 4, &sched),
            Err(SignalError::SlotOutOfRange {
                index: 4,
                num_slots: 4
            })
        ));
    }

    #[test]
    fn dechirp_cases() {
        let c = generate_chirp(40e6, 80e6, 256);
        let h = dechirp(&c, &c).unwrap();
        assert!(h
            .samples
            .iter()
            .all(|s| (s - Complex64::new(1.0, 0.0)).norm() < 1e-12));

        let rot = Complex64::from_polar(1.0, 0.7);
        let shifted = ComplexSignal::new(c.samples.iter().map(|s| s * rot).collect(), 80e6);
        let h = dechirp(&shifted, &c).unwrap();
        assert!(h.samples.iter().all(|s| (s - rot).norm() < 1e-12));

        let df = 1.5e5;
        let ramped = ComplexSignal::new(
            c.samples
                .iter()
                .enumerate()
                .map(|(n, s)| s * Complex64::from_polar(1.0, TAU * df * n as f64 / 80e6))
                .collect(),
            80e6,
        );
        let h = dechirp(&ramped, &c).unwrap();
        for (n, s) in h.samples.iter().enumerate() {
            let want = Complex64::from_polar(1.0, TAU * df * n as f64 / 80e6);
            assert!((s - want).norm() < 1e-12);
        }
        assert!(dechirp(&generate_chirp(1.0, 80e6, 3), &c).is_err());
    }

    #[test]
    fn unwrap_examples() {
        assert_eq!(unwrap_phases(&[0.4; 5]), vec![0.4; 5]);
        let u = unwrap_phases(&[3.0, -3.1, 2.9]);
        let want = [3.0, 3.1832, 2.9000];
        for (a, b) in u.iter().zip(want) {
            assert!((a - b).abs() < 1e-4, "{u:?}");
        }
        let ramp: Vec<f64> = (0..30).map(|k| -1.5 + 0.1 * k as f64).collect();
        let out = unwrap_phases(&ramp);
        for (a, b) in out.iter().zip(&ramp) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(unwrap_phases(&[]).is_empty());
    }

    #[test]
    fn estimate_examples() {
        let h = tone((0..100).map(|_| 0.3));
        assert!((estimate_phase(&h, EstimatorKind::UnwrapMean).unwrap() - 0.3).abs() < 1e-15);
        let h = tone((0..5).map(|n| 0.1 + 0.01 * n as f64));
        assert!((estimate_phase(&h, EstimatorKind::UnwrapMean).unwrap() - 0.12).abs() < 1e-15);
        assert!(
            estimate_phase(&ComplexSignal::new(vec![], 1.0), EstimatorKind::UnwrapMean).is_err()
        );
    }

    #[test]
    fn residual_cfo_mean_closed_form() {
        let fs = 4e6;
        let n = 1500;
        let df = 50.0;
        let ts = 1.0 / fs;
        let h = tone((0..n).map(|k| TAU * df * k as f64 * ts));
        let closed = std::f64::consts::PI * df * (n - 1) as f64 * ts;
        let brute = (0..n).map(|k| TAU * df * k as f64 * ts).sum::<f64>() / n as f64;
        assert!((closed - brute).abs() < 1e-12);
        let est = estimate_phase(&h, EstimatorKind::UnwrapMean).unwrap();
        assert!((est - wrap_phase(closed)).abs() < 1e-12);
    }

    #[test]
    fn estimate_near_pi_does_not_split() {
        // arguments straddle ±π: naive averaging would land near 0
        let h = tone((0..200).map(|k| std::f64::consts::PI - 0.05 + 0.0005 * k as f64));
        for kind in [EstimatorKind::UnwrapMean, EstimatorKind::Circular] {
            let est = estimate_phase(&h, kind).unwrap();
            assert!(wrap_phase(est - (std::f64::consts::PI - 0.05 + 0.0005 * 99.5)).abs() < 1e-9);
        }
    }

    #[test]
    fn estimators_agree_at_high_snr() {
        let mut r = stream(5, Stream::Custom(1));
        let h = tone((0..1000).map(|_| 1.2 + gaussian(&mut r, 1e-4)));
        let a = estimate_phase(&h, EstimatorKind::UnwrapMean).unwrap();
        let b = estimate_phase(&h, EstimatorKind::Circular).unwrap();
        assert!((a - b).abs() < 1e-5);
    }

    #[test]
    fn clean_chain_gives_zero() {
        let cfg = SystemConfig::high_bandwidth_ideal();
        let chirp = generate_chirp(cfg.bandwidth_hz, cfg.sample_rate_hz, cfg.num_chirp_samples);
        let (frames, sched) = build_frame(&cfg, &chirp).unwrap();
        let sum = crate::channel::propagate_local(&frames).unwrap();
        let est = run_receiver(
            &sum,
            &mut rx(RxParams::default()),
            &sched,
            &chirp,
            cfg.carrier_freq_hz,
            0,
            ReceiverKind::Local,
        )
        .unwrap();
        assert_eq!(est.len(), 4);
        for (m, e) in est.iter().enumerate() {
            assert_eq!(e.chain_index, m);
            assert!(e.theta_rad.abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn unwrap_bounds_steps(xs in proptest::collection::vec(-std::f64::consts::PI..std::f64::consts::PI, 1..50)) {
                let u = unwrap_phases(&xs);
                prop_assert_eq!(u[0], xs[0]);
                for w in u.windows(2) {
                    prop_assert!((w[1] - w[0]).abs() <= std::f64::consts::PI + 1e-12);
                }
                for (a, b) in u.iter().zip(&xs) {
                    prop_assert!(wrap_phase(a - b).abs() < 1e-9);
                }
            }

            #[test]
            fn full_turn_shift_leaves_estimate(theta in -3.0f64..3.0, noise_seed in any::<u64>()) {
                let mut r = stream(noise_seed, Stream::Custom(2));
                let jitter: Vec<f64> = (0..64).map(|_| gaussian(&mut r, 1e-3)).collect();
                let a = tone(jitter.iter().map(|j| theta + j));
                let b = tone(jitter.iter().map(|j| theta + TAU + j));
                let ea = estimate_phase(&a, EstimatorKind::UnwrapMean).unwrap();
                let eb = estimate_phase(&b, EstimatorKind::UnwrapMean).unwrap();
                prop_assert!(wrap_phase(ea - eb).abs() < 1e-12);
            }
        }
    }
}
