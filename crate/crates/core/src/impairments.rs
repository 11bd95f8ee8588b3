//! Per-chain transmit impairments: oscillator phase noise `θ_OS`, CFO
//! residual, constant frontend phase `θ_RF` and slow drift.
//!
//! The simulation runs at complex baseband referenced to the nominal carrier,
//! so a chain's synthesizer offset appears only as the `2π·cfo·t` residual.
//! Phase noise is a Wiener random walk of intensity `σ_w²` (rad²/s) plus an
//! independent white term of variance `σ_φ²` per sample.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::model::{ChainParams, ComplexSignal, DriftMode, OscillatorMode, SignalError};
use crate::rng::{gaussian, SimRng};
use crate::waveform::FrameSchedule;

/// Warm-up settle `A·(1 − exp(−t/τ_w))`.
pub fn drift_phase(t_s: f64, amplitude_rad: f64, tau_s: f64) -> f64 {
    -amplitude_rad * (-t_s / tau_s).exp_m1()
}

/// Drift term for either mode; linear mode is `A·t/τ_w`.
pub fn drift_phase_with_mode(mode: DriftMode, t_s: f64, amplitude_rad: f64, tau_s: f64) -> f64 {
    match mode {
        DriftMode::Exponential => drift_phase(t_s, amplitude_rad, tau_s),
        DriftMode::Linear => amplitude_rad * t_s / tau_s,
    }
}

/// Evolving impairment state of one TX chain. Owns its random stream.
#[derive(Debug, Clone)]
pub struct ChainImpairmentState {
    chain_index: usize,
    params: ChainParams,
    mode: OscillatorMode,
    osc_phase: f64,
    rng: SimRng,
}

impl ChainImpairmentState {
    pub fn new(chain_index: usize, params: ChainParams, mode: OscillatorMode, rng: SimRng) -> Self {
        Self {
            chain_index,
            params,
            mode,
            osc_phase: 0.0,
            rng,
        }
    }

    pub fn chain_index(&self) -> usize {
        self.chain_index
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn mode(&self) -> OscillatorMode {
        self.mode
    }

    /// Current Wiener state `θ_OS` (rad).
    pub fn osc_phase(&self) -> f64 {
        self.osc_phase
    }

    /// Adds one `N(0, σ_w²·dt)` increment.
    pub fn advance_oscillator(&mut self, dt_s: f64) {
        debug_assert!(dt_s >= 0.0);
        let var = self.params.wiener_rate_rad2_per_s * dt_s;
        if var > 0.0 {
            self.osc_phase += gaussian(&mut self.rng, var);
        }
    }

    /// Re-anchors the excursion to the shared reference.
    pub fn relock(&mut self) {
        self.osc_phase = 0.0;
    }

    /// Sample-wise `θ_OS` path over `n_samples` at `fs`.
    ///
    /// Sample `k` sits at the state after `k` Wiener increments of variance
    /// `σ_w²/f_s`, plus its own white draw. On return the state has advanced
    /// by `n_samples / f_s`.
    pub fn oscillator_trajectory(&mut self, n_samples: usize, sample_rate_hz: f64) -> Vec<f64> {
        let step_var = self.params.wiener_rate_rad2_per_s / sample_rate_hz;
        let white_var = self.params.white_phase_var_rad2;
        let mut path = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let white = if white_var > 0.0 {
                gaussian(&mut self.rng, white_var)
            } else {
                0.0
            };
            path.push(self.osc_phase + white);
            if step_var > 0.0 {
                self.osc_phase += gaussian(&mut self.rng, step_var);
            }
        }
        path
    }

    /// Drift term at absolute time `t_s`.
    pub fn drift_at(&self, t_s: f64) -> f64 {
        drift_phase_with_mode(
            self.params.drift_mode,
            t_s,
            self.params.drift_amplitude_rad,
            self.params.drift_tau_s,
        )
    }

    /// Deterministic part of the rotation at absolute time `t_s`.
    fn deterministic_phase(&self, t_s: f64) -> f64 {
        self.params.theta_rf_rad + TAU * self.params.cfo_hz * t_s + self.drift_at(t_s)
    }
}

/// Rotates a chain's frame by `exp(j(2π·cfo·t + θ_OS(t) + θ_RF + drift(t)))`.
///
/// `t` is absolute time: `cycle_start_time_s` plus the sample's offset in the
/// frame. The oscillator path is drawn sample by sample over the chain's chirp
/// span. In [`OscillatorMode::Free`] the state is also carried analytically
/// through the rest of the frame and the idle gap up to the next cycle; in
/// [`OscillatorMode::Locked`] it is re-anchored at the start of the burst.
/// Silent samples stay exactly zero.
pub fn apply_tx_impairments(
    frame: &ComplexSignal,
    state: &mut ChainImpairmentState,
    schedule: &FrameSchedule,
    cycle_start_time_s: f64,
    cycle_interval_s: f64,
) -> Result<ComplexSignal, SignalError> {
    if frame.len() < schedule.frame_length_samples {
        return Err(SignalError::FrameTooShort {
            required: schedule.frame_length_samples,
            actual: frame.len(),
        });
    }
    let fs = frame.sample_rate_hz;
    let span = schedule.chirp_range(state.chain_index)?;

    let (before, path, after) = match state.mode {
        OscillatorMode::Locked => {
            state.relock();
            let before = state.osc_phase;
            let path = state.oscillator_trajectory(span.len(), fs);
            (before, path, state.osc_phase)
        }
        OscillatorMode::Free => {
            let before = state.osc_phase;
            state.advance_oscillator(span.start as f64 / fs);
            let path = state.oscillator_trajectory(span.len(), fs);
            let after = state.osc_phase;
            state.advance_oscillator((frame.len() - span.end) as f64 / fs);
            let gap = (cycle_interval_s - frame.duration_s()).max(0.0);
            state.advance_oscillator(gap);
            (before, path, after)
        }
    };

    let zero = Complex64::new(0.0, 0.0);
    let samples = frame
        .samples
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            if x == zero {
                return zero;
            }
            let osc = if n < span.start {
                before
            } else if n < span.end {
                path[n - span.start]
            } else {
                after
            };
            let t = cycle_start_time_s + frame.time_of(n);
            x * Complex64::from_polar(1.0, state.deterministic_phase(t) + osc)
        })
        .collect();
    Ok(ComplexSignal {
        samples,
        sample_rate_hz: fs,
        start_time_s: frame.start_time_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::wrap_phase;
    use crate::rng::{stream, Stream};
    use crate::waveform::{build_frame, generate_chirp};
    use crate::SystemConfig;

    fn state(params: ChainParams, mode: OscillatorMode, seed: u64) -> ChainImpairmentState {
        ChainImpairmentState::new(0, params, mode, stream(seed, Stream::TxChain(0)))
    }

    fn sample_var(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn noiseless_oscillator_never_moves() {
        let mut s = state(ChainParams::ideal(), OscillatorMode::Free, 1);
        for dt in [0.0, 1e-6, 0.05, 100.0] {
            s.advance_oscillator(dt);
            assert_eq!(s.osc_phase(), 0.0);
        }
    }

    #[test]
    fn zero_interval_leaves_state() {
        let p = ChainParams {
            wiener_rate_rad2_per_s: 5.0,
            ..ChainParams::ideal()
        };
        let mut s = state(p, OscillatorMode::Free, 2);
        s.advance_oscillator(0.3);
        let before = s.osc_phase();
        s.advance_oscillator(0.0);
        assert_eq!(s.osc_phase(), before);
    }

    #[test]
    fn increment_variance_matches_rate_times_dt() {
        // σ_w² = 1e-4 rad²/s over 50 ms -> 5e-6 rad²
        let p = ChainParams {
            wiener_rate_rad2_per_s: 1e-4,
            ..ChainParams::ideal()
        };
        let mut s = state(p, OscillatorMode::Free, 3);
        let mut incs = Vec::with_capacity(100_000);
        for _ in 0..100_000 {
            let before = s.osc_phase();
            s.advance_oscillator(0.05);
            incs.push(s.osc_phase() - before);
        }
        let v = sample_var(&incs);
        assert!((v / 5e-6 - 1.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn trajectory_without_noise_is_constant() {
        let mut s = state(ChainParams::ideal(), OscillatorMode::Free, 4);
        s.osc_phase = 0.25;
        let path = s.oscillator_trajectory(100, 1e6);
        assert!(path.iter().all(|&p| p == 0.25));
    }

    #[test]
    fn white_only_trajectory_variance() {
        let p = ChainParams {
            white_phase_var_rad2: 1e-6,
            ..ChainParams::ideal()
        };
        let mut s = state(p, OscillatorMode::Free, 5);
        let path = s.oscillator_trajectory(1_000_000, 80e6);
        let v = sample_var(&path);
        assert!((v / 1e-6 - 1.0).abs() < 0.01, "variance {v}");
        assert_eq!(s.osc_phase(), 0.0);
    }

    #[test]
    fn trajectory_end_variance() {
        // 4e-2 rad²/s · 1500 / 4 MHz = 1.5e-5 rad²
        let p = ChainParams {
            wiener_rate_rad2_per_s: 4e-2,
            ..ChainParams::ideal()
        };
        let ends: Vec<f64> = (0..10_000)
            .map(|k| {
                let mut s = ChainImpairmentState::new(
                    0,
                    p,
                    OscillatorMode::Free,
                    stream(k, Stream::Custom(9)),
                );
                let path = s.oscillator_trajectory(1500, 4e6);
                assert_eq!(path.len(), 1500);
                s.osc_phase()
            })
            .collect();
        let v = ends.iter().map(|x| x * x).sum::<f64>() / ends.len() as f64;
        assert!((v / 1.5e-5 - 1.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn wiener_variance_grows_linearly() {
        let rate = 2.0;
        let fs = 1e5;
        let n = 400;
        let runs = 10_000;
        let mut acc = vec![0.0; n];
        for k in 0..runs {
            let p = ChainParams {
                wiener_rate_rad2_per_s: rate,
                ..ChainParams::ideal()
            };
            let mut s = ChainImpairmentState::new(
                0,
                p,
                OscillatorMode::Free,
                stream(k, Stream::Custom(11)),
            );
            for (a, x) in acc.iter_mut().zip(s.oscillator_trajectory(n, fs)) {
                *a += x * x;
            }
        }
        let t: Vec<f64> = (0..n).map(|k| k as f64 / fs).collect();
        let v: Vec<f64> = acc.iter().map(|a| a / runs as f64).collect();
        let tm = t.iter().sum::<f64>() / n as f64;
        let vm = v.iter().sum::<f64>() / n as f64;
        let slope = t
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - tm) * (b - vm))
            .sum::<f64>()
            / t.iter().map(|a| (a - tm).powi(2)).sum::<f64>();
        assert!((slope / rate - 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn drift_values() {
        assert_eq!(drift_phase(0.0, 0.3, 10.0), 0.0);
        assert!((drift_phase(500.0, 0.3, 10.0) - 0.3).abs() < 1e-12);
        let at_tau = drift_phase(10.0, 1.0, 10.0);
        assert!((at_tau - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((at_tau - 0.6321).abs() < 1e-4);
        assert_eq!(drift_phase_with_mode(DriftMode::Linear, 4.0, 0.5, 2.0), 1.0);
    }

    fn one_chain_frame(n: usize, guard: usize) -> (Vec<ComplexSignal>, FrameSchedule) {
        let mut cfg = SystemConfig::high_bandwidth_ideal();
        cfg.num_chains = 1;
        cfg.chains.truncate(1);
        cfg.num_chirp_samples = n;
        cfg.guard_samples = guard;
        let chirp = generate_chirp(cfg.bandwidth_hz, cfg.sample_rate_hz, n);
        build_frame(&cfg, &chirp).unwrap()
    }

    #[test]
    fn no_impairments_is_identity() {
        let (frames, sched) = one_chain_frame(64, 8);
        for mode in [OscillatorMode::Locked, OscillatorMode::Free] {
            let mut s = state(ChainParams::ideal(), mode, 6);
            let out = apply_tx_impairments(&frames[0], &mut s, &sched, 0.0, 0.05).unwrap();
            assert_eq!(out, frames[0]);
        }
    }

    #[test]
    fn constant_frontend_rotation() {
        let (frames, sched) = one_chain_frame(64, 8);
        let p = ChainParams {
            theta_rf_rad: 0.7,
            ..ChainParams::ideal()
        };
        let mut s = state(p, OscillatorMode::Locked, 7);
        let out = apply_tx_impairments(&frames[0], &mut s, &sched, 3.5, 0.05).unwrap();
        for (x, y) in frames[0].samples.iter().zip(&out.samples) {
            if x.norm() > 0.0 {
                assert!((wrap_phase((y / x).arg() - 0.7)).abs() < 1e-12);
            } else {
                assert_eq!(y.norm(), 0.0);
            }
        }
    }

    #[test]
    fn cfo_ramp_matches_closed_form() {
        let fs = 80e6;
        let frame = ComplexSignal::new(vec![Complex64::new(1.0, 0.0); 2000], fs);
        let sched = FrameSchedule::new(1, 2000, 0);
        let p = ChainParams {
            cfo_hz: 1e3,
            ..ChainParams::ideal()
        };
        let mut s = state(p, OscillatorMode::Locked, 8);
        let out = apply_tx_impairments(&frame, &mut s, &sched, 0.0, 0.05).unwrap();
        for (n, y) in out.samples.iter().enumerate() {
            let want = TAU * 1e3 * n as f64 / fs;
            assert!((y.arg() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn locked_mode_restarts_each_burst() {
        let (frames, sched) = one_chain_frame(32, 4);
        let p = ChainParams {
            wiener_rate_rad2_per_s: 1e6,
            ..ChainParams::ideal()
        };
        let mut s = state(p, OscillatorMode::Locked, 9);
        for l in 0..3 {
            let out =
                apply_tx_impairments(&frames[0], &mut s, &sched, l as f64 * 0.05, 0.05).unwrap();
            // first chirp sample carries zero excursion
            let first = sched.chirp_range(0).unwrap().start;
            assert!((out.samples[first] - frames[0].samples[first]).norm() < 1e-12);
        }
    }

    #[test]
    fn free_mode_accumulates_through_gap() {
        let (frames, sched) = one_chain_frame(10, 0);
        let p = ChainParams {
            wiener_rate_rad2_per_s: 1e-2,
            ..ChainParams::ideal()
        };
        let runs = 20_000;
        let mut finals = Vec::with_capacity(runs);
        for k in 0..runs {
            let mut s = ChainImpairmentState::new(
                0,
                p,
                OscillatorMode::Free,
                stream(k as u64, Stream::Custom(3)),
            );
            apply_tx_impairments(&frames[0], &mut s, &sched, 0.0, 0.05).unwrap();
            finals.push(s.osc_phase());
        }
        let v = finals.iter().map(|x| x * x).sum::<f64>() / runs as f64;
        // state advanced through the whole 50 ms cycle
        assert!((v / (1e-2 * 0.05) - 1.0).abs() < 0.05, "variance {v}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn impairments_preserve_magnitude_and_are_deterministic(
                seed in any::<u64>(),
                theta in -3.0f64..3.0,
                cfo in -1e4f64..1e4,
                rate in 0.0f64..10.0,
                white in 0.0f64..0.1,
                amp in -1.0f64..1.0,
                free in any::<bool>(),
            ) {
                let (frames, sched) = one_chain_frame(48, 6);
                let p = ChainParams {
                    theta_rf_rad: theta,
                    cfo_hz: cfo,
                    wiener_rate_rad2_per_s: rate,
                    white_phase_var_rad2: white,
                    drift_amplitude_rad: amp,
                    drift_tau_s: 7.0,
                    drift_mode: DriftMode::Exponential,
                };
                let mode = if free { OscillatorMode::Free } else { OscillatorMode::Locked };
                let mut a = state(p, mode, seed);
                let mut b = state(p, mode, seed);
                let out_a = apply_tx_impairments(&frames[0], &mut a, &sched, 1.25, 0.05).unwrap();
                let out_b = apply_tx_impairments(&frames[0], &mut b, &sched, 1.25, 0.05).unwrap();
                prop_assert_eq!(&out_a, &out_b);
                for (x, y) in frames[0].samples.iter().zip(&out_a.samples) {
                    prop_assert!((x.norm() - y.norm()).abs() < 1e-12);
                }
            }
        }
    }
}
