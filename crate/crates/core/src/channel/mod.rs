//! Channel impairments: AWGN, oscillator phase noise and carrier drift.

pub mod phase_noise;

pub use phase_noise::{apply_phase_noise, synth_phase_noise, verify_psd, PhaseNoiseProfile, PsdCheck};

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::signal::BasebandSignal;

/// Carrier-frequency drift model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftSpec {
    None,
    /// CFO ramping at a constant rate.
    Linear {
        rate_hz_per_s: f64,
    },
    /// CFO following a triangle wave between 0 and `max_cfo_hz`.
    Triangle {
        rate_hz_per_s: f64,
        max_cfo_hz: f64,
    },
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DriftSpec::None => Ok(()),
            DriftSpec::Linear { rate_hz_per_s } if rate_hz_per_s.is_finite() && rate_hz_per_s >= 0.0 => {
                Ok(())
            }
            DriftSpec::Triangle {
                rate_hz_per_s,
                max_cfo_hz,
            } if rate_hz_per_s.is_finite()
                && rate_hz_per_s > 0.0
                && max_cfo_hz.is_finite()
                && max_cfo_hz > 0.0 =>
            {
                Ok(())
            }
            other => Err(Error::InvalidParameter(format!("invalid drift {other:?}"))),
        }
    }

    /// Same kind with a different rate.
    pub fn with_rate(self, rate_hz_per_s: f64) -> Self {
        match self {
            DriftSpec::None => DriftSpec::Linear { rate_hz_per_s },
            DriftSpec::Linear { .. } => DriftSpec::Linear { rate_hz_per_s },
            DriftSpec::Triangle { max_cfo_hz, .. } => DriftSpec::Triangle {
                rate_hz_per_s,
                max_cfo_hz,
            },
        }
    }
}

/// Full impairment chain applied to one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    /// Per-active-sample SNR; `+∞` disables noise.
    pub snr_db: f64,
    pub phase_noise: Option<PhaseNoiseProfile>,
    pub drift: DriftSpec,
    /// Uniform random carrier phase.
    pub random_phase: bool,
}

impl ChannelSpec {
    pub fn clean() -> Self {
        Self {
            snr_db: f64::INFINITY,
            phase_noise: None,
            drift: DriftSpec::None,
            random_phase: true,
        }
    }

    pub fn awgn(snr_db: f64) -> Self {
        Self {
            snr_db,
            ..Self::clean()
        }
    }

    /// Applies drift (starting at `onset_sample`, where the receiver is
    /// assumed to have zeroed the CFO), phase noise, carrier phase and noise,
    /// in that order.
    pub fn apply<R: Rng + ?Sized>(
        &self,
        signal: &BasebandSignal,
        onset_sample: usize,
        rng: &mut R,
    ) -> Result<BasebandSignal> {
        self.drift.validate()?;
        // Impairments draw from their own stream so the noise realisation
        // does not depend on which impairments are enabled.
        let mut aux = ChaCha8Rng::seed_from_u64(rng.gen());
        let phi = aux.gen::<f64>() * TAU;
        let mut out = match self.drift {
            DriftSpec::None => signal.clone(),
            DriftSpec::Linear { rate_hz_per_s } => apply_cfo_ramp(signal, onset_sample, rate_hz_per_s, 0.0),
            DriftSpec::Triangle {
                rate_hz_per_s,
                max_cfo_hz,
            } => {
                let epoch = aux.gen::<f64>();
                triangle_drift_from(signal, onset_sample, rate_hz_per_s, max_cfo_hz, epoch, true)
            }
        };
        if let Some(profile) = &self.phase_noise {
            out = apply_phase_noise(&out, profile, &mut aux)?;
        }
        if self.random_phase {
            let rot = Complex64::from_polar(1.0, phi);
            out.samples.iter_mut().for_each(|x| *x *= rot);
        }
        Ok(apply_awgn(&out, self.snr_db, rng))
    }
}

/// Adds circular complex Gaussian noise so that the mean power of the
/// non-zero samples over the noise variance equals `snr_db`.
pub fn apply_awgn<R: Rng + ?Sized>(signal: &BasebandSignal, snr_db: f64, rng: &mut R) -> BasebandSignal {
    if snr_db == f64::INFINITY {
        return signal.clone();
    }
    let variance = signal.active_power() / 10f64.powf(snr_db / 10.0);
    let sigma = (variance / 2.0).sqrt();
    BasebandSignal {
        samples: signal
            .samples
            .iter()
            .map(|x| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                x + Complex64::new(re, im) * sigma
            })
            .collect(),
        sample_rate_hz: signal.sample_rate_hz,
    }
}

/// Frequency ramp of `rate_hz_per_s` starting at `onset_sample` (zero CFO
/// before), with constant phase `phase0`.
pub fn apply_cfo_ramp(
    signal: &BasebandSignal,
    onset_sample: usize,
    rate_hz_per_s: f64,
    phase0: f64,
) -> BasebandSignal {
    let ts = signal.sample_period_s();
    BasebandSignal {
        samples: signal
            .samples
            .iter()
            .enumerate()
            .map(|(n, x)| {
                let t = n.saturating_sub(onset_sample) as f64 * ts;
                // integral of 2π·r·t
                x * Complex64::from_polar(1.0, phase0 + std::f64::consts::PI * rate_hz_per_s * t * t)
            })
            .collect(),
        sample_rate_hz: signal.sample_rate_hz,
    }
}

/// Quadratic-phase drift over the whole signal: the CFO grows linearly from
/// 0 at the first sample to `rate·payload_duration` at the last, for any
/// signal length.
pub fn apply_linear_drift<R: Rng + ?Sized>(
    signal: &BasebandSignal,
    rate_hz_per_s: f64,
    payload_duration_s: f64,
    random_phase: bool,
    rng: &mut R,
) -> BasebandSignal {
    let phase0 = if random_phase { rng.gen::<f64>() * TAU } else { 0.0 };
    let span = (signal.len().saturating_sub(1)).max(1) as f64 * signal.sample_period_s();
    let slope = rate_hz_per_s * payload_duration_s / span;
    apply_cfo_ramp(signal, 0, slope, phase0)
}

/// Period of a triangle wave of amplitude `max_cfo_hz` whose slope magnitude
/// is `rate_hz_per_s`.
pub fn triangle_period_s(rate_hz_per_s: f64, max_cfo_hz: f64) -> f64 {
    2.0 * max_cfo_hz / rate_hz_per_s
}

/// Triangle-wave CFO `2·F·|t/T − floor(t/T + 1/2)|`, ranging over `[0, F]`.
pub fn triangle_cfo(t: f64, period_s: f64, max_cfo_hz: f64) -> f64 {
    let u = t / period_s;
    2.0 * max_cfo_hz * (u - (u + 0.5).floor()).abs()
}

/// Phase integral of the triangle CFO starting `epoch` periods into the
/// wave. With `relative`, the CFO at `onset_sample` is subtracted so the
/// receiver sees zero offset there.
pub fn triangle_drift_from(
    signal: &BasebandSignal,
    onset_sample: usize,
    rate_hz_per_s: f64,
    max_cfo_hz: f64,
    epoch: f64,
    relative: bool,
) -> BasebandSignal {
    let ts = signal.sample_period_s();
    let period = triangle_period_s(rate_hz_per_s, max_cfo_hz);
    let t0 = epoch * period;
    let reference = if relative {
        triangle_cfo(t0 + onset_sample as f64 * ts, period, max_cfo_hz)
    } else {
        0.0
    };
    let mut phase = 0.0;
    let samples = signal
        .samples
        .iter()
        .enumerate()
        .map(|(n, x)| {
            let out = x * Complex64::from_polar(1.0, phase);
            // trapezoid integration to the next sample
            let f0 = triangle_cfo(t0 + n as f64 * ts, period, max_cfo_hz) - reference;
            let f1 = triangle_cfo(t0 + (n + 1) as f64 * ts, period, max_cfo_hz) - reference;
            phase = (phase + TAU * 0.5 * (f0 + f1) * ts) % TAU;
            out
        })
        .collect();
    BasebandSignal {
        samples,
        sample_rate_hz: signal.sample_rate_hz,
    }
}

/// Triangle-wave drift with a uniformly random epoch.
pub fn apply_triangle_drift<R: Rng + ?Sized>(
    signal: &BasebandSignal,
    rate_hz_per_s: f64,
    max_cfo_hz: f64,
    rng: &mut R,
) -> Result<BasebandSignal> {
    DriftSpec::Triangle {
        rate_hz_per_s,
        max_cfo_hz,
    }
    .validate()?;
    let epoch = rng.gen::<f64>();
    Ok(triangle_drift_from(
        signal,
        0,
        rate_hz_per_s,
        max_cfo_hz,
        epoch,
        false,
    ))
}

/// Instantaneous frequency in Hz between consecutive samples.
pub fn instantaneous_frequency(signal: &BasebandSignal) -> Vec<f64> {
    signal
        .samples
        .windows(2)
        .map(|w| (w[1] * w[0].conj()).arg() * signal.sample_rate_hz / TAU)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn carrier(n: usize, fs: f64) -> BasebandSignal {
        BasebandSignal::new(vec![Complex64::new(1.0, 0.0); n], fs).unwrap()
    }

    #[test]
    fn infinite_snr_is_identity() {
        let sig = carrier(100, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(apply_awgn(&sig, f64::INFINITY, &mut rng), sig);
    }

    #[test]
    fn measured_snr_matches_request() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sig = BasebandSignal::new(
            (0..1_000_000)
                .map(|k| Complex64::from_polar(1.0, 0.001 * (k as f64).powi(2)))
                .collect(),
            20e3,
        )
        .unwrap();
        for snr in [-20.0, 0.0, 10.0] {
            let rx = apply_awgn(&sig, snr, &mut rng);
            let noise: f64 = rx
                .samples
                .iter()
                .zip(&sig.samples)
                .map(|(r, x)| (r - x).norm_sqr())
                .sum::<f64>()
                / sig.len() as f64;
            assert!((10.0 * (1.0 / noise).log10() - snr).abs() < 0.1);
            if snr == 0.0 {
                assert!((noise - 1.0).abs() < 0.01);
            }
        }
    }

    #[test]
    fn snr_reference_excludes_gaps() {
        let mut s = vec![Complex64::new(0.0, 0.0); 200_000];
        for x in s.iter_mut().step_by(4) {
            *x = Complex64::new(2.0, 0.0);
        }
        let sig = BasebandSignal::new(s, 1.0).unwrap();
        let rx = apply_awgn(&sig, 0.0, &mut ChaCha8Rng::seed_from_u64(2));
        let noise: f64 = rx
            .samples
            .iter()
            .zip(&sig.samples)
            .map(|(r, x)| (r - x).norm_sqr())
            .sum::<f64>()
            / sig.len() as f64;
        assert!((noise - 4.0).abs() < 0.1);
    }

    #[test]
    fn independent_noise_across_seeds() {
        let n = 1_000_000;
        let zero = BasebandSignal::new(vec![Complex64::new(1.0, 0.0); n], 1.0).unwrap();
        let a = apply_awgn(&zero, 0.0, &mut ChaCha8Rng::seed_from_u64(10));
        let b = apply_awgn(&zero, 0.0, &mut ChaCha8Rng::seed_from_u64(11));
        let corr: Complex64 = a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| (x - 1.0) * (y - 1.0).conj())
            .sum::<Complex64>()
            / n as f64;
        assert!(corr.norm() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn zero_rate_is_constant_rotation() {
        let sig = carrier(1000, 1e3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = apply_linear_drift(&sig, 0.0, 1.0, true, &mut rng);
        let first = out.samples[0];
        assert!(out.samples.iter().all(|x| (x - first).norm() < 1e-12));
    }

    #[test]
    fn linear_drift_end_cfo_independent_of_length() {
        let rate = 12.6;
        let t_pay = 2.4576;
        for n in [10_000usize, 100_000, 1_000_000] {
            let fs = n as f64 / 3.0;
            let sig = carrier(n, fs);
            let out = apply_linear_drift(&sig, rate, t_pay, false, &mut ChaCha8Rng::seed_from_u64(0));
            let f = instantaneous_frequency(&out);
            let end = *f.last().unwrap();
            let tol = 1.0 / (n as f64 / fs);
            assert!((end - rate * t_pay).abs() <= tol, "{n}: {end}");
            assert!(f[0].abs() <= tol);
        }
    }

    #[test]
    fn ramp_slope_after_onset() {
        let fs = 1000.0;
        let sig = carrier(5000, fs);
        let out = apply_cfo_ramp(&sig, 1000, 20.0, 0.0);
        let f = instantaneous_frequency(&out);
        assert!(f[..1000].iter().all(|v| v.abs() < 1e-9));
        assert!((f[3999] - 20.0 * 3.0).abs() < 0.05);
    }

    #[test]
    fn triangle_range_and_slope() {
        let fs = 20e3;
        let fmax = 5e3;
        let rate = 250_000.0;
        let sig = carrier(40_000, fs);
        let out = apply_triangle_drift(&sig, rate, fmax, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let f = instantaneous_frequency(&out);
        assert!(f.iter().all(|&v| (-1e-6..=fmax + 1e-6).contains(&v)));
        let step = rate / fs;
        let slopes: Vec<f64> = f.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let on_slope = slopes.iter().filter(|&&d| (d - step).abs() < 1e-3 * step).count();
        // all but the samples straddling a vertex
        assert!(
            on_slope
                >= slopes.len() - 4 * (40_000.0 / fs / triangle_period_s(rate, fmax)).ceil() as usize - 2
        );
    }

    #[test]
    fn triangle_cfo_shape() {
        let t = triangle_period_s(10.0, 5.0);
        assert_eq!(t, 1.0);
        assert_eq!(triangle_cfo(0.0, t, 5.0), 0.0);
        assert!((triangle_cfo(0.5, t, 5.0) - 5.0).abs() < 1e-12);
        assert!((triangle_cfo(0.25, t, 5.0) - 2.5).abs() < 1e-12);
        assert!((triangle_cfo(1.75, t, 5.0) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn triangle_rejects_bad_parameters() {
        let sig = carrier(10, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(apply_triangle_drift(&sig, 0.0, 1.0, &mut rng).is_err());
        assert!(apply_triangle_drift(&sig, 1.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn relative_triangle_starts_at_zero() {
        let fs = 1000.0;
        let sig = carrier(3000, fs);
        let out = triangle_drift_from(&sig, 500, 40.0, 10.0, 0.3, true);
        let f = instantaneous_frequency(&out);
        assert!(f[500].abs() < 0.05);
    }

    #[test]
    fn phase_only_impairments_preserve_magnitude() {
        let sig = BasebandSignal::new(
            (0..4000)
                .map(|k| Complex64::from_polar(0.5 + (k % 7) as f64, k as f64))
                .collect(),
            2e3,
        )
        .unwrap();
        let spec = ChannelSpec {
            snr_db: f64::INFINITY,
            phase_noise: Some(PhaseNoiseProfile::preset(2).unwrap()),
            drift: DriftSpec::Triangle {
                rate_hz_per_s: 50.0,
                max_cfo_hz: 20.0,
            },
            random_phase: true,
        };
        let out = spec.apply(&sig, 100, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(out.len(), sig.len());
        assert_eq!(out.sample_rate_hz, sig.sample_rate_hz);
        for (a, b) in sig.samples.iter().zip(&out.samples) {
            assert!((a.norm() - b.norm()).abs() < 1e-9);
        }
    }
}
