//! Piecewise phase-noise profiles and frequency-domain phase synthesis.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::BasebandSignal;
use crate::spectrum::{welch_psd, Psd};

/// Offsets shared by the seven shipped presets.
pub const PRESET_OFFSETS_HZ: [f64; 4] = [10.0, 100.0, 1000.0, 10000.0];

const PRESET_LEVELS: [[f64; 4]; 7] = [
    [-30.0, -100.0, -120.0, -130.0],
    [-20.0, -90.0, -120.0, -130.0],
    [-15.0, -85.0, -120.0, -130.0],
    [-10.0, -80.0, -120.0, -130.0],
    [-70.0, -100.0, -100.0, -110.0],
    [-70.0, -80.0, -80.0, -80.0],
    [-60.0, -60.0, -60.0, -60.0],
];

/// Phase-noise PSD given at discrete offsets in dBc/Hz.
///
/// Between points the level is linear in `(log10 f, dB)`. Below the first
/// offset it stays flat and above the last one it continues the final
/// segment's slope. The level is read as the one-sided PSD of the phase in
/// rad²/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseNoiseProfile {
    points: Vec<(f64, f64)>,
}

impl PhaseNoiseProfile {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("profile needs at least one point".into()));
        }
        for &(f, l) in &points {
            if !(f.is_finite() && f > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "bad profile point ({f} Hz, {l} dBc/Hz)"
                )));
            }
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter(
                "profile offsets must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    /// Preset `1..=7`.
    pub fn preset(index: usize) -> Result<Self> {
        let levels = index
            .checked_sub(1)
            .and_then(|i| PRESET_LEVELS.get(i))
            .ok_or_else(|| Error::UnknownProfile(format!("pn{index}")))?;
        Self::new(
            PRESET_OFFSETS_HZ
                .iter()
                .copied()
                .zip(levels.iter().copied())
                .collect(),
        )
    }

    /// Resolves `pn1`…`pn7`, or reads a profile file otherwise.
    pub fn from_name_or_path(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        if let Some(idx) = lower.strip_prefix("pn").and_then(|s| s.parse::<usize>().ok()) {
            return Self::preset(idx);
        }
        let path = Path::new(name);
        if path.exists() {
            Self::load(path)
        } else {
            Err(Error::UnknownProfile(name.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Interpolated level in dBc/Hz at `freq_hz > 0`.
    pub fn level_dbc(&self, freq_hz: f64) -> f64 {
        let p = &self.points;
        if p.len() == 1 || freq_hz <= p[0].0 {
            return p[0].1;
        }
        let seg = p
            .windows(2)
            .position(|w| freq_hz <= w[1].0)
            .unwrap_or(p.len() - 2);
        let (f0, l0) = p[seg];
        let (f1, l1) = p[seg + 1];
        let slope = (l1 - l0) / (f1.log10() - f0.log10());
        l0 + slope * (freq_hz.log10() - f0.log10())
    }

    /// One-sided phase PSD in rad²/Hz.
    pub fn density(&self, freq_hz: f64) -> f64 {
        10f64.powf(self.level_dbc(freq_hz) / 10.0)
    }
}

impl FromStr for PhaseNoiseProfile {
    type Err = Error;

    /// Parses lines of `offset_hz level_dbc_per_hz`; blank lines and `#`
    /// comments are skipped.
    fn from_str(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {s:?}", no + 1)))
            };
            match fields.as_slice() {
                [f, l] => points.push((parse(f)?, parse(l)?)),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected two fields, got {}",
                        no + 1,
                        fields.len()
                    )))
                }
            }
        }
        Self::new(points)
    }
}

impl fmt::Display for PhaseNoiseProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (off, lvl) in &self.points {
            writeln!(f, "{off} {lvl}")?;
        }
        Ok(())
    }
}

/// Real phase sequence of `n` samples whose one-sided PSD follows `profile`.
///
/// White complex Gaussian bins are weighted by the square root of the
/// target density on a Hermitian-symmetric grid and transformed back. The
/// DC bin is zero, so the sequence has zero mean and wraps circularly.
pub fn synth_phase_noise<R: Rng + ?Sized>(
    profile: &PhaseNoiseProfile,
    n: usize,
    fs_hz: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if !(fs_hz.is_finite() && fs_hz > 0.0) {
        return Err(Error::InvalidParameter(format!("bad sample rate {fs_hz}")));
    }
    let df = fs_hz / n as f64;
    // E|X[k]|² = S₂(f)·n·fs with two-sided S₂ = S/2
    let bin_scale = |k: usize| (0.5 * profile.density(k as f64 * df) * n as f64 * fs_hz).sqrt();
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    let half = n / 2;
    for k in 1..=half {
        let a = bin_scale(k);
        if 2 * k == n {
            let g: f64 = rng.sample(StandardNormal);
            spec[k] = Complex64::new(a * g, 0.0);
        } else {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let v = Complex64::new(re, im) * (a / std::f64::consts::SQRT_2);
            spec[k] = v;
            spec[n - k] = v.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    Ok(spec.iter().map(|c| c.re / n as f64).collect())
}

/// Multiplies the signal by `exp(jθ[n])` with θ drawn from `profile`.
pub fn apply_phase_noise<R: Rng + ?Sized>(
    signal: &BasebandSignal,
    profile: &PhaseNoiseProfile,
    rng: &mut R,
) -> Result<BasebandSignal> {
    let theta = synth_phase_noise(profile, signal.len().max(2), signal.sample_rate_hz, rng)?;
    Ok(BasebandSignal {
        samples: signal
            .samples
            .iter()
            .zip(&theta)
            .map(|(x, &t)| x * Complex64::from_polar(1.0, t))
            .collect(),
        sample_rate_hz: signal.sample_rate_hz,
    })
}

/// Target and Welch-estimated level at one offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCheck {
    pub offset_hz: f64,
    pub target_dbc: f64,
    pub estimate_dbc: f64,
}

impl PsdCheck {
    pub fn deviation_db(&self) -> f64 {
        self.estimate_dbc - self.target_dbc
    }
}

/// Synthesises `realisations` phase sequences of `n` samples, averages their
/// Welch estimates and compares the result with the profile at `offsets_hz`.
///
/// Realisation `i` uses stream `i` of a ChaCha generator keyed by `seed`.
pub fn verify_psd(
    profile: &PhaseNoiseProfile,
    fs_hz: f64,
    n: usize,
    realisations: usize,
    seed: u64,
    offsets_hz: &[f64],
) -> Result<Vec<PsdCheck>> {
    if realisations == 0 {
        return Err(Error::InvalidParameter("need at least one realisation".into()));
    }
    let segment = (n / 16).max(2);
    let estimates = (0..realisations)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            welch_psd(&synth_phase_noise(profile, n, fs_hz, &mut rng)?, fs_hz, segment)
        })
        .collect::<Result<Vec<Psd>>>()?;
    let mut iter = estimates.into_iter();
    let mut mean = iter.next().expect("at least one realisation");
    iter.for_each(|p| mean.accumulate(&p));
    mean.scale(1.0 / realisations as f64);
    Ok(offsets_hz
        .iter()
        .map(|&f| PsdCheck {
            offset_hz: f,
            target_dbc: profile.level_dbc(f),
            estimate_dbc: 10.0 * mean.at(f).log10(),
        })
        .collect())
}
