//! Welch power spectral density estimation for real sequences.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// One-sided PSD estimate on the bins `k·fs/segment_len`, `k = 0..=segment_len/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs_hz: Vec<f64>,
    /// Density in units²/Hz.
    pub density: Vec<f64>,
    pub segments: usize,
}

impl Psd {
    /// Density at the bin nearest to `freq_hz`.
    pub fn at(&self, freq_hz: f64) -> f64 {
        let df = self.freqs_hz.get(1).copied().unwrap_or(1.0);
        let k = ((freq_hz / df).round() as usize).min(self.density.len() - 1);
        self.density[k]
    }

    /// Accumulates another estimate on the same grid, for averaging.
    pub fn accumulate(&mut self, other: &Psd) {
        for (a, b) in self.density.iter_mut().zip(&other.density) {
            *a += b;
        }
        self.segments += other.segments;
    }

    pub fn scale(&mut self, factor: f64) {
        for d in &mut self.density {
            *d *= factor;
        }
    }
}

/// Welch estimate with a periodic Hann window and 50 % overlap.
///
/// Every bin above DC is doubled, so white noise of variance `σ²` reads
/// `2σ²/fs` on all bins including Nyquist.
pub fn welch_psd(x: &[f64], fs_hz: f64, segment_len: usize) -> Result<Psd> {
    if segment_len < 2 || x.len() < segment_len {
        return Err(Error::InvalidParameter(format!(
            "need at least one segment of {segment_len} samples, got {}",
            x.len()
        )));
    }
    let window: Vec<f64> = (0..segment_len)
        .map(|n| {
            let s = (std::f64::consts::PI * n as f64 / segment_len as f64).sin();
            s * s
        })
        .collect();
    let energy: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let half = segment_len / 2;
    let hop = segment_len / 2;
    let mut density = vec![0.0; half + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    let mut segments = 0;
    let mut start = 0;
    while start + segment_len <= x.len() {
        for ((b, &v), &w) in buf.iter_mut().zip(&x[start..]).zip(&window) {
            *b = Complex64::new(v * w, 0.0);
        }
        fft.process(&mut buf);
        for (d, c) in density.iter_mut().zip(&buf) {
            *d += c.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let norm = 1.0 / (fs_hz * energy * segments as f64);
    for (k, d) in density.iter_mut().enumerate() {
        *d *= if k == 0 { norm } else { 2.0 * norm };
    }
    Ok(Psd {
        freqs_hz: (0..=half)
            .map(|k| k as f64 * fs_hz / segment_len as f64)
            .collect(),
        density,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn white_noise_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sigma = 0.5;
        let fs = 1000.0;
        let x: Vec<f64> = (0..1 << 16)
            .map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let psd = welch_psd(&x, fs, 1024).unwrap();
        let expected = 2.0 * sigma * sigma / fs;
        let mean: f64 = psd.density[1..].iter().sum::<f64>() / (psd.density.len() - 1) as f64;
        assert!((mean / expected - 1.0).abs() < 0.02);
        assert!((psd.at(500.0) / expected).log10().abs() < 0.2);
        assert_eq!(psd.segments, 127);
    }

    #[test]
    fn sinusoid_power_is_preserved() {
        let fs = 1024.0;
        let x: Vec<f64> = (0..8192)
            .map(|n| 2.0 * (std::f64::consts::TAU * 100.0 * n as f64 / fs).cos())
            .collect();
        let psd = welch_psd(&x, fs, 512).unwrap();
        let df = fs / 512.0;
        let power: f64 = psd.density.iter().sum::<f64>() * df;
        assert!((power - 2.0).abs() < 0.01, "{power}");
    }

    #[test]
    fn rejects_short_input() {
        assert!(welch_psd(&[0.0; 10], 1.0, 16).is_err());
    }
}
