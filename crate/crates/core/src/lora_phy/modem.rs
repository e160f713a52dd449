//! Chirp modulation and dechirp-FFT demodulation.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::LoRaSymbolStream;
use crate::error::{Error, Result};
use crate::params::LoRaConfig;
use crate::signal::BasebandSignal;

/// Number of leading symbols sent at the reduced (two LSBs dropped) rate
/// regardless of LDRO.
pub const REDUCED_RATE_HEADER_SYMBOLS: usize = 8;

/// Precomputed chirp tables and FFT plan for one configuration.
pub struct LoRaModem {
    cfg: LoRaConfig,
    base: Vec<Complex64>,
    tones: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for LoRaModem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LoRaModem").field("cfg", &self.cfg).finish()
    }
}

impl LoRaModem {
    pub fn new(cfg: &LoRaConfig) -> Self {
        let m = cfg.symbol_len();
        // phase n²/(2M) − n/2 cycles, reduced exactly in integers
        let base = (0..m as u64)
            .map(|n| {
                let quad = (n * n) % (2 * m as u64);
                let cycles = quad as f64 / (2 * m) as f64 - (n % 2) as f64 / 2.0;
                Complex64::from_polar(1.0, TAU * cycles)
            })
            .collect();
        let tones = (0..m)
            .map(|k| Complex64::from_polar(1.0, TAU * k as f64 / m as f64))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        Self {
            cfg: cfg.clone(),
            base,
            tones,
            fft,
        }
    }

    pub fn config(&self) -> &LoRaConfig {
        &self.cfg
    }

    /// Base upchirp (symbol 0), sweeping −B/2..B/2 over one symbol.
    pub fn base_chirp(&self) -> &[Complex64] {
        &self.base
    }

    /// Samples occupied by the preamble: full upchirps plus a fractional tail.
    pub fn preamble_len(&self) -> usize {
        let m = self.cfg.symbol_len();
        let full = self.cfg.preamble_symbols.floor();
        let frac = self.cfg.preamble_symbols - full;
        full as usize * m + (frac * m as f64).round() as usize
    }

    /// Samples occupied by `symbols` payload symbols.
    pub fn payload_len(&self, symbols: usize) -> usize {
        symbols * self.cfg.symbol_len()
    }

    fn push_symbol(&self, s: u32, out: &mut Vec<Complex64>) {
        let m = self.cfg.symbol_len();
        let s = s as usize % m;
        out.extend(
            self.base
                .iter()
                .enumerate()
                .map(|(n, b)| b * self.tones[(s * n) % m]),
        );
    }

    /// Cyclically shifted upchirps, optionally preceded by the preamble.
    pub fn modulate(&self, stream: &LoRaSymbolStream, include_preamble: bool) -> BasebandSignal {
        let m = self.cfg.symbol_len();
        let pre = if include_preamble { self.preamble_len() } else { 0 };
        let mut samples = Vec::with_capacity(pre + stream.symbols.len() * m);
        if include_preamble {
            let full = self.cfg.preamble_symbols.floor() as usize;
            for _ in 0..full {
                samples.extend_from_slice(&self.base);
            }
            let tail = pre - full * m;
            samples.extend_from_slice(&self.base[..tail]);
        }
        for &s in &stream.symbols {
            self.push_symbol(s, &mut samples);
        }
        BasebandSignal {
            samples,
            sample_rate_hz: self.cfg.bandwidth_hz,
        }
    }

    /// Squared DFT magnitudes of one dechirped symbol.
    pub fn dechirp_spectrum(&self, symbol: &[Complex64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = symbol.iter().zip(&self.base).map(|(r, b)| r * b.conj()).collect();
        self.fft.process(&mut buf);
        buf.iter().map(|c| c.norm_sqr()).collect()
    }

    fn detect(&self, symbol: &[Complex64], buf: &mut Vec<Complex64>, reduced: bool) -> u32 {
        let m = self.cfg.symbol_len();
        buf.clear();
        buf.extend(symbol.iter().zip(&self.base).map(|(r, b)| r * b.conj()));
        self.fft.process(buf);
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, c) in buf.iter().enumerate() {
            let p = c.norm_sqr();
            if p > best.1 {
                best = (k, p);
            }
        }
        let bin = best.0;
        if reduced {
            (((bin + 2) / 4 * 4) % m) as u32
        } else {
            bin as u32
        }
    }

    /// Whether payload symbol `index` carries only `SF − 2` bits.
    pub fn is_reduced(&self, index: usize) -> bool {
        self.cfg.ldro_enabled || index < REDUCED_RATE_HEADER_SYMBOLS
    }

    /// Hard symbol decisions for a frame-aligned payload (no preamble).
    pub fn demodulate(&self, signal: &BasebandSignal) -> Result<LoRaSymbolStream> {
        let m = self.cfg.symbol_len();
        if !signal.len().is_multiple_of(m) {
            return Err(Error::LengthMismatch {
                expected: (signal.len() / m + 1) * m,
                actual: signal.len(),
            });
        }
        let mut buf = Vec::with_capacity(m);
        let symbols = signal
            .samples
            .chunks_exact(m)
            .enumerate()
            .map(|(i, chunk)| self.detect(chunk, &mut buf, self.is_reduced(i)))
            .collect();
        Ok(LoRaSymbolStream {
            symbols,
            sf_exponent: self.cfg.sf_exponent,
            ldro_enabled: self.cfg.ldro_enabled,
        })
    }
}
