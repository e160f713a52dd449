//! Complex baseband sample buffers.

use std::io::{self, Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex baseband samples at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl BasebandSignal {
    /// Wraps samples, rejecting empty buffers, non-finite values and a
    /// non-positive rate.
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("signal has no samples".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(Error::InvalidParameter(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Mean power over the samples that are not exactly zero.
    pub fn active_power(&self) -> f64 {
        let (sum, count) = self
            .samples
            .iter()
            .map(|s| s.norm_sqr())
            .filter(|&p| p > 0.0)
            .fold((0.0, 0usize), |(s, c), p| (s + p, c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    /// Copy of `len` samples starting at `start`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start
            .checked_add(len)
            .filter(|&e| e <= self.samples.len())
            .ok_or(Error::LengthMismatch {
                expected: start.saturating_add(len),
                actual: self.samples.len(),
            })?;
        Self::new(self.samples[start..end].to_vec(), self.sample_rate_hz)
    }

    /// Writes interleaved little-endian `f32` I/Q pairs.
    pub fn write_iq_f32<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut buf = Vec::with_capacity(self.samples.len() * 8);
        for s in &self.samples {
            buf.extend_from_slice(&(s.re as f32).to_le_bytes());
            buf.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        w.write_all(&buf)
    }

    /// Reads interleaved little-endian `f32` I/Q pairs.
    pub fn read_iq_f32<R: Read>(mut r: R, sample_rate_hz: f64) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Parse(e.to_string()))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Parse(format!(
                "I/Q dump length {} is not a multiple of 8 bytes",
                bytes.len()
            )));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        Self::new(samples, sample_rate_hz)
    }
}
