//! UCSS transceiver chain.
//!
//! A frame is the payload bits (MSB first per byte) followed by a CRC-3,
//! convolutionally encoded at rate 1/2 when configured and punctured so the
//! coded length is exactly `(8·PL + CRC) / CR`. Each coded bit is
//! differentially BPSK modulated onto one linear upchirp of `chirp_length`
//! samples. A preamble of back-to-back reference chirps precedes the data
//! chirps, and the pause budget `ceil(N/2)²` samples is spread over the gaps
//! between data chirps by a seeded pseudo-random composition.
//!
//! The receiver correlates each slot at its known offset, estimates the
//! carrier offset from the preamble, and detects data differentially. A
//! decision-directed second-order loop keeps the inter-chirp phase
//! increment locked while the carrier drifts during the frame.

pub mod fec;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::{ucss_pause_samples, ucss_symbol_count, CodeRate, UcssConfig};
use crate::signal::BasebandSignal;
use fec::{conv_encode, crc3, crc3_ok, depuncture, puncture, puncture_positions, viterbi_decode};

/// Coded bits carried by the data chirps of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UcssFrameBits {
    pub bits: Vec<u8>,
}

/// Start sample of every chirp in a frame, preamble first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSchedule {
    pub chirp_start_samples: Vec<usize>,
    pub chirp_length: usize,
}

impl SlotSchedule {
    /// Total frame length in samples, ending with the last chirp.
    pub fn frame_len(&self) -> usize {
        self.chirp_start_samples
            .last()
            .map_or(0, |&s| s + self.chirp_length)
    }

    /// Idle samples between consecutive chirps.
    pub fn gaps(&self) -> Vec<usize> {
        self.chirp_start_samples
            .windows(2)
            .map(|w| w[1] - w[0] - self.chirp_length)
            .collect()
    }
}

/// Complex correlation value of every chirp slot, preamble first.
#[derive(Debug, Clone, PartialEq)]
pub struct UcssSymbolObservations {
    pub peaks: Vec<Complex64>,
}

/// Everything the receiver derives from one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct UcssReception {
    pub payload: Vec<u8>,
    /// CRC-3 check result on the decoded frame.
    pub frame_ok: bool,
    /// Hard pre-FEC decision per data chirp.
    pub hard_bits: Vec<u8>,
    /// Soft metric per data chirp; positive favours bit 0.
    pub soft_bits: Vec<f64>,
    pub observations: UcssSymbolObservations,
    /// Carrier offset estimated from the preamble.
    pub preamble_cfo_hz: f64,
}

fn payload_bits(payload: &[u8]) -> Vec<u8> {
    payload
        .iter()
        .flat_map(|&byte| (0..8).rev().map(move |k| (byte >> k) & 1))
        .collect()
}

fn pack_bits(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect()
}

fn check_rate(rate: CodeRate) -> Result<()> {
    if rate == CodeRate::ONE || rate == CodeRate::HALF {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "UCSS framing supports code rates 1 and 1/2, got {rate}"
        )))
    }
}

/// Positions removed from the terminated rate-1/2 stream to hit the frame
/// length.
fn frame_puncturing(cfg: &UcssConfig, n_sym: usize) -> Result<(usize, Vec<usize>)> {
    let mother = conv_encode(&vec![0; cfg.info_bits()]).len();
    if mother < n_sym {
        return Err(Error::InvalidConfig(format!(
            "coded frame of {mother} bits cannot fill {n_sym} symbols"
        )));
    }
    Ok((mother, puncture_positions(mother, mother - n_sym)))
}

/// Builds the coded frame for a payload.
pub fn ucss_build_frame(payload: &[u8], cfg: &UcssConfig) -> Result<UcssFrameBits> {
    if payload.len() != cfg.payload_bytes {
        return Err(Error::LengthMismatch {
            expected: cfg.payload_bytes,
            actual: payload.len(),
        });
    }
    check_rate(cfg.code_rate)?;
    if cfg.crc_bits != 3 {
        return Err(Error::InvalidConfig(format!(
            "only a 3-bit CRC is implemented, got {}",
            cfg.crc_bits
        )));
    }
    let n_sym = ucss_symbol_count(cfg)?;
    let mut info = payload_bits(payload);
    info.extend(crc3(&info));
    let bits = if cfg.code_rate == CodeRate::ONE {
        info
    } else {
        let (_, positions) = frame_puncturing(cfg, n_sym)?;
        puncture(&conv_encode(&info), &positions)
    };
    debug_assert_eq!(bits.len(), n_sym);
    Ok(UcssFrameBits { bits })
}

/// Decodes soft chirp metrics back into `(payload, crc_ok)`.
pub fn ucss_decode_frame(soft: &[f64], cfg: &UcssConfig) -> Result<(Vec<u8>, bool)> {
    check_rate(cfg.code_rate)?;
    let n_sym = ucss_symbol_count(cfg)?;
    if soft.len() != n_sym {
        return Err(Error::LengthMismatch {
            expected: n_sym,
            actual: soft.len(),
        });
    }
    let info: Vec<u8> = if cfg.code_rate == CodeRate::ONE {
        soft.iter().map(|&y| (y < 0.0) as u8).collect()
    } else {
        let (_, positions) = frame_puncturing(cfg, n_sym)?;
        viterbi_decode(&depuncture(soft, &positions))
    };
    let ok = crc3_ok(&info);
    Ok((pack_bits(&info[..cfg.payload_bytes * 8]), ok))
}

/// Chirp positions for a frame: contiguous preamble, then data chirps with
/// the pause budget split pseudo-randomly over the gaps before each of them.
pub fn ucss_slot_schedule(cfg: &UcssConfig, code_seed: u64) -> SlotSchedule {
    let n_sym = ucss_symbol_count(cfg).expect("validated UCSS config");
    let pause = ucss_pause_samples(n_sym);
    // random composition of `pause` into `n_sym` non-negative parts
    let mut rng = ChaCha8Rng::seed_from_u64(code_seed);
    let mut bars = sample(&mut rng, pause + n_sym - 1, n_sym - 1).into_vec();
    bars.sort_unstable();
    let mut gaps = Vec::with_capacity(n_sym);
    let mut prev = 0usize;
    for (i, &b) in bars.iter().enumerate() {
        gaps.push(b - i - prev);
        prev = b - i;
    }
    gaps.push(pause - prev);

    let sf = cfg.chirp_length;
    let mut starts: Vec<usize> = (0..cfg.preamble_symbols).map(|k| k * sf).collect();
    let mut next = cfg.preamble_symbols * sf;
    for g in gaps {
        next += g;
        starts.push(next);
        next += sf;
    }
    SlotSchedule {
        chirp_start_samples: starts,
        chirp_length: sf,
    }
}

/// Base upchirp sweeping `−B/2..B/2` over `len` samples.
pub fn ucss_base_chirp(len: usize) -> Vec<Complex64> {
    let sf = len as f64;
    (0..len)
        .map(|n| {
            let n = n as f64;
            Complex64::from_polar(1.0, PI * (n * n / sf - n))
        })
        .collect()
}

/// Base chirp advanced by `shift` samples, evaluated on the same grid.
fn shifted_chirp(len: usize, shift: f64) -> Vec<Complex64> {
    let sf = len as f64;
    (0..len)
        .map(|n| {
            let t = n as f64 + shift;
            Complex64::from_polar(1.0, PI * (t * t / sf - t))
        })
        .collect()
}

fn check_schedule(schedule: &SlotSchedule, cfg: &UcssConfig) -> Result<usize> {
    let n_sym = ucss_symbol_count(cfg)?;
    let expected = cfg.preamble_symbols + n_sym;
    if schedule.chirp_start_samples.len() != expected || schedule.chirp_length != cfg.chirp_length {
        return Err(Error::LengthMismatch {
            expected,
            actual: schedule.chirp_start_samples.len(),
        });
    }
    Ok(n_sym)
}

/// Differential BPSK on chirps placed per `schedule`, zeros in the gaps.
pub fn ucss_modulate(
    bits: &UcssFrameBits,
    schedule: &SlotSchedule,
    cfg: &UcssConfig,
) -> Result<BasebandSignal> {
    let n_sym = check_schedule(schedule, cfg)?;
    if bits.bits.len() != n_sym {
        return Err(Error::LengthMismatch {
            expected: n_sym,
            actual: bits.bits.len(),
        });
    }
    let chirp = ucss_base_chirp(cfg.chirp_length);
    let mut samples = vec![Complex64::new(0.0, 0.0); schedule.frame_len()];
    let mut sign = 1.0;
    let signs = std::iter::repeat_n(0u8, cfg.preamble_symbols)
        .chain(bits.bits.iter().copied())
        .enumerate()
        .map(|(k, b)| {
            if k >= cfg.preamble_symbols && b & 1 == 1 {
                sign = -sign;
            }
            sign
        });
    for (&start, s) in schedule.chirp_start_samples.iter().zip(signs) {
        for (out, c) in samples[start..start + cfg.chirp_length].iter_mut().zip(&chirp) {
            *out = c * s;
        }
    }
    Ok(BasebandSignal {
        samples,
        sample_rate_hz: cfg.bandwidth_hz,
    })
}

/// Gains of the decision-directed frequency tracking loop, applied to the
/// per-chirp phase error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingGains {
    pub proportional: f64,
    pub integral: f64,
}

impl TrackingGains {
    pub const DEFAULT: TrackingGains = TrackingGains {
        proportional: 0.05,
        integral: 0.0012,
    };
}

/// Correlation receiver with preamble CFO estimation.
#[derive(Debug, Clone)]
pub struct UcssReceiver {
    cfg: UcssConfig,
    chirp_conj: Vec<Complex64>,
    tracking: Option<TrackingGains>,
}

impl UcssReceiver {
    pub fn new(cfg: &UcssConfig) -> Self {
        Self {
            cfg: cfg.clone(),
            chirp_conj: ucss_base_chirp(cfg.chirp_length)
                .into_iter()
                .map(|c| c.conj())
                .collect(),
            tracking: Some(TrackingGains::DEFAULT),
        }
    }

    /// Replaces the tracking gains; `None` keeps the preamble estimate fixed.
    pub fn with_tracking(mut self, gains: Option<TrackingGains>) -> Self {
        self.tracking = gains;
        self
    }

    /// Normalised correlation with the base chirp at each scheduled slot.
    pub fn observe(
        &self,
        signal: &BasebandSignal,
        schedule: &SlotSchedule,
    ) -> Result<UcssSymbolObservations> {
        check_schedule(schedule, &self.cfg)?;
        if signal.len() < schedule.frame_len() {
            return Err(Error::LengthMismatch {
                expected: schedule.frame_len(),
                actual: signal.len(),
            });
        }
        let scale = 1.0 / self.cfg.chirp_length as f64;
        let peaks = schedule
            .chirp_start_samples
            .iter()
            .map(|&start| {
                signal.samples[start..start + self.cfg.chirp_length]
                    .iter()
                    .zip(&self.chirp_conj)
                    .map(|(r, c)| r * c)
                    .sum::<Complex64>()
                    * scale
            })
            .collect();
        Ok(UcssSymbolObservations { peaks })
    }

    /// Full receive chain on a frame-aligned signal.
    pub fn receive(&self, signal: &BasebandSignal, schedule: &SlotSchedule) -> Result<UcssReception> {
        let obs = self.observe(signal, schedule)?;
        let pre = self.cfg.preamble_symbols;
        let starts = &schedule.chirp_start_samples;

        // phase advance per sample from consecutive preamble correlations
        let acc: Complex64 = (1..pre).map(|k| obs.peaks[k] * obs.peaks[k - 1].conj()).sum();
        let mut omega = if pre >= 2 {
            acc.arg() / self.cfg.chirp_length as f64
        } else {
            0.0
        };
        let preamble_cfo_hz = omega * self.cfg.bandwidth_hz / (2.0 * PI);

        let mut ramp = 0.0;
        let mut soft = Vec::with_capacity(obs.peaks.len() - pre);
        let mut hard = Vec::with_capacity(obs.peaks.len() - pre);
        for k in pre.max(1)..obs.peaks.len() {
            let span = (starts[k] - starts[k - 1]) as f64;
            let z = obs.peaks[k] * obs.peaks[k - 1].conj() * Complex64::from_polar(1.0, -omega * span);
            let bit = (z.re < 0.0) as u8;
            soft.push(z.re);
            hard.push(bit);
            if let Some(g) = self.tracking {
                let decided = if bit == 1 { -z } else { z };
                let err = decided.arg() / span;
                ramp += g.integral * err;
                omega += g.proportional * err + ramp;
            }
        }
        if pre == 0 {
            // no reference chirp: the first data chirp is taken as +1
            let z = obs.peaks[0];
            soft.insert(0, z.re);
            hard.insert(0, (z.re < 0.0) as u8);
        }

        let (payload, frame_ok) = ucss_decode_frame(&soft, &self.cfg)?;
        Ok(UcssReception {
            payload,
            frame_ok,
            hard_bits: hard,
            soft_bits: soft,
            observations: obs,
            preamble_cfo_hz,
        })
    }
}

/// Demodulates and decodes a frame-aligned signal.
pub fn ucss_demodulate(
    signal: &BasebandSignal,
    schedule: &SlotSchedule,
    cfg: &UcssConfig,
) -> Result<(Vec<u8>, bool)> {
    if signal.len() != schedule.frame_len() {
        return Err(Error::LengthMismatch {
            expected: schedule.frame_len(),
            actual: signal.len(),
        });
    }
    let rx = UcssReceiver::new(cfg).receive(signal, schedule)?;
    Ok((rx.payload, rx.frame_ok))
}

/// Lag in samples, to a hundredth of a sample, at which a received chirp
/// best matches the base chirp.
///
/// A carrier offset `f` moves the peak to `f·L/B` samples for chirp length
/// `L`, the time/frequency coupling of a linear chirp.
pub fn correlation_peak_offset(chirp: &[Complex64], search_span: f64) -> f64 {
    let len = chirp.len();
    let score = |shift: f64| -> f64 {
        shifted_chirp(len, shift)
            .iter()
            .zip(chirp)
            .map(|(c, r)| r * c.conj())
            .sum::<Complex64>()
            .norm()
    };
    let steps = (search_span * 20.0).ceil() as i64;
    let coarse = (-steps..=steps)
        .map(|i| i as f64 / 20.0)
        .max_by(|a, b| score(*a).total_cmp(&score(*b)))
        .unwrap_or(0.0);
    (-5..=5)
        .map(|i| coarse + i as f64 / 100.0)
        .max_by(|a, b| score(*a).total_cmp(&score(*b)))
        .unwrap_or(coarse)
}
