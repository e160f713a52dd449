//! Monte Carlo engine for frame-error-rate curves.
//!
//! Every trial draws from its own ChaCha stream keyed by
//! `(master_seed, point, trial)`, and results are aggregated in index order,
//! so a sweep is bit-identical for any worker count.

mod report;

pub use report::{curve_to_csv, parse_metadata};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{ChannelSpec, DriftSpec};
use crate::error::{Error, Result};
use crate::lora_phy::{lora_decode, lora_encode, LoRaModem};
use crate::params::{setting, Setting, SettingId, UcssConfig, WaveformConfig};
use crate::signal::BasebandSignal;
use crate::ucss_phy::{ucss_build_frame, ucss_modulate, ucss_slot_schedule, SlotSchedule, UcssReceiver};

/// Default seed of the pseudo-random pause pattern used by sweeps.
pub const DEFAULT_CODE_SEED: u64 = 1;

/// Result of one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub frame_ok: bool,
    /// Pre-FEC decision errors: LoRa symbols or UCSS chirps.
    pub symbol_errors: usize,
}

enum Chain {
    LoRa(LoRaModem),
    Ucss {
        cfg: UcssConfig,
        schedule: SlotSchedule,
        receiver: UcssReceiver,
    },
}

/// Transmitter and receiver for one setting, reused across trials.
pub struct TrialRunner {
    setting: Setting,
    chain: Chain,
}

impl TrialRunner {
    pub fn new(setting: &Setting, code_seed: u64) -> Self {
        let chain = match &setting.config {
            WaveformConfig::LoRa(cfg) => Chain::LoRa(LoRaModem::new(cfg)),
            WaveformConfig::Ucss(cfg) => Chain::Ucss {
                cfg: cfg.clone(),
                schedule: ucss_slot_schedule(cfg, code_seed),
                receiver: UcssReceiver::new(cfg),
            },
        };
        Self {
            setting: setting.clone(),
            chain,
        }
    }

    pub fn setting(&self) -> &Setting {
        &self.setting
    }

    /// Noiseless transmit signal for `payload` and the sample where the
    /// receiver's carrier reference ends. LoRa frames carry only the payload
    /// since the receiver assumes ideal synchronisation.
    pub fn transmit(&self, payload: &[u8]) -> Result<(BasebandSignal, usize)> {
        match &self.chain {
            Chain::LoRa(modem) => {
                let stream = lora_encode(payload, modem.config())?;
                Ok((modem.modulate(&stream, false), 0))
            }
            Chain::Ucss { cfg, schedule, .. } => {
                let frame = ucss_build_frame(payload, cfg)?;
                let sig = ucss_modulate(&frame, schedule, cfg)?;
                Ok((sig, schedule.chirp_start_samples[cfg.preamble_symbols]))
            }
        }
    }

    /// Random payload → impaired channel → receiver.
    pub fn run<R: Rng + ?Sized>(&self, channel: &ChannelSpec, rng: &mut R) -> Result<TrialOutcome> {
        self.run_captured(channel, rng).map(|(outcome, _)| outcome)
    }

    /// Like [`TrialRunner::run`], also returning the received signal.
    pub fn run_captured<R: Rng + ?Sized>(
        &self,
        channel: &ChannelSpec,
        rng: &mut R,
    ) -> Result<(TrialOutcome, BasebandSignal)> {
        let mut payload = vec![0u8; self.setting.config.payload_bytes()];
        rng.fill(payload.as_mut_slice());
        match &self.chain {
            Chain::LoRa(modem) => {
                let cfg = modem.config();
                let stream = lora_encode(&payload, cfg)?;
                let tx = modem.modulate(&stream, false);
                let rx = channel.apply(&tx, 0, rng)?;
                let detected = modem.demodulate(&rx)?;
                let decoded = lora_decode(&detected, cfg)?;
                let outcome = TrialOutcome {
                    frame_ok: decoded == payload,
                    symbol_errors: detected.count_differences(&stream),
                };
                Ok((outcome, rx))
            }
            Chain::Ucss {
                cfg,
                schedule,
                receiver,
            } => {
                let frame = ucss_build_frame(&payload, cfg)?;
                let tx = ucss_modulate(&frame, schedule, cfg)?;
                let onset = schedule.chirp_start_samples[cfg.preamble_symbols];
                let rx = channel.apply(&tx, onset, rng)?;
                let out = receiver.receive(&rx, schedule)?;
                let symbol_errors = out
                    .hard_bits
                    .iter()
                    .zip(&frame.bits)
                    .filter(|(a, b)| a != b)
                    .count();
                let outcome = TrialOutcome {
                    frame_ok: out.frame_ok && out.payload == payload,
                    symbol_errors,
                };
                Ok((outcome, rx))
            }
        }
    }
}

/// One frame through the setting's chain.
pub fn run_trial<R: Rng + ?Sized>(
    setting: &Setting,
    channel: &ChannelSpec,
    rng: &mut R,
) -> Result<TrialOutcome> {
    TrialRunner::new(setting, DEFAULT_CODE_SEED).run(channel, rng)
}

/// Swept quantity of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    SnrDb,
    DriftRate,
}

impl SweepKind {
    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::SnrDb => "snr_db",
            SweepKind::DriftRate => "drift_rate",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "snr_db" => Ok(SweepKind::SnrDb),
            "drift_rate" => Ok(SweepKind::DriftRate),
            _ => Err(Error::Parse(format!("unknown sweep kind {s:?}"))),
        }
    }
}

/// A complete, reproducible sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub setting: SettingId,
    pub sweep: SweepKind,
    pub grid: Vec<f64>,
    /// Channel for every point; the swept field is overwritten per point.
    pub channel: ChannelSpec,
    pub trials_per_point: usize,
    pub master_seed: u64,
    /// SNR above the setting's required SNR used by drift sweeps.
    pub snr_margin_db: f64,
    pub code_seed: u64,
}

impl ExperimentSpec {
    /// FER versus SNR with an optional phase-noise profile.
    pub fn fer_snr(setting: SettingId, grid: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            setting,
            sweep: SweepKind::SnrDb,
            grid,
            channel: ChannelSpec::clean(),
            trials_per_point: trials,
            master_seed: seed,
            snr_margin_db: 3.0,
            code_seed: DEFAULT_CODE_SEED,
        }
    }

    /// FER versus linear drift rate at required SNR plus the margin.
    pub fn fer_drift(setting: SettingId, grid: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            sweep: SweepKind::DriftRate,
            channel: ChannelSpec {
                drift: DriftSpec::Linear { rate_hz_per_s: 0.0 },
                ..ChannelSpec::clean()
            },
            ..Self::fer_snr(setting, grid, trials, seed)
        }
    }

    /// FER versus triangle-wave drift rate with amplitude `B/4`.
    pub fn fer_triangle(setting: SettingId, grid: Vec<f64>, trials: usize, seed: u64) -> Self {
        let max_cfo_hz = crate::params::setting(setting).config.bandwidth_hz() / 4.0;
        Self {
            channel: ChannelSpec {
                drift: DriftSpec::Triangle {
                    rate_hz_per_s: 1.0,
                    max_cfo_hz,
                },
                ..ChannelSpec::clean()
            },
            ..Self::fer_drift(setting, grid, trials, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("sweep grid is empty".into()));
        }
        if self
            .grid
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()))
            || self.grid.iter().any(|x| x.is_nan())
        {
            return Err(Error::InvalidParameter("sweep grid must be sorted".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::InvalidParameter(
                "trials per point must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Channel used at grid value `x`.
    pub fn channel_at(&self, x: f64) -> ChannelSpec {
        let mut ch = self.channel.clone();
        match self.sweep {
            SweepKind::SnrDb => ch.snr_db = x,
            SweepKind::DriftRate => {
                ch.snr_db = setting(self.setting).required_snr_db + self.snr_margin_db;
                ch.drift = ch.drift.with_rate(x);
            }
        }
        ch
    }
}

/// Aggregate of one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub fer: f64,
    pub mean_symbol_errors: f64,
    pub trials: usize,
    pub frame_errors: usize,
    /// Half-width of the 95 % Wilson score interval.
    pub ci95: f64,
}

impl CurvePoint {
    pub fn from_outcomes(x: f64, outcomes: &[TrialOutcome]) -> Self {
        let trials = outcomes.len();
        let frame_errors = outcomes.iter().filter(|o| !o.frame_ok).count();
        let symbol_errors: usize = outcomes.iter().map(|o| o.symbol_errors).sum();
        Self {
            x,
            fer: frame_errors as f64 / trials as f64,
            mean_symbol_errors: symbol_errors as f64 / trials as f64,
            trials,
            frame_errors,
            ci95: wilson_halfwidth(frame_errors, trials, 1.96),
        }
    }

    /// Wilson interval bounds.
    pub fn interval(&self) -> (f64, f64) {
        let centre = wilson_centre(self.frame_errors, self.trials, 1.96);
        ((centre - self.ci95).max(0.0), (centre + self.ci95).min(1.0))
    }
}

fn wilson_centre(k: usize, n: usize, z: f64) -> f64 {
    let n = n as f64;
    let p = k as f64 / n;
    (p + z * z / (2.0 * n)) / (1.0 + z * z / n)
}

/// Half-width of the Wilson score interval for `k` successes in `n`.
pub fn wilson_halfwidth(k: usize, n: usize, z: f64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    z / (1.0 + z * z / nf) * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt()
}

/// Independent RNG for one trial.
pub fn trial_rng(master_seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

/// Runs every grid point, using `threads` workers (`None` for the global
/// pool).
pub fn run_sweep_with_threads(spec: &ExperimentSpec, threads: Option<usize>) -> Result<Vec<CurvePoint>> {
    spec.validate()?;
    let runner = TrialRunner::new(&setting(spec.setting), spec.code_seed);
    let channels: Vec<ChannelSpec> = spec.grid.iter().map(|&x| spec.channel_at(x)).collect();
    for ch in &channels {
        ch.drift.validate()?;
    }
    let n = spec.trials_per_point;
    let jobs = spec.grid.len() * n;
    let work = || -> Result<Vec<TrialOutcome>> {
        (0..jobs)
            .into_par_iter()
            .map(|j| {
                let (point, trial) = (j / n, j % n);
                runner.run(&channels[point], &mut trial_rng(spec.master_seed, point, trial))
            })
            .collect()
    };
    let outcomes = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    Ok(spec
        .grid
        .iter()
        .zip(outcomes.chunks(n))
        .map(|(&x, chunk)| CurvePoint::from_outcomes(x, chunk))
        .collect())
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<CurvePoint>> {
    run_sweep_with_threads(spec, None)
}

/// First `x` at which the FER reaches `threshold`, interpolated linearly
/// between grid points; `+∞` if it never does.
pub fn drift_onset(curve: &[CurvePoint], threshold: f64) -> Result<f64> {
    if curve
        .windows(2)
        .any(|w| w[0].x.partial_cmp(&w[1].x).is_none_or(|o| o.is_gt()))
    {
        return Err(Error::UnsortedCurve);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let Some(first) = curve.first() else {
        return Ok(f64::INFINITY);
    };
    if first.fer >= threshold {
        return Ok(first.x);
    }
    for w in curve.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.fer < threshold && b.fer >= threshold {
            return Ok(a.x + (threshold - a.fer) / (b.fer - a.fer) * (b.x - a.x));
        }
    }
    Ok(f64::INFINITY)
}

/// SNR at which a falling FER curve first drops below `threshold`, by
/// linear interpolation. `-∞` if the first point is already below, `+∞` if
/// the curve never gets there.
pub fn fer_crossing(curve: &[CurvePoint], threshold: f64) -> Result<f64> {
    if curve
        .windows(2)
        .any(|w| w[0].x.partial_cmp(&w[1].x).is_none_or(|o| o.is_gt()))
    {
        return Err(Error::UnsortedCurve);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    match curve.first() {
        None => return Ok(f64::INFINITY),
        Some(p) if p.fer < threshold => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    for w in curve.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.fer >= threshold && b.fer < threshold {
            return Ok(a.x + (a.fer - threshold) / (a.fer - b.fer) * (b.x - a.x));
        }
    }
    Ok(f64::INFINITY)
}
