//! Frame parameters of the two waveforms.
//!
//! Closed-form calculators for symbol counts, frame timing, data rate,
//! overhead and the CFO / drift-rate limits of LoRa-like CSS and UCSS, plus
//! the registry of the twelve reference settings (`LS-1`..`LS-6`,
//! `US-1`..`US-6`) with their published values.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Symbol duration at and above which LoRa must run with LDRO enabled.
pub const LDRO_SYMBOL_TIME_S: f64 = 16.38e-3;

/// Default LoRa preamble length in symbols (12 upchirps plus a quarter chirp).
pub const LORA_DEFAULT_PREAMBLE: f64 = 12.25;

/// Default UCSS header length in chirps.
pub const UCSS_DEFAULT_PREAMBLE: usize = 6;

/// Default UCSS CRC length in bits.
pub const UCSS_DEFAULT_CRC_BITS: u32 = 3;

/// Static parameters of a LoRa-like frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LoRaConfig {
    /// Sample rate / occupied bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Spreading exponent; a symbol spans `2^sf_exponent` samples.
    pub sf_exponent: u32,
    /// Code-rate index; the Hamming code is `4/(4 + cr_index)`.
    pub cr_index: u32,
    pub ldro_enabled: bool,
    pub payload_bytes: usize,
    pub preamble_symbols: f64,
}

impl LoRaConfig {
    pub fn new(
        bandwidth_hz: f64,
        sf_exponent: u32,
        cr_index: u32,
        ldro_enabled: bool,
        payload_bytes: usize,
    ) -> Result<Self> {
        Self::with_preamble(
            bandwidth_hz,
            sf_exponent,
            cr_index,
            ldro_enabled,
            payload_bytes,
            LORA_DEFAULT_PREAMBLE,
        )
    }

    pub fn with_preamble(
        bandwidth_hz: f64,
        sf_exponent: u32,
        cr_index: u32,
        ldro_enabled: bool,
        payload_bytes: usize,
        preamble_symbols: f64,
    ) -> Result<Self> {
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {bandwidth_hz}"
            )));
        }
        if !(5..=12).contains(&sf_exponent) {
            return Err(Error::InvalidConfig(format!(
                "spreading exponent must be in 5..=12, got {sf_exponent}"
            )));
        }
        if cr_index > 4 {
            return Err(Error::InvalidConfig(format!(
                "code-rate index must be in 0..=4, got {cr_index}"
            )));
        }
        if payload_bytes == 0 {
            return Err(Error::InvalidConfig("payload must be at least one byte".into()));
        }
        if !(preamble_symbols.is_finite() && preamble_symbols >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "preamble length must be non-negative, got {preamble_symbols}"
            )));
        }
        let cfg = Self {
            bandwidth_hz,
            sf_exponent,
            cr_index,
            ldro_enabled,
            payload_bytes,
            preamble_symbols,
        };
        if cfg.symbol_duration_s() >= LDRO_SYMBOL_TIME_S && !ldro_enabled {
            return Err(Error::InvalidConfig(format!(
                "symbol time {:.2} ms requires LDRO",
                cfg.symbol_duration_s() * 1e3
            )));
        }
        Ok(cfg)
    }

    /// Samples (and FFT bins) per symbol, `2^SF`.
    pub fn symbol_len(&self) -> usize {
        1 << self.sf_exponent
    }

    pub fn symbol_duration_s(&self) -> f64 {
        self.symbol_len() as f64 / self.bandwidth_hz
    }

    /// 1 when LDRO is enabled, else 0.
    pub fn de(&self) -> u32 {
        u32::from(self.ldro_enabled)
    }

    /// Information bits carried by one payload symbol.
    pub fn bits_per_symbol(&self) -> u32 {
        self.sf_exponent - 2 * self.de()
    }

    /// Code rate as a fraction.
    pub fn code_rate(&self) -> f64 {
        4.0 / (4 + self.cr_index) as f64
    }
}

/// A code rate `num/den` with `0 < num <= den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeRate {
    num: u32,
    den: u32,
}

impl CodeRate {
    pub const ONE: CodeRate = CodeRate { num: 1, den: 1 };
    pub const HALF: CodeRate = CodeRate { num: 1, den: 2 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::InvalidConfig(format!(
                "code rate must be in (0, 1], got {num}/{den}"
            )));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Static parameters of a UCSS frame.
#[derive(Debug, Clone, PartialEq)]
pub struct UcssConfig {
    pub bandwidth_hz: f64,
    /// Samples per chirp (the UCSS spreading factor).
    pub chirp_length: usize,
    pub code_rate: CodeRate,
    pub payload_bytes: usize,
    pub crc_bits: u32,
    pub preamble_symbols: usize,
}

impl UcssConfig {
    pub fn new(
        bandwidth_hz: f64,
        chirp_length: usize,
        code_rate: CodeRate,
        payload_bytes: usize,
    ) -> Result<Self> {
        Self::with_framing(
            bandwidth_hz,
            chirp_length,
            code_rate,
            payload_bytes,
            UCSS_DEFAULT_CRC_BITS,
            UCSS_DEFAULT_PREAMBLE,
        )
    }

    pub fn with_framing(
        bandwidth_hz: f64,
        chirp_length: usize,
        code_rate: CodeRate,
        payload_bytes: usize,
        crc_bits: u32,
        preamble_symbols: usize,
    ) -> Result<Self> {
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {bandwidth_hz}"
            )));
        }
        if chirp_length < 2 {
            return Err(Error::InvalidConfig(format!(
                "chirp length must be at least 2, got {chirp_length}"
            )));
        }
        if payload_bytes == 0 {
            return Err(Error::InvalidConfig("payload must be at least one byte".into()));
        }
        let cfg = Self {
            bandwidth_hz,
            chirp_length,
            code_rate,
            payload_bytes,
            crc_bits,
            preamble_symbols,
        };
        ucss_symbol_count(&cfg)?;
        Ok(cfg)
    }

    /// Uncoded frame bits: payload plus CRC.
    pub fn info_bits(&self) -> usize {
        self.payload_bytes * 8 + self.crc_bits as usize
    }

    pub fn symbol_duration_s(&self) -> f64 {
        self.chirp_length as f64 / self.bandwidth_hz
    }
}

/// Either waveform's configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum WaveformConfig {
    LoRa(LoRaConfig),
    Ucss(UcssConfig),
}

impl WaveformConfig {
    pub fn bandwidth_hz(&self) -> f64 {
        match self {
            WaveformConfig::LoRa(c) => c.bandwidth_hz,
            WaveformConfig::Ucss(c) => c.bandwidth_hz,
        }
    }

    pub fn payload_bytes(&self) -> usize {
        match self {
            WaveformConfig::LoRa(c) => c.payload_bytes,
            WaveformConfig::Ucss(c) => c.payload_bytes,
        }
    }

    pub fn timing(&self) -> FrameTiming {
        match self {
            WaveformConfig::LoRa(c) => lora_timing(c),
            WaveformConfig::Ucss(c) => ucss_timing(c),
        }
    }
}

/// Every derived timing quantity of a frame. Durations are in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTiming {
    pub symbol_count: usize,
    pub symbol_duration_s: f64,
    pub payload_duration_s: f64,
    pub preamble_duration_s: f64,
    /// Total pause time between chirps; zero for LoRa.
    pub pause_duration_s: f64,
    pub packet_duration_s: f64,
    pub data_rate_bps: f64,
    pub overhead_fraction: f64,
    /// Distance between neighbouring decision tones (LoRa only).
    pub tone_spacing_hz: Option<f64>,
    pub max_cfo_hz: f64,
    /// Maximum CFO divided by the packet duration.
    pub max_drift_hz_per_s_packet: f64,
    /// Maximum CFO divided by the payload duration.
    pub max_drift_hz_per_s_payload: f64,
}

/// Number of LoRa symbols in an implicit-header frame.
pub fn lora_symbol_count(cfg: &LoRaConfig) -> usize {
    let sf = cfg.sf_exponent as i64;
    let de = cfg.de() as i64;
    let numerator = 8 * cfg.payload_bytes as i64 - 4 * sf + 24;
    let denominator = 4 * (sf - 2 * de);
    let blocks = div_ceil(numerator, denominator).max(0);
    (8 + blocks * (cfg.cr_index as i64 + 4)) as usize
}

fn div_ceil(a: i64, b: i64) -> i64 {
    let q = a.div_euclid(b);
    if a.rem_euclid(b) == 0 {
        q
    } else {
        q + 1
    }
}

/// Timing, rate, overhead and drift limits of a LoRa frame.
pub fn lora_timing(cfg: &LoRaConfig) -> FrameTiming {
    let n_sym = lora_symbol_count(cfg);
    let ts = cfg.symbol_duration_s();
    let t_pay = ts * n_sym as f64;
    let t_pre = ts * cfg.preamble_symbols;
    let t_pac = t_pre + t_pay;
    let m = cfg.symbol_len() as f64;
    let (tone_spacing, max_cfo) = if cfg.ldro_enabled {
        (cfg.bandwidth_hz / (m / 4.0), 16.0 * cfg.bandwidth_hz / (3.0 * m))
    } else {
        (cfg.bandwidth_hz / m, cfg.bandwidth_hz / (3.0 * m))
    };
    FrameTiming {
        symbol_count: n_sym,
        symbol_duration_s: ts,
        payload_duration_s: t_pay,
        preamble_duration_s: t_pre,
        pause_duration_s: 0.0,
        packet_duration_s: t_pac,
        data_rate_bps: 8.0 * cfg.payload_bytes as f64 / t_pac,
        overhead_fraction: 1.0 - t_pay / t_pac,
        tone_spacing_hz: Some(tone_spacing),
        max_cfo_hz: max_cfo,
        max_drift_hz_per_s_packet: max_cfo / t_pac,
        max_drift_hz_per_s_payload: max_cfo / t_pay,
    }
}

/// Number of UCSS chirps carrying data, `(8·PL + CRC) / CR`.
pub fn ucss_symbol_count(cfg: &UcssConfig) -> Result<usize> {
    let scaled = cfg.info_bits() as u64 * cfg.code_rate.den() as u64;
    let num = cfg.code_rate.num() as u64;
    if !scaled.is_multiple_of(num) {
        return Err(Error::InvalidConfig(format!(
            "{} info bits at rate {} do not give a whole number of symbols",
            cfg.info_bits(),
            cfg.code_rate
        )));
    }
    Ok((scaled / num) as usize)
}

/// Total pause between chirps in samples, `ceil(N/2)^2`.
pub fn ucss_pause_samples(symbol_count: usize) -> usize {
    let half = symbol_count.div_ceil(2);
    half * half
}

/// Timing, rate, overhead and drift limits of a UCSS frame.
pub fn ucss_timing(cfg: &UcssConfig) -> FrameTiming {
    // validated at construction
    let n_sym = ucss_symbol_count(cfg).expect("validated UCSS config");
    let ts = cfg.symbol_duration_s();
    let t_pay = ts * n_sym as f64;
    let t_pre = ts * cfg.preamble_symbols as f64;
    let t_pause = ucss_pause_samples(n_sym) as f64 / cfg.bandwidth_hz;
    let t_pac = t_pre + t_pay + t_pause;
    let max_cfo = 0.5 * cfg.bandwidth_hz / cfg.chirp_length as f64;
    FrameTiming {
        symbol_count: n_sym,
        symbol_duration_s: ts,
        payload_duration_s: t_pay,
        preamble_duration_s: t_pre,
        pause_duration_s: t_pause,
        packet_duration_s: t_pac,
        data_rate_bps: 8.0 * cfg.payload_bytes as f64 / t_pac,
        overhead_fraction: 1.0 - t_pay / t_pac,
        tone_spacing_hz: None,
        max_cfo_hz: max_cfo,
        max_drift_hz_per_s_packet: max_cfo / t_pac,
        max_drift_hz_per_s_payload: max_cfo / t_pay,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    LoRa,
    Ucss,
}

/// Name of a reference setting, e.g. `LS-4` or `US-2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SettingId {
    family: Family,
    index: u8,
}

impl SettingId {
    pub fn new(family: Family, index: u8) -> Result<Self> {
        if !(1..=6).contains(&index) {
            return Err(Error::UnknownSetting(format!("index {index} out of 1..=6")));
        }
        Ok(Self { family, index })
    }

    pub fn lora(index: u8) -> Self {
        Self::new(Family::LoRa, index).expect("LoRa setting index in 1..=6")
    }

    pub fn ucss(index: u8) -> Self {
        Self::new(Family::Ucss, index).expect("UCSS setting index in 1..=6")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn index(&self) -> u8 {
        self.index
    }

    /// The setting of the other waveform with the same numeral.
    pub fn counterpart(&self) -> Self {
        let family = match self.family {
            Family::LoRa => Family::Ucss,
            Family::Ucss => Family::LoRa,
        };
        Self {
            family,
            index: self.index,
        }
    }
}

impl fmt::Display for SettingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.family {
            Family::LoRa => "LS",
            Family::Ucss => "US",
        };
        write!(f, "{prefix}-{}", self.index)
    }
}

impl FromStr for SettingId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let (family, rest) = if let Some(rest) = upper.strip_prefix("LS") {
            (Family::LoRa, rest)
        } else if let Some(rest) = upper.strip_prefix("US") {
            (Family::Ucss, rest)
        } else {
            return Err(Error::UnknownSetting(s.to_string()));
        };
        let rest = rest.strip_prefix('-').unwrap_or(rest);
        let index: u8 = rest.parse().map_err(|_| Error::UnknownSetting(s.to_string()))?;
        Self::new(family, index).map_err(|_| Error::UnknownSetting(s.to_string()))
    }
}

/// A value as printed in the reference table, with its number of decimals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Printed {
    pub value: f64,
    pub decimals: u32,
}

impl Printed {
    pub const fn new(value: f64, decimals: u32) -> Self {
        Self { value, decimals }
    }

    /// Half a unit of the last printed digit.
    pub fn tolerance(&self) -> f64 {
        0.5 * 10f64.powi(-(self.decimals as i32))
    }

    pub fn matches(&self, computed: f64) -> bool {
        // tiny slack so exact half-unit ties survive binary rounding
        (computed - self.value).abs() <= self.tolerance() * (1.0 + 1e-9) + 1e-12
    }
}

/// Published values of one setting. Durations in ms, overhead in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTiming {
    pub symbol_count: usize,
    pub symbol_duration_ms: Printed,
    pub payload_duration_ms: Printed,
    pub preamble_duration_ms: Printed,
    pub pause_duration_ms: Option<Printed>,
    pub packet_duration_ms: Printed,
    pub data_rate_bps: Printed,
    pub overhead_percent: Printed,
    pub max_cfo_hz: Printed,
    /// Packet divisor for LoRa, payload divisor for UCSS.
    pub max_drift_hz_per_s: Printed,
}

/// One entry of the settings registry.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub id: SettingId,
    pub config: WaveformConfig,
    pub reference: ReferenceTiming,
    pub required_snr_db: f64,
}

impl Setting {
    pub fn timing(&self) -> FrameTiming {
        self.config.timing()
    }

    /// Drift limit under the convention the reference table uses for this
    /// family.
    pub fn table_drift_limit(&self, timing: &FrameTiming) -> f64 {
        match self.id.family {
            Family::LoRa => timing.max_drift_hz_per_s_packet,
            Family::Ucss => timing.max_drift_hz_per_s_payload,
        }
    }

    /// Fields where the computed timing deviates from the published value by
    /// more than half a unit of the last printed digit.
    pub fn reference_mismatches(&self) -> Vec<String> {
        let t = self.timing();
        let r = &self.reference;
        let mut out = Vec::new();
        if t.symbol_count != r.symbol_count {
            out.push(format!(
                "symbol_count: computed {} expected {}",
                t.symbol_count, r.symbol_count
            ));
        }
        let mut check = |name: &str, printed: &Printed, computed: f64| {
            if !printed.matches(computed) {
                out.push(format!(
                    "{name}: computed {computed:.6} expected {} (±{})",
                    printed.value,
                    printed.tolerance()
                ));
            }
        };
        check(
            "symbol_duration_ms",
            &r.symbol_duration_ms,
            t.symbol_duration_s * 1e3,
        );
        check(
            "payload_duration_ms",
            &r.payload_duration_ms,
            t.payload_duration_s * 1e3,
        );
        check(
            "preamble_duration_ms",
            &r.preamble_duration_ms,
            t.preamble_duration_s * 1e3,
        );
        if let Some(p) = &r.pause_duration_ms {
            check("pause_duration_ms", p, t.pause_duration_s * 1e3);
        }
        check(
            "packet_duration_ms",
            &r.packet_duration_ms,
            t.packet_duration_s * 1e3,
        );
        check("data_rate_bps", &r.data_rate_bps, t.data_rate_bps);
        check(
            "overhead_percent",
            &r.overhead_percent,
            t.overhead_fraction * 100.0,
        );
        check("max_cfo_hz", &r.max_cfo_hz, t.max_cfo_hz);
        check(
            "max_drift_hz_per_s",
            &r.max_drift_hz_per_s,
            self.table_drift_limit(&t),
        );
        out
    }
}

const fn p(value: f64, decimals: u32) -> Printed {
    Printed::new(value, decimals)
}

struct LoRaRow {
    b_khz: f64,
    sf: u32,
    cr: u32,
    de: bool,
    pl: usize,
    snr: f64,
    reference: [f64; 10],
}

struct UcssRow {
    b_khz: f64,
    sf: usize,
    pl: usize,
    snr: f64,
    reference: [f64; 10],
}

// symbols, T_S, T_pay, T_pre, T_pause, T_pac, DR, OH %, max CFO, max drift
#[rustfmt::skip]
const LORA_ROWS: [LoRaRow; 6] = [
    LoRaRow { b_khz: 62.0, sf: 9, cr: 4, de: false, pl: 16, snr: -12.5,
        reference: [40.0, 8.3, 330.0, 101.0, 0.0, 431.0, 296.7, 23.0, 40.4, 93.5] },
    LoRaRow { b_khz: 20.0, sf: 9, cr: 4, de: true, pl: 8, snr: -12.5,
        reference: [24.0, 25.6, 614.0, 314.0, 0.0, 928.0, 69.0, 34.0, 208.3, 224.5] },
    LoRaRow { b_khz: 20.0, sf: 10, cr: 4, de: true, pl: 8, snr: -15.0,
        reference: [24.0, 51.2, 1229.0, 627.0, 0.0, 1856.0, 34.5, 34.0, 104.2, 56.1] },
    LoRaRow { b_khz: 20.0, sf: 11, cr: 4, de: true, pl: 8, snr: -17.5,
        reference: [24.0, 102.4, 2458.0, 1254.0, 0.0, 3712.0, 17.2, 34.0, 52.1, 14.0] },
    LoRaRow { b_khz: 20.0, sf: 12, cr: 4, de: true, pl: 8, snr: -20.0,
        reference: [16.0, 204.8, 3277.0, 2509.0, 0.0, 5786.0, 11.1, 43.0, 26.0, 4.5] },
    LoRaRow { b_khz: 20.0, sf: 12, cr: 0, de: true, pl: 4, snr: -20.0,
        reference: [12.0, 204.8, 2458.0, 2509.0, 0.0, 4966.0, 6.4, 51.0, 26.0, 5.2] },
];

#[rustfmt::skip]
const UCSS_ROWS: [UcssRow; 6] = [
    UcssRow { b_khz: 62.0, sf: 67, pl: 8, snr: -12.6,
        reference: [134.0, 1.1, 145.0, 6.0, 72.0, 224.0, 286.1, 35.0, 463.0, 3195.0] },
    UcssRow { b_khz: 20.0, sf: 67, pl: 8, snr: -12.6,
        reference: [134.0, 3.4, 449.0, 20.0, 224.0, 693.0, 92.3, 35.0, 149.0, 332.0] },
    UcssRow { b_khz: 20.0, sf: 117, pl: 8, snr: -15.0,
        reference: [134.0, 5.9, 784.0, 35.0, 224.0, 1043.0, 61.3, 25.0, 85.0, 109.0] },
    UcssRow { b_khz: 20.0, sf: 211, pl: 8, snr: -17.5,
        reference: [134.0, 10.6, 1414.0, 63.0, 224.0, 1701.0, 37.6, 17.0, 47.0, 34.0] },
    UcssRow { b_khz: 20.0, sf: 373, pl: 8, snr: -20.0,
        reference: [134.0, 18.7, 2499.0, 112.0, 224.0, 2835.0, 22.6, 11.9, 27.0, 11.0] },
    UcssRow { b_khz: 20.0, sf: 373, pl: 4, snr: -20.0,
        reference: [70.0, 18.7, 1306.0, 112.0, 61.0, 1479.0, 21.6, 11.7, 27.0, 21.0] },
];

/// Decimals printed in the reference table for UCSS overhead, which switches
/// from whole percent to one decimal for the two longest settings.
fn ucss_overhead_decimals(index: u8) -> u32 {
    if index >= 5 {
        1
    } else {
        0
    }
}

/// All twelve reference settings keyed by id.
pub fn settings_registry() -> BTreeMap<SettingId, Setting> {
    let mut map = BTreeMap::new();
    for (i, row) in LORA_ROWS.iter().enumerate() {
        let id = SettingId::lora(i as u8 + 1);
        let cfg = LoRaConfig::new(row.b_khz * 1e3, row.sf, row.cr, row.de, row.pl)
            .expect("registry LoRa setting is valid");
        let r = row.reference;
        let reference = ReferenceTiming {
            symbol_count: r[0] as usize,
            symbol_duration_ms: p(r[1], 1),
            payload_duration_ms: p(r[2], 0),
            preamble_duration_ms: p(r[3], 0),
            pause_duration_ms: None,
            packet_duration_ms: p(r[5], 0),
            data_rate_bps: p(r[6], 1),
            overhead_percent: p(r[7], 0),
            max_cfo_hz: p(r[8], 1),
            max_drift_hz_per_s: p(r[9], 1),
        };
        map.insert(
            id,
            Setting {
                id,
                config: WaveformConfig::LoRa(cfg),
                reference,
                required_snr_db: row.snr,
            },
        );
    }
    for (i, row) in UCSS_ROWS.iter().enumerate() {
        let id = SettingId::ucss(i as u8 + 1);
        let cfg = UcssConfig::new(row.b_khz * 1e3, row.sf, CodeRate::HALF, row.pl)
            .expect("registry UCSS setting is valid");
        let r = row.reference;
        let reference = ReferenceTiming {
            symbol_count: r[0] as usize,
            symbol_duration_ms: p(r[1], 1),
            payload_duration_ms: p(r[2], 0),
            preamble_duration_ms: p(r[3], 0),
            pause_duration_ms: Some(p(r[4], 0)),
            packet_duration_ms: p(r[5], 0),
            data_rate_bps: p(r[6], 1),
            overhead_percent: p(r[7], ucss_overhead_decimals(id.index)),
            max_cfo_hz: p(r[8], 0),
            max_drift_hz_per_s: p(r[9], 0),
        };
        map.insert(
            id,
            Setting {
                id,
                config: WaveformConfig::Ucss(cfg),
                reference,
                required_snr_db: row.snr,
            },
        );
    }
    map
}

/// Look up one registry entry.
pub fn setting(id: SettingId) -> Setting {
    settings_registry()
        .remove(&id)
        .expect("registry holds every valid id")
}

/// Column names of the rendered parameter table.
pub const TABLE_COLUMNS: [&str; 21] = [
    "setting",
    "family",
    "bandwidth_hz",
    "spreading",
    "code_rate",
    "ldro",
    "payload_bytes",
    "symbol_count",
    "symbol_duration_ms",
    "payload_duration_ms",
    "preamble_symbols",
    "preamble_duration_ms",
    "pause_duration_ms",
    "packet_duration_ms",
    "required_snr_db",
    "data_rate_bps",
    "overhead_fraction",
    "tone_spacing_hz",
    "max_cfo_hz",
    "max_drift_hz_per_s_packet",
    "max_drift_hz_per_s_payload",
];

fn table_cells(s: &Setting, precise: bool) -> Vec<String> {
    let t = s.timing();
    let f = |v: f64, d: usize| {
        if precise {
            format!("{v:.4}")
        } else {
            format!("{v:.d$}")
        }
    };
    let (spreading, code_rate, ldro, preamble) = match &s.config {
        WaveformConfig::LoRa(c) => (
            c.sf_exponent.to_string(),
            format!("4/{}", 4 + c.cr_index),
            u8::from(c.ldro_enabled).to_string(),
            format!("{}", c.preamble_symbols),
        ),
        WaveformConfig::Ucss(c) => (
            c.chirp_length.to_string(),
            c.code_rate.to_string(),
            String::new(),
            c.preamble_symbols.to_string(),
        ),
    };
    let family = match s.id.family {
        Family::LoRa => "lora",
        Family::Ucss => "ucss",
    };
    vec![
        s.id.to_string(),
        family.to_string(),
        format!("{}", s.config.bandwidth_hz()),
        spreading,
        code_rate,
        ldro,
        s.config.payload_bytes().to_string(),
        t.symbol_count.to_string(),
        f(t.symbol_duration_s * 1e3, 1),
        f(t.payload_duration_s * 1e3, 0),
        preamble,
        f(t.preamble_duration_s * 1e3, 0),
        f(t.pause_duration_s * 1e3, 0),
        f(t.packet_duration_s * 1e3, 0),
        format!("{:.1}", s.required_snr_db),
        f(t.data_rate_bps, 1),
        f(t.overhead_fraction, 3),
        t.tone_spacing_hz.map(|v| f(v, 2)).unwrap_or_default(),
        f(t.max_cfo_hz, 1),
        f(t.max_drift_hz_per_s_packet, 1),
        f(t.max_drift_hz_per_s_payload, 1),
    ]
}

/// Rendering of the computed parameter table.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    /// Full-precision cells, one row per setting.
    pub rows: Vec<Vec<String>>,
    rounded: Vec<Vec<String>>,
}

impl Table {
    /// Machine-readable CSV with four decimals on every real-valued cell.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Aligned text rendering rounded like the published table.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| {
                self.rounded
                    .iter()
                    .map(|r| r[c].len())
                    .chain(std::iter::once(self.columns[c].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = line(&self.columns);
        out.push('\n');
        for row in &self.rounded {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

pub fn render_table(registry: &BTreeMap<SettingId, Setting>) -> Table {
    Table {
        columns: TABLE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows: registry.values().map(|s| table_cells(s, true)).collect(),
        rounded: registry.values().map(|s| table_cells(s, false)).collect(),
    }
}
