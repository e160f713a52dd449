//! CSV output with a `#` metadata header that reproduces the sweep.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{CurvePoint, ExperimentSpec, SweepKind};
use crate::channel::{ChannelSpec, DriftSpec, PhaseNoiseProfile};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "x,fer,mean_symbol_errors,trials,ci95";

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn profile_field(p: &Option<PhaseNoiseProfile>) -> String {
    match p {
        None => "none".into(),
        Some(p) => p
            .points()
            .iter()
            .map(|(f, l)| format!("{f}:{l}"))
            .collect::<Vec<_>>()
            .join(";"),
    }
}

/// Metadata lines (without the leading `# `) describing `spec`.
pub fn metadata_lines(spec: &ExperimentSpec, experiment: &str) -> Vec<String> {
    let ch = &spec.channel;
    let (kind, rate, max_cfo) = match ch.drift {
        DriftSpec::None => ("none", 0.0, 0.0),
        DriftSpec::Linear { rate_hz_per_s } => ("linear", rate_hz_per_s, 0.0),
        DriftSpec::Triangle {
            rate_hz_per_s,
            max_cfo_hz,
        } => ("triangle", rate_hz_per_s, max_cfo_hz),
    };
    vec![
        format!("experiment: {experiment}"),
        format!("setting: {}", spec.setting),
        format!("sweep: {}", spec.sweep.name()),
        format!("grid: {}", join(&spec.grid)),
        format!("trials: {}", spec.trials_per_point),
        format!("seed: {}", spec.master_seed),
        format!("code_seed: {}", spec.code_seed),
        format!("snr_margin_db: {}", spec.snr_margin_db),
        format!("snr_db: {}", ch.snr_db),
        format!("phase_noise: {}", profile_field(&ch.phase_noise)),
        format!("drift: {kind}"),
        format!("drift_rate_hz_per_s: {rate}"),
        format!("max_cfo_hz: {max_cfo}"),
        format!("random_phase: {}", ch.random_phase),
    ]
}

/// Full CSV text: metadata header, column names, one row per point.
pub fn curve_to_csv(spec: &ExperimentSpec, experiment: &str, curve: &[CurvePoint]) -> String {
    let mut out = String::new();
    for line in metadata_lines(spec, experiment) {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{CSV_HEADER}");
    for p in curve {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.x, p.fer, p.mean_symbol_errors, p.trials, p.ci95
        );
    }
    out
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: bad number {v:?}")))
}

/// Rebuilds the experiment name and spec from a CSV's metadata header.
pub fn parse_metadata(csv: &str) -> Result<(String, ExperimentSpec)> {
    let mut map = BTreeMap::new();
    for line in csv.lines() {
        let Some(rest) = line.strip_prefix('#') else {
            continue;
        };
        if let Some((k, v)) = rest.trim().split_once(':') {
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let get = |k: &str| {
        map.get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse(format!("metadata key {k:?} missing")))
    };
    let grid = get("grid")?
        .split(',')
        .map(|v| parse_f64("grid", v))
        .collect::<Result<Vec<_>>>()?;
    let phase_noise = match get("phase_noise")? {
        "none" => None,
        text => Some(PhaseNoiseProfile::new(
            text.split(';')
                .map(|pair| {
                    let (f, l) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("bad profile point {pair:?}")))?;
                    Ok((parse_f64("phase_noise", f)?, parse_f64("phase_noise", l)?))
                })
                .collect::<Result<Vec<_>>>()?,
        )?),
    };
    let rate = parse_f64("drift_rate_hz_per_s", get("drift_rate_hz_per_s")?)?;
    let drift = match get("drift")? {
        "none" => DriftSpec::None,
        "linear" => DriftSpec::Linear { rate_hz_per_s: rate },
        "triangle" => DriftSpec::Triangle {
            rate_hz_per_s: rate,
            max_cfo_hz: parse_f64("max_cfo_hz", get("max_cfo_hz")?)?,
        },
        other => return Err(Error::Parse(format!("unknown drift kind {other:?}"))),
    };
    let parse_u = |k: &str| -> Result<u64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Parse(format!("{k}: bad integer")))
    };
    let spec = ExperimentSpec {
        setting: get("setting")?.parse()?,
        sweep: SweepKind::from_name(get("sweep")?)?,
        grid,
        channel: ChannelSpec {
            snr_db: parse_f64("snr_db", get("snr_db")?)?,
            phase_noise,
            drift,
            random_phase: get("random_phase")? == "true",
        },
        trials_per_point: parse_u("trials")? as usize,
        master_seed: parse_u("seed")?,
        snr_margin_db: parse_f64("snr_margin_db", get("snr_margin_db")?)?,
        code_seed: parse_u("code_seed")?,
    };
    Ok((get("experiment")?.to_string(), spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SettingId;

    #[test]
    fn metadata_round_trip() {
        let mut spec = ExperimentSpec::fer_snr(SettingId::lora(4), vec![-24.0, -23.5, -21.0], 17, 99);
        spec.channel.phase_noise = Some(PhaseNoiseProfile::preset(4).unwrap());
        let csv = curve_to_csv(&spec, "fer-snr", &[]);
        assert_eq!(parse_metadata(&csv).unwrap(), ("fer-snr".to_string(), spec));

        let tri = ExperimentSpec::fer_triangle(SettingId::ucss(5), vec![0.1, 1e3], 3, u64::MAX);
        let csv = curve_to_csv(&tri, "fer-triangle", &[]);
        assert_eq!(parse_metadata(&csv).unwrap().1, tri);
    }

    #[test]
    fn csv_layout() {
        let spec = ExperimentSpec::fer_drift(SettingId::ucss(4), vec![20.0], 2, 1);
        let point = CurvePoint {
            x: 20.0,
            fer: 0.5,
            mean_symbol_errors: 1.5,
            trials: 2,
            frame_errors: 1,
            ci95: 0.25,
        };
        let csv = curve_to_csv(&spec, "fer-drift", &[point]);
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec![CSV_HEADER, "20,0.5,1.5,2,0.25"]);
        assert!(parse_metadata("x,fer\n").is_err());
    }
}
