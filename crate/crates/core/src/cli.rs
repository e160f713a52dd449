//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channel::{verify_psd, ChannelSpec, DriftSpec, PhaseNoiseProfile};
use crate::error::Error;
use crate::params::{render_table, setting, settings_registry, SettingId};
use crate::simkit::{
    curve_to_csv, run_sweep_with_threads, trial_rng, ExperimentSpec, TrialRunner, DEFAULT_CODE_SEED,
};

/// Exit status for malformed arguments.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for failures after the arguments were accepted.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "css-linksim", version, about = "Chirp spread spectrum link simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the parameter table of all registry settings.
    Table {
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
    },
    /// Send one random frame through a noiseless channel.
    Loopback {
        #[arg(long)]
        setting: SettingId,
        #[arg(long, env = "CSS_LINKSIM_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CODE_SEED)]
        code_seed: u64,
        /// Write the received signal as interleaved little-endian f32 I/Q.
        #[arg(long)]
        dump_iq: Option<PathBuf>,
    },
    /// Compare the synthesised phase-noise PSD against a profile.
    PnVerify {
        /// Preset name (`pn1`…`pn7`) or profile file.
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 20_000.0)]
        fs: f64,
        #[arg(long, default_value_t = 1 << 20)]
        n: usize,
        /// Number of independent realisations averaged.
        #[arg(long, default_value_t = 100)]
        realisations: usize,
        #[arg(long, env = "CSS_LINKSIM_SEED", default_value_t = 1)]
        seed: u64,
        /// Comma-separated offsets; defaults to the profile's own points.
        #[arg(long, value_delimiter = ',')]
        offsets: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// FER versus SNR in dB.
    FerSnr(SweepArgs),
    /// FER versus linear drift rate in Hz/s.
    FerDrift(SweepArgs),
    /// FER versus triangle-wave drift rate in Hz/s.
    FerTriangle {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Triangle amplitude in Hz; defaults to a quarter of the bandwidth.
        #[arg(long)]
        max_cfo: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub setting: SettingId,
    /// `start:stop:count`, endpoints included.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: GridSpec,
    /// Space the grid points logarithmically.
    #[arg(long)]
    pub log_grid: bool,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, env = "CSS_LINKSIM_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_CODE_SEED)]
    pub code_seed: u64,
    /// Worker cap; all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Phase-noise preset or profile file.
    #[arg(long)]
    pub pn: Option<String>,
    /// Margin over the required SNR used by drift sweeps.
    #[arg(long, default_value_t = 3.0)]
    pub snr_margin: f64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Sweep grid as written on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(format!("expected start:stop:count, got {s:?}"));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("bad grid value {v:?}"))
        };
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("bad grid count {count:?}"))?;
        let grid = GridSpec {
            start: num(start)?,
            stop: num(stop)?,
            count,
        };
        if count == 0 {
            return Err("grid count must be at least 1".into());
        }
        if grid.stop < grid.start {
            return Err("grid stop must not be below start".into());
        }
        if count == 1 && grid.stop != grid.start {
            return Err("a single-point grid needs start == stop".into());
        }
        Ok(grid)
    }
}

impl GridSpec {
    pub fn points(&self, log: bool) -> Result<Vec<f64>, String> {
        if log && self.start <= 0.0 {
            return Err("a log grid needs a positive start".into());
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let steps = (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                let u = i as f64 / steps;
                if i + 1 == self.count {
                    self.stop
                } else if log {
                    self.start * (self.stop / self.start).powf(u)
                } else {
                    self.start + (self.stop - self.start) * u
                }
            })
            .collect())
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownSetting(_) | Error::UnknownProfile(_) | Error::InvalidParameter(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn runtime(e: io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Opens the destination before any work so a bad path fails fast.
fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        None => Box::new(io::stdout().lock()),
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                CliError::Usage(format!("cannot write {}: {e}", p.display()))
            })?))
        }
    })
}

fn load_profile(name: &str) -> Result<PhaseNoiseProfile, CliError> {
    PhaseNoiseProfile::from_name_or_path(name).map_err(|e| CliError::Usage(e.to_string()))
}

/// Builds the experiment a sweep command describes.
pub fn sweep_spec(kind: &str, args: &SweepArgs, max_cfo: Option<f64>) -> Result<ExperimentSpec, CliError> {
    let grid = args.grid.points(args.log_grid).map_err(CliError::Usage)?;
    let mut spec = match kind {
        "fer-snr" => ExperimentSpec::fer_snr(args.setting, grid, args.trials, args.seed),
        "fer-drift" => ExperimentSpec::fer_drift(args.setting, grid, args.trials, args.seed),
        _ => ExperimentSpec::fer_triangle(args.setting, grid, args.trials, args.seed),
    };
    spec.code_seed = args.code_seed;
    spec.snr_margin_db = args.snr_margin;
    spec.channel.phase_noise = args.pn.as_deref().map(load_profile).transpose()?;
    if let (Some(f), DriftSpec::Triangle { rate_hz_per_s, .. }) = (max_cfo, spec.channel.drift) {
        spec.channel.drift = DriftSpec::Triangle {
            rate_hz_per_s,
            max_cfo_hz: f,
        };
        spec.channel.drift.validate()?;
    }
    spec.validate()?;
    Ok(spec)
}

fn run_sweep_command(kind: &str, args: &SweepArgs, max_cfo: Option<f64>) -> Result<(), CliError> {
    let spec = sweep_spec(kind, args, max_cfo)?;
    if args.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let mut out = open_output(&args.out)?;
    let curve = run_sweep_with_threads(&spec, args.threads)?;
    out.write_all(curve_to_csv(&spec, kind, &curve).as_bytes())
        .and_then(|_| out.flush())
        .map_err(runtime)
}

fn loopback(id: SettingId, seed: u64, code_seed: u64, dump: &Option<PathBuf>) -> Result<(), CliError> {
    let runner = TrialRunner::new(&setting(id), code_seed);
    let mut rng = trial_rng(seed, 0, 0);
    let (outcome, rx) = runner.run_captured(&ChannelSpec::clean(), &mut rng)?;
    if let Some(path) = dump {
        let file = File::create(path)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        rx.write_iq_f32(&mut w).and_then(|_| w.flush()).map_err(runtime)?;
    }
    println!(
        "{id}: frame_ok={} symbol_errors={} samples={}",
        outcome.frame_ok,
        outcome.symbol_errors,
        rx.len()
    );
    if outcome.frame_ok {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("{id}: noiseless loopback failed")))
    }
}

fn pn_verify(
    profile: &str,
    fs: f64,
    n: usize,
    realisations: usize,
    seed: u64,
    offsets: &[f64],
    out: &Option<PathBuf>,
) -> Result<(), CliError> {
    let profile = load_profile(profile)?;
    let offsets: Vec<f64> = if offsets.is_empty() {
        profile.points().iter().map(|p| p.0).collect()
    } else {
        offsets.to_vec()
    };
    if let Some(f) = offsets.iter().find(|&&f| !(f > 0.0 && f <= fs / 2.0)) {
        return Err(CliError::Usage(format!("offset {f} Hz outside (0, fs/2]")));
    }
    if n < 32 {
        return Err(CliError::Usage("--n must be at least 32".into()));
    }
    let mut w = open_output(out)?;
    let checks = verify_psd(&profile, fs, n, realisations, seed, &offsets)?;
    let max_dev = checks.iter().map(|c| c.deviation_db().abs()).fold(0.0, f64::max);
    let mut text = format!("# fs_hz: {fs}\n# n: {n}\n# realisations: {realisations}\n# seed: {seed}\n");
    text.push_str(&format!("# max_abs_deviation_db: {max_dev:.3}\n"));
    text.push_str("offset_hz,target_dbc,estimate_dbc,deviation_db\n");
    for c in &checks {
        text.push_str(&format!(
            "{},{:.3},{:.3},{:.3}\n",
            c.offset_hz,
            c.target_dbc,
            c.estimate_dbc,
            c.deviation_db()
        ));
    }
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(runtime)
}

/// Executes a parsed command.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Table { format } => {
            let table = render_table(&settings_registry());
            let text = match format {
                TableFormat::Csv => table.to_csv(),
                TableFormat::Text => table.to_text(),
            };
            io::stdout().write_all(text.as_bytes()).map_err(runtime)
        }
        Command::Loopback {
            setting,
            seed,
            code_seed,
            dump_iq,
        } => loopback(*setting, *seed, *code_seed, dump_iq),
        Command::PnVerify {
            profile,
            fs,
            n,
            realisations,
            seed,
            offsets,
            out,
        } => pn_verify(profile, *fs, *n, *realisations, *seed, offsets, out),
        Command::FerSnr(args) => run_sweep_command("fer-snr", args, None),
        Command::FerDrift(args) => run_sweep_command("fer-drift", args, None),
        Command::FerTriangle { sweep, max_cfo } => run_sweep_command("fer-triangle", sweep, *max_cfo),
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: GridSpec = "20:70:6".parse().unwrap();
        assert_eq!(g.points(false).unwrap(), vec![20.0, 30.0, 40.0, 50.0, 60.0, 70.0]);
        let log = "1:1000:4".parse::<GridSpec>().unwrap().points(true).unwrap();
        assert!((log[1] - 10.0).abs() < 1e-9 && (log[2] - 100.0).abs() < 1e-9);
        assert_eq!(log[3], 1000.0);
        assert_eq!(
            "-21:-21:1".parse::<GridSpec>().unwrap().points(false).unwrap(),
            vec![-21.0]
        );
        for bad in ["1:2", "a:2:3", "1:2:0", "3:1:2", "1:2:1", "1:inf:3", "1:2:x"] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
        assert!("0:10:3".parse::<GridSpec>().unwrap().points(true).is_err());
    }

    #[test]
    fn parses_sweep_flags() {
        let cli = Cli::try_parse_from([
            "css-linksim",
            "fer-drift",
            "--setting",
            "US-4",
            "--grid",
            "20:70:20",
            "--trials",
            "500",
            "--seed",
            "7",
        ])
        .unwrap();
        let Command::FerDrift(args) = &cli.command else {
            panic!("wrong command");
        };
        let spec = sweep_spec("fer-drift", args, None).unwrap();
        assert_eq!(spec.grid.len(), 20);
        assert_eq!(spec.master_seed, 7);
        assert_eq!(spec.setting, SettingId::ucss(4));

        let cli = Cli::try_parse_from([
            "css-linksim",
            "fer-snr",
            "--setting",
            "LS-4",
            "--grid",
            "-24:-20:5",
        ]);
        let Command::FerSnr(args) = cli.unwrap().command else {
            panic!("wrong command");
        };
        assert_eq!(
            args.grid.points(false).unwrap(),
            vec![-24.0, -23.0, -22.0, -21.0, -20.0]
        );
    }

    #[test]
    fn triangle_amplitude_override() {
        let cli = Cli::try_parse_from([
            "css-linksim",
            "fer-triangle",
            "--setting",
            "LS-2",
            "--grid",
            "1:10:2",
            "--max-cfo",
            "900",
        ])
        .unwrap();
        let Command::FerTriangle { sweep, max_cfo } = &cli.command else {
            panic!("wrong command");
        };
        let spec = sweep_spec("fer-triangle", sweep, *max_cfo).unwrap();
        assert!(matches!(spec.channel.drift, DriftSpec::Triangle { max_cfo_hz, .. } if max_cfo_hz == 900.0));
    }

    #[test]
    fn bad_arguments_exit_with_usage_status() {
        assert_eq!(
            main_with_args(["css-linksim", "fer-snr", "--setting", "XS-1", "--grid", "0:1:2"]),
            2
        );
        assert_eq!(
            main_with_args(["css-linksim", "fer-snr", "--setting", "LS-1", "--grid", "0:1"]),
            2
        );
        assert_eq!(main_with_args(["css-linksim", "frobnicate"]), 2);
        assert_eq!(
            main_with_args([
                "css-linksim",
                "fer-snr",
                "--setting",
                "LS-1",
                "--grid",
                "0:1:2",
                "--pn",
                "pn9"
            ]),
            2
        );
    }

    #[test]
    fn usage_and_runtime_are_distinguished() {
        assert_eq!(CliError::from(Error::UnknownSetting("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::Parse("x".into())).exit_code(), 1);
    }
}
