//! Experiment configuration: flags, an optional TOML file, and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use latdec::decoders::DecoderId;
use latdec::stcodes::CodeKind;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ShortVectorScaling,
    SerSweep,
    DmtCurves,
    PrimitiveCount,
}

impl Command {
    pub const ALL: [Command; 4] =
        [Command::ShortVectorScaling, Command::SerSweep, Command::DmtCurves, Command::PrimitiveCount];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::ShortVectorScaling => "short-vector-scaling",
            Command::SerSweep => "ser-sweep",
            Command::DmtCurves => "dmt-curves",
            Command::PrimitiveCount => "primitive-count",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| {
            let valid: Vec<_> = Command::ALL.iter().map(|c| c.as_str()).collect();
            format!("unknown command `{s}`; valid commands: {}", valid.join(", "))
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`; valid formats: csv, json")),
        }
    }
}

/// Raw command-line flags. Every field is optional so that a config file can
/// supply it instead.
#[derive(Debug, Default, Parser)]
#[command(name = "latdec", version, about = "Lattice decoding experiments over Rayleigh MIMO channels")]
pub struct Flags {
    /// TOML file with any of the settings below (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// short-vector-scaling, ser-sweep, dmt-curves or primitive-count
    #[arg(long)]
    pub command: Option<String>,
    /// Transmit antennas
    #[arg(long)]
    pub m: Option<usize>,
    /// Receive antennas
    #[arg(long)]
    pub n: Option<usize>,
    /// Channel uses per block
    #[arg(long)]
    pub t: Option<usize>,
    /// Code lattice: vblast (identity) or golden
    #[arg(long)]
    pub code: Option<String>,
    /// QAM order per complex coefficient
    #[arg(long)]
    pub qam: Option<u32>,
    /// Comma-separated decoders: ml, nld, lll
    #[arg(long, value_delimiter = ',')]
    pub decoders: Option<Vec<String>>,
    /// Comma-separated SNR points in dB
    #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Option<Vec<f64>>,
    /// Comma-separated distance thresholds
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Trials per point
    #[arg(long)]
    pub trials: Option<u64>,
    /// Cap for automatic trial extension on rare events (default: no extension)
    #[arg(long = "max-trials")]
    pub max_trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (standard output when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Integer dimension for primitive-count
    #[arg(long)]
    pub dim: Option<usize>,
    /// Smallest shell index for primitive-count
    #[arg(long = "k-min")]
    pub k_min: Option<u32>,
    /// Largest shell index for primitive-count
    #[arg(long = "k-max")]
    pub k_max: Option<u32>,
    /// Comma-separated multiplexing gains for dmt-curves
    #[arg(long = "r-grid", value_delimiter = ',', allow_hyphen_values = true)]
    pub r_grid: Option<Vec<f64>>,
    /// Node budget for enumeration
    #[arg(long)]
    pub budget: Option<u64>,
}

/// The same settings as [`Flags`], read from a TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub t: Option<usize>,
    pub code: Option<String>,
    pub qam: Option<u32>,
    pub decoders: Option<Vec<String>>,
    pub snr_db: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub max_trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub threads: Option<usize>,
    pub dim: Option<usize>,
    pub k_min: Option<u32>,
    pub k_max: Option<u32>,
    pub r_grid: Option<Vec<f64>>,
    pub budget: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// A fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub code: CodeKind,
    pub qam: u32,
    pub decoders: Vec<DecoderId>,
    pub snr_db: Vec<f64>,
    pub eps: Vec<f64>,
    pub trials: u64,
    pub max_trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub dim: usize,
    pub k_min: u32,
    pub k_max: u32,
    pub r_grid: Vec<f64>,
    pub budget: u64,
}

fn field<T>(name: &str, r: Result<T, String>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(format!("field `{name}`: {e}")))
}

fn invalid(name: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("field `{name}`: {msg}"))
}

impl ExperimentConfig {
    /// Merges flags over file values, fills defaults and validates.
    pub fn resolve(flags: Flags, file: FileConfig) -> Result<Self, CliError> {
        macro_rules! pick {
            ($f:ident) => {
                flags.$f.or(file.$f)
            };
        }
        let command = field("command", pick!(command).ok_or_else(|| "missing".to_string()).and_then(|s| s.parse()))?;
        let m = pick!(m).unwrap_or(2);
        let n = pick!(n).unwrap_or(m);
        let code: CodeKind = field("code", pick!(code).unwrap_or_else(|| "vblast".into()).parse().map_err(|e: latdec::Error| e.to_string()))?;
        let t = pick!(t).unwrap_or(if code == CodeKind::Golden { 2 } else { 1 });
        let qam = pick!(qam).unwrap_or(4);
        let decoders = pick!(decoders)
            .unwrap_or_else(|| vec!["ml".into(), "nld".into()])
            .iter()
            .map(|s| s.trim().parse::<DecoderId>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid("decoders", e))?;
        let snr_db = pick!(snr_db).unwrap_or_default();
        let eps = pick!(eps).unwrap_or_default();
        let trials = pick!(trials).unwrap_or(100_000);
        let max_trials = pick!(max_trials).unwrap_or(trials);
        let seed = pick!(seed).unwrap_or(1);
        let out = pick!(out);
        let format = field("format", pick!(format).unwrap_or_else(|| "csv".into()).parse())?;
        let threads = pick!(threads);
        let dim = pick!(dim).unwrap_or(4);
        let k_min = pick!(k_min).unwrap_or(1);
        let k_max = pick!(k_max).unwrap_or(3);
        let r_grid = pick!(r_grid).unwrap_or_else(|| latdec::analysis::r_grid(m, 4 * m));
        let budget = pick!(budget).unwrap_or(latdec::lattice::DEFAULT_NODE_BUDGET);

        let cfg = Self {
            command,
            m,
            n,
            t,
            code,
            qam,
            decoders,
            snr_db,
            eps,
            trials,
            max_trials,
            seed,
            out,
            format,
            threads,
            dim,
            k_min,
            k_max,
            r_grid,
            budget,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.m == 0 {
            return Err(invalid("m", "must be at least 1"));
        }
        if self.n < self.m {
            return Err(invalid("n", format!("N = {} must be at least M = {}", self.n, self.m)));
        }
        if self.t == 0 {
            return Err(invalid("t", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        if self.budget == 0 {
            return Err(invalid("budget", "must be positive"));
        }
        let needs_trials = matches!(self.command, Command::ShortVectorScaling | Command::SerSweep);
        if needs_trials {
            if self.trials == 0 {
                return Err(invalid("trials", "must be positive"));
            }
            if self.max_trials < self.trials {
                return Err(invalid("max_trials", "must be at least `trials`"));
            }
            if self.code == CodeKind::Golden && (self.m != 2 || self.t != 2) {
                return Err(invalid("code", "golden needs M = 2 and T = 2"));
            }
        }
        match self.command {
            Command::ShortVectorScaling => {
                if self.eps.is_empty() {
                    return Err(invalid("eps", "must list at least one threshold"));
                }
                if let Some(e) = self.eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
                    return Err(invalid("eps", format!("{e} is not a positive number")));
                }
                if 2 * self.m * self.t > 12 {
                    return Err(invalid("t", "realified lattice dimension 2MT must not exceed 12"));
                }
            }
            Command::SerSweep => {
                if self.snr_db.is_empty() {
                    return Err(invalid("snr_db", "must list at least one SNR"));
                }
                if let Some(s) = self.snr_db.iter().find(|s| !s.is_finite()) {
                    return Err(invalid("snr_db", format!("{s} is not finite")));
                }
                if self.decoders.is_empty() {
                    return Err(invalid("decoders", "must list at least one decoder"));
                }
                if !matches!(self.qam, 4 | 16 | 64 | 256) {
                    return Err(invalid("qam", format!("{} is not one of 4, 16, 64, 256", self.qam)));
                }
            }
            Command::DmtCurves => {
                if self.r_grid.is_empty() {
                    return Err(invalid("r_grid", "must list at least one multiplexing gain"));
                }
                if let Some(r) = self.r_grid.iter().find(|r| !(**r >= 0.0 && **r <= self.m as f64)) {
                    return Err(invalid("r_grid", format!("{r} is outside [0, {}]", self.m)));
                }
            }
            Command::PrimitiveCount => {
                if self.dim == 0 {
                    return Err(invalid("dim", "must be at least 1"));
                }
                if self.k_min > self.k_max {
                    return Err(invalid("k_min", "must not exceed k_max"));
                }
            }
        }
        Ok(())
    }
}
