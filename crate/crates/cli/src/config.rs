use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sos_lab::scaling_analysis::{default_lags, DEFAULT_SWEEP};
use sos_lab::IncrementKind;

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eigen,
    Sample,
    OracleCheck,
    ScalingStudy,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum DistName {
    DoubleGeometric,
    LazySimpleWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Run configuration as read from `--config`. Every field is optional;
/// command-specific defaults fill the gaps.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub dist: Option<IncrementKind>,
    #[serde(rename = "N")]
    pub n: Option<u64>,
    #[serde(rename = "N_list")]
    pub n_list: Option<Vec<u64>>,
    /// Fixed window half-width; absent means automatic.
    #[serde(rename = "S_max")]
    pub s_max: Option<i64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
    pub t_grid: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub threads: Option<usize>,
}

#[derive(Debug, Parser)]
#[command(name = "sos-lab", version, about = "Transfer-operator laboratory for the SOS interface")]
pub struct Cli {
    /// Command to run.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Same as the positional command.
    #[arg(long = "command", value_enum)]
    pub command_flag: Option<Command>,
    /// JSON run configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "N")]
    pub n: Option<u64>,
    /// Comma separated, strictly increasing.
    #[arg(long = "N-list", value_delimiter = ',')]
    pub n_list: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    pub dist: Option<DistName>,
    /// Decay rate of the double-geometric law.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Holding probability of the lazy walk.
    #[arg(long)]
    pub p0: Option<f64>,
    /// Window half-width, or `auto`.
    #[arg(long = "S-max")]
    pub s_max: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Number of sampled paths (draws for oracle-check).
    #[arg(long)]
    pub paths: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma separated rescaled times.
    #[arg(long = "t-grid", value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overridden by the SOS_LAB_OUT environment variable.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub formats: Option<Vec<Format>>,
    /// Record wall-clock times in the manifest (outputs are then not byte-reproducible).
    #[arg(long)]
    pub timestamps: bool,
}

/// Fully resolved configuration. Its JSON form is hashed into every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub command: Command,
    pub dist: IncrementKind,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "N_list")]
    pub n_list: Vec<u64>,
    #[serde(rename = "S_max")]
    pub s_max: Option<i64>,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub paths: u64,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub formats: Vec<Format>,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub timestamps: bool,
}

impl Resolved {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn parse_s_max(raw: &str) -> Result<Option<i64>, Failure> {
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    raw.parse::<i64>()
        .ok()
        .filter(|&s| s >= 0)
        .map(Some)
        .ok_or_else(|| Failure::config(format!("--S-max expects `auto` or a nonnegative integer, got `{raw}`")))
}

fn dist_from_flags(cli: &Cli, base: Option<IncrementKind>) -> Result<IncrementKind, Failure> {
    let name = match (cli.dist, &base) {
        (Some(d), _) => d,
        (None, Some(IncrementKind::DoubleGeometric { .. })) | (None, None) => DistName::DoubleGeometric,
        (None, Some(IncrementKind::LazySimpleWalk { .. })) => DistName::LazySimpleWalk,
        (None, Some(custom @ IncrementKind::Custom { .. })) => {
            if cli.kappa.is_some() || cli.p0.is_some() {
                return Err(Failure::config("--kappa/--p0 do not apply to a custom distribution"));
            }
            return Ok(custom.clone());
        }
    };
    Ok(match name {
        DistName::DoubleGeometric => {
            let kappa = cli.kappa.unwrap_or(match base {
                Some(IncrementKind::DoubleGeometric { kappa }) => kappa,
                _ => 1.0,
            });
            IncrementKind::DoubleGeometric { kappa }
        }
        DistName::LazySimpleWalk => {
            let p0 = cli.p0.unwrap_or(match base {
                Some(IncrementKind::LazySimpleWalk { p0 }) => p0,
                _ => 0.5,
            });
            IncrementKind::LazySimpleWalk { p0 }
        }
    })
}

pub fn load_config(path: &PathBuf) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

pub fn resolve(cli: &Cli, env_out: Option<PathBuf>) -> Result<Resolved, Failure> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let command = match (cli.command, cli.command_flag) {
        (Some(a), Some(b)) if a != b => {
            return Err(Failure::config("positional command and --command disagree"))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => file
            .command
            .ok_or_else(|| Failure::config("no command given"))?,
    };
    let s_max = match &cli.s_max {
        Some(raw) => parse_s_max(raw)?,
        None => file.s_max.or(match command {
            Command::OracleCheck => Some(5),
            _ => None,
        }),
    };
    let n = cli.n.or(file.n).unwrap_or(match command {
        Command::OracleCheck => 4,
        _ => 10_000,
    });
    let n_list = cli
        .n_list
        .clone()
        .or(file.n_list)
        .unwrap_or_else(|| DEFAULT_SWEEP.to_vec());
    let paths = cli.paths.or(file.paths).unwrap_or(match command {
        Command::Sample => 100,
        Command::OracleCheck => 1_000_000,
        _ => 20_000,
    });
    let t_grid = cli
        .t_grid
        .clone()
        .or(file.t_grid)
        .unwrap_or_else(default_lags);
    if t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Failure::config("t grid must lie in [0, 1]"));
    }
    let mut formats = cli
        .formats
        .clone()
        .or(file.formats)
        .unwrap_or_else(|| vec![Format::Csv, Format::Json, Format::Svg]);
    formats.sort();
    formats.dedup();
    let out_dir = env_out
        .or(cli.out_dir.clone())
        .or(file.out_dir)
        .unwrap_or_else(|| PathBuf::from("sos-lab-out"));
    let tol = cli.tol.or(file.tol).unwrap_or(1e-13);
    if tol.is_nan() || tol <= 0.0 {
        return Err(Failure::config("--tol must be positive"));
    }
    if n == 0 || n_list.contains(&0) {
        return Err(Failure::config("N must be positive"));
    }
    Ok(Resolved {
        command,
        dist: dist_from_flags(cli, file.dist)?,
        n,
        n_list,
        s_max,
        tol,
        max_iter: cli.max_iter.or(file.max_iter),
        paths,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        t_grid,
        out_dir,
        formats,
        threads: cli.threads.or(file.threads),
        timestamps: cli.timestamps,
    })
}
