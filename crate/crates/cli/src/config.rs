//! Run configuration. Values come from built-in defaults, then an optional
//! `key = value` file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use gausslayer::Execution;
use serde::Serialize;

/// Default master seed. Runs without `--seed` are reproducible.
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TOL: f64 = 1e-10;

/// Every key accepted by the config file; each is also a `--flag`.
pub const KEYS: [&str; 17] = [
    "tol",
    "seed",
    "trials",
    "samples",
    "out",
    "format",
    "profile",
    "polygon",
    "instance",
    "w",
    "grid-spec",
    "interval",
    "direction",
    "dim",
    "count",
    "keep",
    "exec",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    BoundsTable,
    CheckProps,
    Linearize,
    ScanExtremal,
    FinalCase,
    VerifyTheorem1,
    VerifyTheorem1a,
    VerifySidak,
    SearchProblem2,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BoundsTable => "bounds-table",
            Command::CheckProps => "check-props",
            Command::Linearize => "linearize",
            Command::ScanExtremal => "scan-extremal",
            Command::FinalCase => "final-case",
            Command::VerifyTheorem1 => "verify-theorem1",
            Command::VerifyTheorem1a => "verify-theorem1a",
            Command::VerifySidak => "verify-sidak",
            Command::SearchProblem2 => "search-problem2",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Command::BoundsTable => Format::Csv,
            Command::VerifyTheorem1 | Command::VerifyTheorem1a | Command::VerifySidak => Format::Jsonl,
            _ => Format::Json,
        }
    }

    fn supports_csv(self) -> bool {
        matches!(self, Command::BoundsTable | Command::CheckProps)
    }

    fn default_trials(self) -> Option<u64> {
        match self {
            Command::Linearize => Some(500),
            Command::VerifyTheorem1 => Some(1000),
            Command::VerifyTheorem1a => Some(20),
            Command::VerifySidak => Some(50),
            Command::SearchProblem2 => Some(10_000),
            _ => None,
        }
    }

    fn default_samples(self) -> Option<u64> {
        match self {
            Command::VerifyTheorem1a | Command::VerifySidak => Some(1_000_000),
            _ => None,
        }
    }

    fn default_ws(self) -> Vec<f64> {
        match self {
            Command::VerifyTheorem1 => vec![0.1, 0.3, 0.5, 0.7, 0.9],
            Command::Linearize | Command::VerifyTheorem1a => vec![0.5],
            _ => Vec::new(),
        }
    }
}

/// Fully resolved settings of one run; embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: Command,
    pub tol: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polygon: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub w: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    pub direction: [f64; 2],
    pub dim: usize,
    pub count: usize,
    pub keep: usize,
    pub exec: Execution,
}

/// Parses a `key = value` file. Blank lines and lines starting with `#`
/// are ignored.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return usage(format!("config line {}: expected key = value", i + 1));
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return usage(format!("config line {}: unknown key {key:?}", i + 1));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_file(&text)
}

fn parse_f64(key: &str, v: &str) -> Result<f64, UsageError> {
    match v.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        s => s
            .parse()
            .map_err(|_| UsageError(format!("--{key}: {v:?} is not a number"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, UsageError> {
    v.split(',').map(|s| parse_f64(key, s)).collect()
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, UsageError> {
    let v = v.trim().replace('_', "");
    if let Ok(n) = v.parse() {
        return Ok(n);
    }
    // 1e6 and the like
    let f: f64 = v
        .parse()
        .map_err(|_| UsageError(format!("--{key}: {v:?} is not an integer")))?;
    if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 {
        if let Ok(n) = format!("{}", f as u64).parse() {
            return Ok(n);
        }
    }
    usage(format!("--{key}: {v:?} is not an integer"))
}

fn pair(key: &str, v: &str) -> Result<(f64, f64), UsageError> {
    match parse_list(key, v)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => usage(format!("--{key}: expected two comma-separated numbers")),
    }
}

impl RunConfig {
    /// Builds the configuration for `command` from merged key-value pairs
    /// (file values already overridden by flags).
    pub fn resolve(command: Command, values: &BTreeMap<String, String>) -> Result<Self, UsageError> {
        let mut c = RunConfig {
            subcommand: command,
            tol: DEFAULT_TOL,
            seed: DEFAULT_SEED,
            trials: command.default_trials(),
            samples: command.default_samples(),
            format: command.default_format(),
            out: None,
            profile: None,
            polygon: None,
            instance: None,
            w: command.default_ws(),
            grid_spec: None,
            interval: None,
            direction: [1.0, 0.0],
            dim: 5,
            count: 4,
            keep: 20,
            exec: Execution::default(),
        };
        for (k, v) in values {
            match k.as_str() {
                "tol" => c.tol = parse_f64(k, v)?,
                "seed" => c.seed = parse_int(k, v)?,
                "trials" => c.trials = Some(parse_int(k, v)?),
                "samples" => c.samples = Some(parse_int(k, v)?),
                "out" => c.out = Some(PathBuf::from(v)),
                "format" => {
                    c.format = match v.as_str() {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        "jsonl" => Format::Jsonl,
                        _ => return usage(format!("--format: expected csv, json or jsonl, got {v:?}")),
                    }
                }
                "profile" => c.profile = Some(PathBuf::from(v)),
                "polygon" => c.polygon = Some(PathBuf::from(v)),
                "instance" => c.instance = Some(PathBuf::from(v)),
                "w" => c.w = parse_list(k, v)?,
                "grid-spec" => c.grid_spec = Some(v.clone()),
                "interval" => c.interval = Some(pair(k, v)?),
                "direction" => {
                    let (x, y) = pair(k, v)?;
                    c.direction = [x, y];
                }
                "dim" => c.dim = parse_int(k, v)?,
                "count" => c.count = parse_int(k, v)?,
                "keep" => c.keep = parse_int(k, v)?,
                "exec" => {
                    c.exec = match v.as_str() {
                        "parallel" => Execution::Parallel,
                        "sequential" => Execution::Sequential,
                        _ => return usage(format!("--exec: expected parallel or sequential, got {v:?}")),
                    }
                }
                _ => return usage(format!("unknown setting {k:?}")),
            }
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), UsageError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return usage(format!("--tol must be positive, got {}", self.tol));
        }
        if self.format == Format::Csv && !self.subcommand.supports_csv() {
            return usage(format!(
                "{} has no CSV output; use json or jsonl",
                self.subcommand.name()
            ));
        }
        if self.w.iter().any(|&w| !(w > 0.0 && w < 1.0)) {
            return usage("--w values must lie in (0, 1)");
        }
        if let Some((a, b)) = self.interval {
            if a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
                return usage("--interval needs a < b");
            }
        }
        let [x, y] = self.direction;
        if !(x.is_finite() && y.is_finite() && x * x + y * y > 0.0) {
            return usage("--direction must be a nonzero finite vector");
        }
        if self.trials == Some(0) {
            return usage("--trials must be positive");
        }
        if self.dim == 0 || self.dim > 64 || self.count < 2 {
            return usage("--dim must be in 1..=64 and --count at least 2");
        }
        if self.profile.is_some() && self.polygon.is_some() {
            return usage("--profile and --polygon are mutually exclusive");
        }
        Ok(())
    }

    /// `--direction` scaled to unit length.
    pub fn unit_direction(&self) -> [f64; 2] {
        let [x, y] = self.direction;
        let n = x.hypot(y);
        [x / n, y / n]
    }

    /// Where the output goes: `--out`, else `$GAUSSLAYER_OUT_DIR/<command>.<ext>`,
    /// else standard output (`None`).
    pub fn destination(&self, out_dir: Option<&Path>) -> Option<PathBuf> {
        if let Some(p) = &self.out {
            return Some(p.clone());
        }
        out_dir.map(|d| d.join(format!("{}.{}", self.subcommand.name(), self.format.extension())))
    }
}

/// `key=v1,v2;key=...` lists, as used by `--grid-spec`.
pub fn parse_grid_spec(spec: &str) -> Result<BTreeMap<String, Vec<f64>>, UsageError> {
    let mut out = BTreeMap::new();
    for part in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((k, v)) = part.split_once('=') else {
            return usage(format!("--grid-spec: expected key=values in {part:?}"));
        };
        out.insert(k.trim().to_string(), parse_list("grid-spec", v)?);
    }
    Ok(out)
}
