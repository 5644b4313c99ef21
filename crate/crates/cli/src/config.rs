//! Experiment settings: built-in defaults, overridden by a flat `key = value`
//! file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

use crate::error::{CliError, CliResult};

/// `start:stop:count`, evenly spaced and inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(format!("expected start:stop:count, got '{s}'"));
        };
        let start: f64 = start.parse().map_err(|_| format!("bad grid start '{start}'"))?;
        let stop: f64 = stop.parse().map_err(|_| format!("bad grid stop '{stop}'"))?;
        let count: usize = count.parse().map_err(|_| format!("bad grid count '{count}'"))?;
        if count == 0 {
            return Err("grid count must be at least 1".into());
        }
        if !(start.is_finite() && stop.is_finite() && start >= 0.0) {
            return Err("grid ends must be finite and start nonnegative".into());
        }
        if count == 1 && stop != start {
            return Err("a one-point grid needs start == stop".into());
        }
        if count > 1 && !(stop > start) {
            return Err("grid stop must exceed start".into());
        }
        Ok(Grid { start, stop, count })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

/// Flags shared by the experiment subcommands; unset flags fall back to the
/// config file, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// Dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Observation variance (1/s).
    #[arg(long)]
    pub u: Option<f64>,
    /// Prediction variance (1/t).
    #[arg(long)]
    pub v: Option<f64>,
    /// Grid of |mu| as start:stop:count.
    #[arg(long = "mu-norm-grid", value_name = "START:STOP:COUNT")]
    pub mu_norm_grid: Option<String>,
    /// Monte Carlo trials per estimate [default: 5000].
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated subset of pu,e1,e2,eb,ps.
    #[arg(long)]
    pub methods: Option<String>,
    /// Empirical-Bayes constant [default: d - 3].
    #[arg(long = "eb-c")]
    pub eb_c: Option<f64>,
    /// Comma-separated, strictly decreasing prediction precisions (theorem1).
    #[arg(long = "t-values")]
    pub t_values: Option<String>,
    /// Quadrature nodes over the precision interval (integration-check).
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Draws of y per observation for the Stein mixture.
    #[arg(long = "y-draws")]
    pub y_draws: Option<usize>,
    /// Worker threads [default: all cores]; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output CSV path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key = value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "d", "u", "v", "mu_norm_grid", "trials", "seed", "methods", "eb_c", "t_values", "nodes", "y_draws",
    "threads", "out",
];

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub d: usize,
    pub u: f64,
    pub v: f64,
    pub grid: Grid,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<String>,
    pub eb_c: Option<f64>,
    pub t_values: Vec<f64>,
    pub nodes: usize,
    pub y_draws: usize,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            d: 10,
            u: 1.0,
            v: 0.1,
            grid: Grid { start: 0.0, stop: 8.0, count: 9 },
            trials: 5000,
            seed: 1,
            methods: ["pu", "e1", "e2", "eb", "ps"].map(String::from).to_vec(),
            eb_c: None,
            t_values: vec![1e-2, 1e-3, 1e-4],
            nodes: 16,
            y_draws: 64,
            threads: None,
            out: None,
        }
    }
}

/// Parses a flat config file. Blank lines and lines starting with `#` are
/// ignored; keys may use `-` or `_`.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, (usize, String)>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config(format!("config line {}: expected key = value", i + 1)));
        };
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::config(format!("config line {}: unknown key '{key}'", i + 1)));
        }
        if map.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
            return Err(CliError::config(format!("config line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(map)
}

fn parse_list<T: FromStr>(field: &str, s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| format!("{field}: cannot parse '{p}'")))
        .collect()
}

struct Layer {
    values: BTreeMap<String, (usize, String)>,
}

impl Layer {
    fn get<T, F>(&self, key: &str, parse: F) -> CliResult<Option<T>>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, raw)) => parse(raw)
                .map(Some)
                .map_err(|e| CliError::config(format!("config line {line}: {key}: {e}"))),
        }
    }
}

fn scalar<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("cannot parse '{s}'"))
}

impl ExperimentArgs {
    pub fn resolve(&self) -> CliResult<Settings> {
        let layer = match &self.config {
            Some(path) => Layer { values: parse_config(&read_text(path)?)? },
            None => Layer { values: BTreeMap::new() },
        };
        let def = Settings::default();
        let cli_grid = self.mu_norm_grid.as_deref().map(Grid::from_str).transpose();
        let cli_grid = cli_grid.map_err(|e| CliError::config(format!("--mu-norm-grid: {e}")))?;
        let cli_methods = self.methods.as_deref().map(|m| parse_list::<String>("--methods", m)).transpose();
        let cli_t = self.t_values.as_deref().map(|t| parse_list::<f64>("--t-values", t)).transpose();

        let settings = Settings {
            d: pick(self.d, layer.get("d", scalar)?, def.d),
            u: pick(self.u, layer.get("u", scalar)?, def.u),
            v: pick(self.v, layer.get("v", scalar)?, def.v),
            grid: pick(cli_grid, layer.get("mu_norm_grid", Grid::from_str)?, def.grid),
            trials: pick(self.trials, layer.get("trials", scalar)?, def.trials),
            seed: pick(self.seed, layer.get("seed", scalar)?, def.seed),
            methods: pick(
                cli_methods.map_err(CliError::Config)?,
                layer.get("methods", |s| parse_list("methods", s))?,
                def.methods,
            ),
            eb_c: self.eb_c.or(layer.get("eb_c", scalar)?),
            t_values: pick(
                cli_t.map_err(CliError::Config)?,
                layer.get("t_values", |s| parse_list("t_values", s))?,
                def.t_values,
            ),
            nodes: pick(self.nodes, layer.get("nodes", scalar)?, def.nodes),
            y_draws: pick(self.y_draws, layer.get("y_draws", scalar)?, def.y_draws),
            threads: self.threads.or(layer.get("threads", scalar)?),
            out: self.out.clone().or(layer.get("out", |s| Ok(PathBuf::from(s)))?),
        };
        settings.validate()?;
        Ok(settings)
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

impl Settings {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.d == 0 {
            return bad("d: must be at least 1".into());
        }
        if !(self.u > 0.0 && self.u.is_finite()) {
            return bad(format!("u: must be positive, got {}", self.u));
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return bad(format!("v: must be positive, got {}", self.v));
        }
        if self.trials < 2 {
            return bad(format!("trials: must be at least 2, got {}", self.trials));
        }
        if self.methods.is_empty() {
            return bad("methods: must name at least one method".into());
        }
        if let Some(m) = self.methods.iter().find(|m| !["pu", "e1", "e2", "eb", "ps"].contains(&m.as_str())) {
            return bad(format!("methods: unknown method '{m}'"));
        }
        if let Some(c) = self.eb_c {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("eb_c: must be positive, got {c}"));
            }
        }
        if self.t_values.is_empty()
            || self.t_values.iter().any(|t| !(*t > 0.0))
            || self.t_values.windows(2).any(|w| !(w[0] > w[1]))
        {
            return bad("t_values: must be positive and strictly decreasing".into());
        }
        if self.nodes == 0 {
            return bad("nodes: must be at least 1".into());
        }
        if self.y_draws == 0 {
            return bad("y_draws: must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads: must be at least 1".into());
        }
        Ok(())
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
