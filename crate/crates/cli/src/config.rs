//! `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! a = 0.6
//! inner_poles = [0.3]
//! outer_poles = []
//! k0 = 1
//! k = [1]
//! m = 1
//! schedule = [8, 16, 32, 64, 128]
//! tol_b0 = 1e-5
//! grid = 10000
//! ```
//!
//! Only `a` is required. Multiplicities default to 1 and pole lists to empty.

use std::collections::HashMap;
use std::path::PathBuf;

use combmap::geometry::{GeometryError, ProblemSpec};
use thiserror::Error;

pub const DEFAULT_SCHEDULE: [usize; 5] = [8, 16, 32, 64, 128];
pub const DEFAULT_TOL_B0: f64 = 1e-5;
pub const DEFAULT_GRID: usize = 10_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key '{0}'")]
    Missing(&'static str),
    #[error("invalid value for '{key}': {msg}")]
    Invalid { key: &'static str, msg: String },
    #[error("{name}: {source}", name = geometry_name(source))]
    Problem {
        #[from]
        source: GeometryError,
    },
}

/// Variant name of a geometry error, e.g. `PoleOutsideRange`.
fn geometry_name(e: &GeometryError) -> String {
    let dbg = format!("{e:?}");
    dbg.split([' ', '(', '{']).next().unwrap_or_default().to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub schedule: Vec<usize>,
    pub tol_b0: f64,
    pub grid: usize,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.problem.validate()?;
        if self.schedule.is_empty() || self.schedule[0] < 2 || self.schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid {
                key: "schedule",
                msg: format!("{:?} must be strictly increasing levels >= 2", self.schedule),
            });
        }
        if !(self.tol_b0 > 0.0 && self.tol_b0.is_finite()) {
            return Err(ConfigError::Invalid { key: "tol_b0", msg: format!("{} is not positive", self.tol_b0) });
        }
        if self.grid < 100 {
            return Err(ConfigError::Invalid { key: "grid", msg: format!("{} is below 100 points", self.grid) });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(String),
    List(Vec<String>),
}

struct Entry {
    line: usize,
    value: Value,
}

fn parse_lines(text: &str) -> Result<HashMap<String, Entry>, ConfigError> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, rhs) = body.split_once('=').ok_or(ConfigError::Syntax { line, msg: "expected 'key = value'".into() })?;
        let (key, rhs) = (key.trim(), rhs.trim());
        if key.is_empty() || rhs.is_empty() {
            return Err(ConfigError::Syntax { line, msg: "empty key or value".into() });
        }
        let value = if let Some(inner) = rhs.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or(ConfigError::Syntax { line, msg: "unterminated list".into() })?;
            let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            Value::List(items)
        } else {
            Value::Scalar(rhs.to_string())
        };
        if out.insert(key.to_string(), Entry { line, value }).is_some() {
            return Err(ConfigError::DuplicateKey { line, key: key.into() });
        }
    }
    Ok(out)
}

const KEYS: [&str; 9] = ["a", "inner_poles", "outer_poles", "k0", "k", "m", "schedule", "tol_b0", "grid"];

fn number<T: std::str::FromStr>(key: &'static str, s: &str) -> Result<T, ConfigError> {
    s.parse().map_err(|_| ConfigError::Invalid { key, msg: format!("cannot parse '{s}'") })
}

fn scalar<T: std::str::FromStr>(map: &HashMap<String, Entry>, key: &'static str) -> Result<Option<T>, ConfigError> {
    match map.get(key).map(|e| &e.value) {
        None => Ok(None),
        Some(Value::Scalar(s)) => number(key, s).map(Some),
        Some(Value::List(_)) => Err(ConfigError::Invalid { key, msg: "expected a number, found a list".into() }),
    }
}

fn list<T: std::str::FromStr>(map: &HashMap<String, Entry>, key: &'static str) -> Result<Option<Vec<T>>, ConfigError> {
    match map.get(key).map(|e| &e.value) {
        None => Ok(None),
        Some(Value::List(items)) => items.iter().map(|s| number(key, s)).collect::<Result<_, _>>().map(Some),
        Some(Value::Scalar(_)) => Err(ConfigError::Invalid { key, msg: "expected a bracketed list".into() }),
    }
}

/// Parses and validates a configuration; `out_dir` comes from the command line.
pub fn parse(text: &str, out_dir: PathBuf) -> Result<RunConfig, ConfigError> {
    let map = parse_lines(text)?;
    if let Some((key, e)) = map.iter().filter(|(k, _)| !KEYS.contains(&k.as_str())).min_by_key(|(_, e)| e.line) {
        return Err(ConfigError::UnknownKey { line: e.line, key: key.clone() });
    }
    let inner_poles: Vec<f64> = list(&map, "inner_poles")?.unwrap_or_default();
    let outer_poles: Vec<f64> = list(&map, "outer_poles")?.unwrap_or_default();
    let p = inner_poles.len() + outer_poles.len();
    let problem = ProblemSpec {
        a: scalar(&map, "a")?.ok_or(ConfigError::Missing("a"))?,
        k: list(&map, "k")?.unwrap_or_else(|| vec![1; p]),
        inner_poles,
        outer_poles,
        k0: scalar(&map, "k0")?.unwrap_or(1),
        m: scalar(&map, "m")?.unwrap_or(1),
    };
    let cfg = RunConfig {
        problem,
        schedule: list(&map, "schedule")?.unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec()),
        tol_b0: scalar(&map, "tol_b0")?.unwrap_or(DEFAULT_TOL_B0),
        grid: scalar(&map, "grid")?.unwrap_or(DEFAULT_GRID),
        out_dir,
    };
    cfg.validate()?;
    Ok(cfg)
}
