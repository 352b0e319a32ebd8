//! Flat `key = value` run configuration. Command-line flags override file
//! values, which override built-in defaults.
//!
//! Recognised keys:
//!
//! | key          | type            | used by                                   |
//! |--------------|-----------------|-------------------------------------------|
//! | `seed`       | integer         | every command                             |
//! | `tol`        | float           | every solver call                         |
//! | `threads`    | integer         | worker pool size                          |
//! | `out`        | string          | output directory                          |
//! | `n`          | integer         | `certify`, `sdp dump`, `game matching`    |
//! | `n_values`   | integer list    | `table1`, `pipeline`                      |
//! | `rows`       | integer list    | `table1`                                  |
//! | `restarts`   | integer         | `certify discriminate-distrust`, `table1` |
//! | `visibility` | float           | `povm`, `circuit`, `certify`, `tomo`, `pipeline` |
//! | `noise`      | float           | `game`                                    |
//! | `counts`     | integer         | `game` (total trials)                     |
//! | `shots`      | integer         | `tomo`, `pipeline` (trials per probe)     |
//! | `bootstrap`  | integer         | `tomo`                                    |
//! | `x_star`     | integer         | `certify randomness`, `fig4`              |
//! | `points`     | integer         | `fig4`                                    |
//! | `sigma`      | float           | `certify randomness`, `game exclusion`    |
//! | `target`     | integer         | `tomo state`                              |
//!
//! Lists may be TOML arrays or comma-separated strings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

const KEYS: &[&str] = &[
    "seed",
    "tol",
    "threads",
    "out",
    "n",
    "n_values",
    "rows",
    "restarts",
    "visibility",
    "noise",
    "counts",
    "shots",
    "bootstrap",
    "x_star",
    "points",
    "sigma",
    "target",
];

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    values: BTreeMap<String, toml::Value>,
}

fn bad(key: &str, want: &str, v: &toml::Value) -> CliError {
    CliError::Config(format!("`{key}` must be {want}, got {v}"))
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        let mut values = BTreeMap::new();
        for (k, v) in table {
            if !KEYS.contains(&k.as_str()) {
                return Err(CliError::Config(format!("unknown key `{k}`")));
            }
            let flat = match &v {
                toml::Value::Table(_) => false,
                toml::Value::Array(a) => a.iter().all(|x| !matches!(x, toml::Value::Table(_) | toml::Value::Array(_))),
                _ => true,
            };
            if !flat {
                return Err(CliError::Config(format!("`{k}` is nested; the config file is flat")));
            }
            values.insert(k, v);
        }
        Ok(Self { values })
    }

    pub fn u64(&self, key: &str) -> CliResult<Option<u64>> {
        self.values
            .get(key)
            .map(|v| match v {
                toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                _ => Err(bad(key, "a nonnegative integer", v)),
            })
            .transpose()
    }

    pub fn usize(&self, key: &str) -> CliResult<Option<usize>> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    pub fn f64(&self, key: &str) -> CliResult<Option<f64>> {
        self.values
            .get(key)
            .map(|v| match v {
                toml::Value::Float(f) => Ok(*f),
                toml::Value::Integer(i) => Ok(*i as f64),
                _ => Err(bad(key, "a number", v)),
            })
            .transpose()
    }

    pub fn path(&self, key: &str) -> CliResult<Option<PathBuf>> {
        self.values
            .get(key)
            .map(|v| match v {
                toml::Value::String(s) => Ok(PathBuf::from(s)),
                _ => Err(bad(key, "a string", v)),
            })
            .transpose()
    }

    pub fn list(&self, key: &str) -> CliResult<Option<Vec<usize>>> {
        self.values
            .get(key)
            .map(|v| match v {
                toml::Value::String(s) => parse_list(s).map_err(|_| bad(key, "a list of integers", v)),
                toml::Value::Array(a) => a
                    .iter()
                    .map(|x| match x {
                        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                        _ => Err(bad(key, "a list of integers", v)),
                    })
                    .collect(),
                _ => Err(bad(key, "a list of integers", v)),
            })
            .transpose()
    }
}

/// Parses `"2,3,5"` or `"2-9"` (inclusive) or a mix of both.
pub fn parse_list(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// Comma-separated floats.
pub fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}
