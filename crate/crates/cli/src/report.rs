//! Report envelope and output files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Resolved parameters of one run, keyed by config name.
#[derive(Debug, Clone, Default)]
pub struct Params(Map<String, Value>);

impl Params {
    pub fn set(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).expect("parameters are plain data");
        self.0.insert(key.to_string(), v);
        self
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.0)
    }
}

/// Everything a command produces before it is written out.
pub struct Output {
    pub params: Params,
    pub result: Value,
    /// `(file suffix, CSV bytes)`; the first table is the one printed by `--format csv`.
    pub tables: Vec<(String, Vec<u8>)>,
}

impl Output {
    pub fn new(params: Params, result: impl Serialize) -> CliResult<Self> {
        Ok(Self {
            params,
            result: serde_json::to_value(result)?,
            tables: Vec::new(),
        })
    }

    pub fn with_table(mut self, suffix: &str, csv: Vec<u8>) -> Self {
        self.tables.push((suffix.to_string(), csv));
        self
    }
}

#[derive(Debug, Serialize)]
pub struct Envelope {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: Value,
    pub result: Value,
}

/// Lower-case hex SHA-256 of the canonical (key-sorted, compact) JSON form.
pub fn config_hash(config: &Value) -> String {
    let canonical = serde_json::to_string(config).expect("config serialises");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        write!(hex, "{b:02x}").expect("writing to a String");
    }
    hex
}

pub fn envelope(command: &str, seed: u64, params: Params, result: Value) -> Envelope {
    let config = params.into_value();
    Envelope {
        command: command.to_string(),
        version: sic_core::VERSION.to_string(),
        seed,
        config_hash: config_hash(&config),
        config,
        result,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Writes `<stem>.json` and `<stem>_<suffix>.csv` under `dir`, or prints one
/// of them to stdout when no directory is given.
pub fn emit(stem: &str, env: &Envelope, tables: &[(String, Vec<u8>)], dir: Option<&Path>, format: Format) -> CliResult<()> {
    let json = serde_json::to_string_pretty(env)? + "\n";
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{stem}.json"));
            std::fs::write(&path, &json)?;
            eprintln!("wrote {}", path.display());
            for (suffix, csv) in tables {
                let path = dir.join(format!("{stem}_{suffix}.csv"));
                std::fs::write(&path, csv)?;
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            match format {
                Format::Json => out.write_all(json.as_bytes())?,
                Format::Csv => {
                    let (_, csv) = tables
                        .first()
                        .ok_or_else(|| CliError::Config(format!("`{stem}` has no CSV output; use --format json")))?;
                    out.write_all(csv)?;
                }
            }
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_key_order_free() {
        let mut a = Params::default();
        a.set("seed", 1).set("n", 3);
        let mut b = Params::default();
        b.set("n", 3).set("seed", 1);
        let (a, b) = (a.into_value(), b.into_value());
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        assert_eq!(
            config_hash(&Value::Object(Map::new())),
            "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a"
        );
    }
}
