//! CSV and JSON emission with a config-hash guard on the output directory.
//!
//! CSV files open with `# key: value` metadata lines followed by the header
//! and body; JSON files carry the same metadata under a top-level
//! `metadata` object.

use std::fs;
use std::path::{Path, PathBuf};

use nvsim_core::randomness::RNG_ALGORITHM;
use serde_json::{json, Value};

use crate::config::{CommandKind, RunConfig};
use crate::error::CliError;

pub const GIT_DESCRIBE: &str = env!("NVSIM_GIT_DESCRIBE");

/// Shortest round-trip text of a float, in exponent form outside
/// `[1e-4, 1e7)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e7).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self, preamble: &str) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(preamble.as_bytes().to_vec());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}

/// Where and how one run writes its files.
pub struct Sink {
    dir: PathBuf,
    csv: bool,
    json: bool,
    force: bool,
    hash: String,
    metadata: Value,
}

impl Sink {
    pub fn new(cfg: &RunConfig, force: bool) -> Sink {
        let hash = cfg.hash();
        let paths = match cfg.command {
            CommandKind::Mlmc => cfg.paths_per_level,
            CommandKind::FlowCheck => cfg.trials,
            _ => cfg.paths,
        };
        let metadata = json!({
            "tool": format!("nvsim {}", env!("CARGO_PKG_VERSION")),
            "command": cfg.command.name(),
            "seed": cfg.seed,
            "paths": paths,
            "git_describe": GIT_DESCRIBE,
            "config_hash": hash,
            "rng": RNG_ALGORITHM,
            "config": cfg.hashed_view(),
        });
        Sink {
            dir: cfg.out.clone(),
            csv: cfg.format.csv(),
            json: cfg.format.json(),
            force,
            hash,
            metadata,
        }
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn csv_path(&self, stem: &str) -> PathBuf {
        self.dir.join(format!("{stem}.csv"))
    }

    fn json_path(&self, stem: &str) -> PathBuf {
        self.dir.join(format!("{stem}.json"))
    }

    /// Files a run with these stems will write. `summary` stems always get a
    /// JSON file regardless of the format.
    pub fn targets(&self, tables: &[&str], summary: &[&str]) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for stem in tables {
            if self.csv {
                out.push(self.csv_path(stem));
            }
            if self.json {
                out.push(self.json_path(stem));
            }
        }
        for stem in summary {
            let p = self.json_path(stem);
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Refuses to continue if any target exists with a different config hash.
    pub fn guard(&self, targets: &[PathBuf]) -> Result<(), CliError> {
        if self.force {
            return Ok(());
        }
        for path in targets {
            if !path.exists() {
                continue;
            }
            let found = stored_hash(path)?.unwrap_or_else(|| "none".to_string());
            if found != self.hash {
                return Err(CliError::ConfigMismatch {
                    path: path.clone(),
                    found,
                    expected: self.hash.clone(),
                });
            }
        }
        Ok(())
    }

    fn ensure_dir(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(CliError::io(&self.dir))
    }

    fn csv_preamble(&self) -> String {
        let m = &self.metadata;
        let mut s = String::new();
        for key in [
            "tool",
            "command",
            "seed",
            "paths",
            "git_describe",
            "config_hash",
            "rng",
        ] {
            let v = match &m[key] {
                Value::String(t) => t.clone(),
                other => other.to_string(),
            };
            s.push_str(&format!("# {key}: {v}\n"));
        }
        s.push_str(&format!("# config: {}\n", m["config"]));
        s
    }

    /// Writes `<stem>.csv` and/or `<stem>.json` per the format.
    pub fn write_table(
        &self,
        stem: &str,
        table: &Table,
        body: Value,
    ) -> Result<Vec<PathBuf>, CliError> {
        self.ensure_dir()?;
        let mut written = Vec::new();
        if self.csv {
            let path = self.csv_path(stem);
            let bytes = table
                .to_csv(&self.csv_preamble())
                .map_err(|e| CliError::Io {
                    path: path.clone(),
                    source: std::io::Error::other(e),
                })?;
            fs::write(&path, bytes).map_err(CliError::io(&path))?;
            written.push(path);
        }
        if self.json {
            written.push(self.write_json(stem, body)?);
        }
        Ok(written)
    }

    /// Writes `<stem>.json` unconditionally.
    pub fn write_json(&self, stem: &str, body: Value) -> Result<PathBuf, CliError> {
        self.ensure_dir()?;
        let path = self.json_path(stem);
        let mut doc = json!({ "metadata": self.metadata });
        match body {
            Value::Object(map) => {
                for (k, v) in map {
                    doc[k] = v;
                }
            }
            other => doc["data"] = other,
        }
        let mut text = serde_json::to_string_pretty(&doc).expect("json serializes");
        text.push('\n');
        fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(path)
    }
}

/// Config hash recorded in an existing output file, if any.
pub fn stored_hash(path: &Path) -> Result<Option<String>, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        return Ok(v["metadata"]["config_hash"].as_str().map(str::to_string));
    }
    Ok(text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# config_hash: "))
        .map(|h| h.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Format, Layer};

    /// The CSV lines after the `#` metadata block.
    fn csv_body(text: &str) -> String {
        text.lines()
            .skip_while(|l| l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect()
    }

    fn config(dir: &Path, seed: u64) -> RunConfig {
        let mut c = RunConfig::resolve(CommandKind::SourceTerm, Layer::default(), Layer::default());
        c.out = dir.to_path_buf();
        c.seed = seed;
        c.format = Format::Both;
        c
    }

    fn sample_table() -> Table {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(0.5), "x,y".into()]);
        t
    }

    #[test]
    fn number_formatting_round_trips() {
        for x in [0.0, 0.5, 1e-12, -3.25e9, 123.456, 1.0 / 3.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1e-12), "1e-12");
        assert_eq!(num(0.25), "0.25");
    }

    #[test]
    fn files_carry_hash_and_guard_refuses_other_configs() {
        let dir = tempfile::tempdir().unwrap();
        let a = Sink::new(&config(dir.path(), 1), false);
        let files = a
            .write_table("t", &sample_table(), json!({"rows": 1}))
            .unwrap();
        assert_eq!(files.len(), 2);
        for f in &files {
            assert_eq!(stored_hash(f).unwrap().as_deref(), Some(a.hash()));
        }
        let text = fs::read_to_string(&files[0]).unwrap();
        assert_eq!(csv_body(&text), "a,b\n0.5,\"x,y\"\n");
        assert!(a.guard(&files).is_ok());

        let b = Sink::new(&config(dir.path(), 2), false);
        let err = b.guard(&files).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let forced = Sink::new(&config(dir.path(), 2), true);
        assert!(forced.guard(&files).is_ok());
    }

    #[test]
    fn summary_targets_are_json_even_for_csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(dir.path(), 1);
        c.format = Format::Csv;
        let s = Sink::new(&c, false);
        let t = s.targets(&["m"], &["m"]);
        assert_eq!(t, vec![dir.path().join("m.csv"), dir.path().join("m.json")]);
    }
}
