//! Plot-ready output files.
//!
//! CSV files open with `#` lines carrying the command, config hash, grid,
//! `ε` and seed, followed by a single `# created` timestamp line, which is
//! the only part that differs between identical runs. Numbers are written
//! with Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;

/// Line prefix of the one header line allowed to change between runs.
pub const TIMESTAMP_PREFIX: &str = "# created";

/// Metadata stamped on every file of one command.
#[derive(Debug, Clone)]
pub struct Meta {
    pub command: String,
    pub config_hash: String,
    pub n: usize,
    pub box_length: f64,
    pub truncation_radius: f64,
    pub eps: Vec<f64>,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &str, cfg: &RunConfig, eps: &[f64]) -> anyhow::Result<Self> {
        let grid = cfg.grid.grid()?;
        Ok(Self {
            command: command.to_string(),
            config_hash: cfg.hash(),
            n: grid.n(),
            box_length: grid.box_length(),
            truncation_radius: grid.truncation_radius(),
            eps: eps.to_vec(),
            seed: cfg.campaign.seed,
        })
    }

    fn header(&self, extra: &[String]) -> String {
        let eps: Vec<String> = self.eps.iter().map(|e| e.to_string()).collect();
        let mut s = String::new();
        let _ = writeln!(s, "# newton-soliton {} {}", self.command, env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# config_hash = {}", self.config_hash);
        let _ = writeln!(s, "# grid n = {}, box_length = {}, truncation_radius = {}", self.n, self.box_length, self.truncation_radius);
        let _ = writeln!(s, "# eps = [{}]", eps.join(", "));
        let _ = writeln!(s, "# seed = {}", self.seed);
        for line in extra {
            let _ = writeln!(s, "# {line}");
        }
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let _ = writeln!(s, "{TIMESTAMP_PREFIX} {secs}");
        s
    }

    /// Adds the metadata to a flat JSON object.
    fn stamp(&self, obj: &mut Map<String, Value>) {
        obj.insert("command".into(), self.command.clone().into());
        obj.insert("config_hash".into(), self.config_hash.clone().into());
        obj.insert("grid_n".into(), self.n.into());
        obj.insert("box_length".into(), self.box_length.into());
        obj.insert("truncation_radius".into(), self.truncation_radius.into());
        obj.insert("eps".into(), self.eps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",").into());
        obj.insert("seed".into(), self.seed.into());
    }
}

/// Writes into one output directory.
#[derive(Debug, Clone)]
pub struct Sink {
    dir: PathBuf,
    meta: Meta,
}

impl Sink {
    pub fn new(dir: &Path, meta: Meta) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), meta })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Comma-separated table; the column names follow the metadata as a
    /// `#` line so gnuplot skips them.
    pub fn csv(&self, name: &str, extra: &[String], columns: &[&str], rows: &[Vec<f64>]) -> anyhow::Result<PathBuf> {
        let mut s = self.meta.header(extra);
        let _ = writeln!(s, "# {}", columns.join(","));
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        self.write(name, &s)
    }

    /// Flat JSON object: metadata keys plus the fields of `value`, which
    /// must serialize to an object of scalars.
    pub fn json(&self, name: &str, value: &impl Serialize) -> anyhow::Result<PathBuf> {
        let mut obj = flatten(serde_json::to_value(value)?);
        self.meta.stamp(&mut obj);
        let text = serde_json::to_string_pretty(&Value::Object(obj))? + "\n";
        self.write(name, &text)
    }

    /// Gnuplot script plotting columns of `data` (1-based pairs `x:y`).
    pub fn gnuplot(&self, name: &str, data: &str, title: &str, curves: &[(&str, &str)], logscale: bool) -> anyhow::Result<PathBuf> {
        let mut s = String::new();
        let _ = writeln!(s, "# config_hash = {}", self.meta.config_hash);
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set title '{title}'");
        let _ = writeln!(s, "set key outside");
        if logscale {
            let _ = writeln!(s, "set logscale xy");
        }
        let plots: Vec<String> =
            curves.iter().map(|(cols, label)| format!("'{data}' using {cols} with linespoints title '{label}'")).collect();
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
        self.write(name, &s)
    }

    fn write(&self, name: &str, text: &str) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Nested objects become `outer_inner` keys and arrays `key_0`, `key_1`, ...
pub fn flatten(value: Value) -> Map<String, Value> {
    fn walk(prefix: &str, v: Value, out: &mut Map<String, Value>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}_{k}") };
        match v {
            Value::Object(m) => {
                for (k, v) in m {
                    walk(&key(&k), v, out);
                }
            }
            Value::Array(a) => {
                for (i, v) in a.into_iter().enumerate() {
                    walk(&key(&i.to_string()), v, out);
                }
            }
            other => {
                out.insert(prefix.to_string(), other);
            }
        }
    }
    let mut out = Map::new();
    walk("", value, &mut out);
    out
}

/// Drops the timestamp line, for comparing runs.
pub fn without_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with(TIMESTAMP_PREFIX)).map(|l| format!("{l}\n")).collect()
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    #[test]
    fn nested_values_flatten_to_snake_case_keys() {
        let m = flatten(json!({"a": {"b": 1, "c": [2.5, {"d": true}]}, "e": null}));
        assert_eq!(m["a_b"], json!(1));
        assert_eq!(m["a_c_0"], json!(2.5));
        assert_eq!(m["a_c_1_d"], json!(true));
        assert_eq!(m["e"], Value::Null);
        assert_eq!(m.len(), 4);
    }

    #[test]
    fn csv_carries_metadata_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::shipped();
        let sink = Sink::new(dir.path(), Meta::new("test", &cfg, &[0.1]).unwrap()).unwrap();
        let p = sink.csv("t.csv", &["note".into()], &["x", "y"], &[vec![0.1, 1.0 / 3.0]]).unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert!(text.contains(&cfg.hash()));
        assert!(text.contains("# seed = 20240917"));
        assert!(text.contains("# eps = [0.1]"));
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 1);
        let y: f64 = data[0].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(y, 1.0 / 3.0);
        assert_eq!(without_timestamp(&text).lines().count(), text.lines().count() - 1);
    }
}
