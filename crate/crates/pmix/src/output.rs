//! Result tables, CSV files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Version string written on every output row.
pub const VERSION: &str = concat!("pmix ", env!("CARGO_PKG_VERSION"));

pub const MANIFEST: &str = "manifest.json";

/// A result table; `seed` and `version` columns are prepended on write.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Shortest round-trip text for a float, with exponents for tiny or huge
/// magnitudes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn int<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

pub fn flag(b: bool) -> String {
    (if b { "true" } else { "false" }).into()
}

/// Everything a run produces besides the manifest's bookkeeping.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: serde_json::Value,
}

#[derive(Serialize)]
struct TableEntry {
    file: String,
    rows: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    kind: &'a str,
    seed: u64,
    threads: usize,
    wall_time_seconds: f64,
    config: &'a serde_json::Value,
    tables: Vec<TableEntry>,
    summary: &'a serde_json::Value,
}

pub fn write_table(path: &Path, table: &Table, seed: u64) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    let seed = seed.to_string();
    w.write_record(["seed", "version"].into_iter().chain(table.header.iter().map(String::as_str)))?;
    for row in &table.rows {
        w.write_record([seed.as_str(), VERSION].into_iter().chain(row.iter().map(String::as_str)))?;
    }
    w.flush()?;
    Ok(())
}

/// Metadata echoed into the manifest.
pub struct RunInfo<'a> {
    pub kind: &'a str,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub config: &'a serde_json::Value,
}

/// Writes every table and then the manifest into `dir`. On failure, files
/// written so far (and `dir`, if this call created it) are removed.
pub fn write_run(dir: &Path, out: &RunOutput, info: &RunInfo<'_>) -> anyhow::Result<Vec<PathBuf>> {
    let created = !dir.exists();
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = Vec::new();
    let result = (|| -> anyhow::Result<()> {
        for t in &out.tables {
            let p = dir.join(t.file_name());
            written.push(p.clone());
            write_table(&p, t, info.seed)?;
        }
        let manifest = Manifest {
            version: VERSION,
            kind: info.kind,
            seed: info.seed,
            threads: info.threads,
            wall_time_seconds: info.wall_time_seconds,
            config: info.config,
            tables: out.tables.iter().map(|t| TableEntry { file: t.file_name(), rows: t.rows.len() }).collect(),
            summary: &out.summary,
        };
        let p = dir.join(MANIFEST);
        written.push(p.clone());
        fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("cannot write {}", p.display()))?;
        Ok(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created {
                let _ = fs::remove_dir(dir);
            }
            Err(e)
        }
    }
}

/// Reads a CSV written by [`write_table`] back into a table (the `seed` and
/// `version` columns are kept as ordinary columns).
pub fn read_table(path: &Path) -> anyhow::Result<Table> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Table { name, header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_round_trips() {
        for x in [0.1, 1e-20, 2.5e17, -3.0, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1e-20), "1e-20");
    }

    #[test]
    fn tables_round_trip_with_seed_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", &["x", "label"]);
        t.push(vec![num(0.5), "a,b".into()]);
        let p = dir.path().join(t.file_name());
        write_table(&p, &t, 42).unwrap();
        let back = read_table(&p).unwrap();
        assert_eq!(back.header, ["seed", "version", "x", "label"]);
        assert_eq!(back.rows[0], ["42", VERSION, "0.5", "a,b"]);
    }

    #[test]
    fn failed_write_leaves_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        let out_dir = dir.path().join("out");
        // A table named like a directory component cannot be created.
        let bad = Table::new("missing/dir", &["x"]);
        let good = Table::new("ok", &["x"]);
        let out = RunOutput { tables: vec![good, bad], summary: serde_json::json!({}) };
        let cfg = serde_json::json!({});
        let info = RunInfo { kind: "demo", seed: 1, threads: 1, wall_time_seconds: 0.0, config: &cfg };
        assert!(write_run(&out_dir, &out, &info).is_err());
        assert!(!out_dir.exists());
    }
}
