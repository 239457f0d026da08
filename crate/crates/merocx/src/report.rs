//! Reports: checks, CSV tables, JSON objects, config echo and timings.
//!
//! `emit_report` writes `report.json`, one `<table>.csv` per table and
//! `timings.csv`. Timings live only in the `timings` block of the JSON and in
//! `timings.csv`; everything else is deterministic for a given config.

use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: &str = "merocx-report/1";
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, headers: &[&str]) -> Self {
        Table { name: name.into(), headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Timing {
    pub stage: String,
    /// Seconds since the report was created.
    pub start: f64,
    pub elapsed: f64,
}

#[derive(Debug)]
pub struct Report {
    pub scenario: String,
    pub config: Value,
    pub checks: Vec<CheckLine>,
    pub tables: Vec<Table>,
    pub objects: Map<String, Value>,
    pub timings: Vec<Timing>,
    clock: Instant,
}

impl Report {
    pub fn new(scenario: &str, config: Value) -> Self {
        Report {
            scenario: scenario.into(),
            config,
            checks: Vec::new(),
            tables: Vec::new(),
            objects: Map::new(),
            timings: Vec::new(),
            clock: Instant::now(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine { name: name.into(), ok, detail: detail.into() });
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn object(&mut self, key: &str, v: Value) {
        self.objects.insert(key.into(), v);
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = self.clock.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let r = f();
        self.timings.push(Timing { stage: stage.into(), start, elapsed: t0.elapsed().as_secs_f64() });
        r
    }

    /// The deterministic part of the JSON report.
    pub fn content_json(&self) -> Value {
        json!({
            "schema": SCHEMA_VERSION,
            "code_version": CODE_VERSION,
            "scenario": self.scenario,
            "config": self.config,
            "ok": self.ok(),
            "checks": self.checks.iter().map(|c| json!({"name": c.name, "ok": c.ok, "detail": c.detail})).collect::<Vec<_>>(),
            "tables": self.tables.iter().map(|t| json!({"name": t.name, "headers": t.headers, "rows": t.rows})).collect::<Vec<_>>(),
            "objects": self.objects,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.content_json();
        v["timings"] = self.timings.iter().map(|t| json!({"stage": t.stage, "start_s": t.start, "elapsed_s": t.elapsed})).collect();
        v
    }
}

fn write_csv(path: &Path, headers: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io::Error::other)?;
    w.write_record(headers).map_err(io::Error::other)?;
    for r in rows {
        w.write_record(r).map_err(io::Error::other)?;
    }
    w.flush()
}

/// Writes the report into `dir` (created if needed); returns the written paths.
pub fn emit_report(r: &Report, dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    let json_path = dir.join("report.json");
    let text = serde_json::to_string_pretty(&r.to_json()).map_err(io::Error::other)?;
    std::fs::write(&json_path, text + "\n")?;
    out.push(json_path);
    for t in &r.tables {
        let p = dir.join(format!("{}.csv", t.name));
        write_csv(&p, &t.headers, &t.rows)?;
        out.push(p);
    }
    let p = dir.join("timings.csv");
    let rows: Vec<Vec<String>> = r.timings.iter().map(|t| vec![t.stage.clone(), format!("{:.6}", t.start), format!("{:.6}", t.elapsed)]).collect();
    write_csv(&p, &["stage".into(), "start_s".into(), "elapsed_s".into()], &rows)?;
    out.push(p);
    Ok(out)
}

/// Compares two report directories, ignoring timing data and the echoed
/// output path (the only knob that must differ between two runs). Returns the
/// first difference.
pub fn compare_reports(a: &Path, b: &Path) -> io::Result<Option<String>> {
    let strip = |p: &Path| -> io::Result<Value> {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(p.join("report.json"))?).map_err(io::Error::other)?;
        if let Some(m) = v.as_object_mut() {
            m.remove("timings");
            if let Some(c) = m.get_mut("config").and_then(|c| c.as_object_mut()) {
                c.remove("output");
            }
        }
        Ok(v)
    };
    if strip(a)? != strip(b)? {
        return Ok(Some("report.json differs outside the timings block".into()));
    }
    let list = |p: &Path| -> io::Result<Vec<String>> {
        let mut v: Vec<String> = std::fs::read_dir(p)?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".csv") && n != "timings.csv")
            .collect();
        v.sort();
        Ok(v)
    };
    let (la, lb) = (list(a)?, list(b)?);
    if la != lb {
        return Ok(Some(format!("different CSV sets: {la:?} vs {lb:?}")));
    }
    for n in la {
        if std::fs::read(a.join(&n))? != std::fs::read(b.join(&n))? {
            return Ok(Some(format!("{n} differs")));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tables_have_headers_and_timings_are_monotone() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("cohomology", json!({"x": 1}));
        r.table(Table::new("betti", &["l", "k", "betti"]));
        r.timed("a", || ());
        r.timed("b", || std::thread::sleep(std::time::Duration::from_millis(2)));
        emit_report(&r, dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("betti.csv")).unwrap(), "l,k,betti\n");
        let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(v["config"]["x"], 1);
        assert_eq!(v["schema"], SCHEMA_VERSION);
        let t = &r.timings;
        assert!(t.iter().all(|x| x.start >= 0.0 && x.elapsed >= 0.0));
        assert!(t[1].start >= t[0].start + t[0].elapsed);
    }
}
