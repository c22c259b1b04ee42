//! Deterministic artifact writers.
//!
//! Every table, summary and plot script a driver emits goes through
//! this module, so two runs with the same configuration and seed
//! produce byte-identical files.  Wall-clock information is confined
//! to the run log, which is the one file excluded from that guarantee.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Result;

/// Shortest float representation that round-trips through parsing.
pub fn fmt_float(x: f64) -> String {
    format!("{x}")
}

/// Map a slice of floats to CSV cells.
pub fn float_row(cells: &[f64]) -> Vec<String> {
    cells.iter().map(|&x| fmt_float(x)).collect()
}

/// Writer bound to one output directory and a fixed format selection.
pub struct Reporter {
    dir: PathBuf,
    formats: BTreeSet<String>,
}

impl Reporter {
    pub fn new(dir: impl Into<PathBuf>, formats: BTreeSet<String>) -> Result<Reporter> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Reporter { dir, formats })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats.contains(format)
    }

    fn write_text(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    }

    /// CSV with a fixed documented header; skipped unless `csv` is on.
    pub fn csv(&self, name: &str, header: &str, rows: &[Vec<String>]) -> Result<Option<PathBuf>> {
        if !self.wants("csv") {
            return Ok(None);
        }
        let mut out = String::with_capacity(64 * (rows.len() + 1));
        out.push_str(header);
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write_text(name, &out).map(Some)
    }

    /// JSON mirror of a result record; skipped unless `json` is on.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<Option<PathBuf>> {
        if !self.wants("json") {
            return Ok(None);
        }
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text).map(Some)
    }

    /// Plot script referencing its data by relative path; `gp` only.
    pub fn gp(&self, name: &str, script: &str) -> Result<Option<PathBuf>> {
        if !self.wants("gp") {
            return Ok(None);
        }
        self.write_text(name, script).map(Some)
    }

    /// The machine-readable run summary, written regardless of the
    /// format selection.
    pub fn summary<T: Serialize>(&self, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text("summary.json", &text)
    }

    /// Append to the run log, the only timestamped artifact.
    pub fn log(&self, line: &str) -> Result<()> {
        use std::io::Write;
        let path = self.dir.join("run.log");
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(f, "{line}")?;
        Ok(())
    }
}

/// A minimal gnuplot script plotting columns of a CSV written next to it.
pub fn gp_script(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    csv_name: &str,
    using: &str,
    logscale: bool,
) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str(&format!("set title '{title}'\n"));
    s.push_str(&format!("set xlabel '{xlabel}'\n"));
    s.push_str(&format!("set ylabel '{ylabel}'\n"));
    if logscale {
        s.push_str("set logscale xy\n");
    }
    s.push_str("set key left top\n");
    s.push_str(&format!(
        "plot '{csv_name}' using {using} every ::1 with linespoints title '{ylabel}'\n"
    ));
    s
}
