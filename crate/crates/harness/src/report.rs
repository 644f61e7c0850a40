//! Aggregation of manifests into a pass/fail table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::manifest::{Check, RunManifest, Timings, MANIFEST_FILE, TIMINGS_FILE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub kind: String,
    pub config_hash: String,
    pub source: String,
    pub complete: bool,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub rows: Vec<ReportRow>,
    pub passed: bool,
}

impl Summary {
    pub fn warnings(&self) -> impl Iterator<Item = (&str, &str)> {
        self.rows.iter().flat_map(|r| {
            r.warnings
                .iter()
                .map(move |w| (r.name.as_str(), w.as_str()))
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let status = if r.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{status}  {} ({})", r.name, r.kind);
            if !r.complete {
                let _ = writeln!(s, "      run did not complete");
            }
            for c in &r.checks {
                let mark = if c.passed { "ok  " } else { "FAIL" };
                let _ = write!(
                    s,
                    "      {mark} {:<42} {:>12.4e} {} {:.4e}",
                    c.name,
                    c.value,
                    c.symbol(),
                    c.limit
                );
                if let Some(n) = &c.note {
                    let _ = write!(s, "  ({n})");
                }
                s.push('\n');
            }
        }
        let warnings: Vec<_> = self.warnings().collect();
        if !warnings.is_empty() {
            let _ = writeln!(s, "warnings:");
            for (name, w) in warnings {
                let _ = writeln!(s, "  [{name}] {w}");
            }
        }
        let _ = writeln!(
            s,
            "{} of {} runs passed",
            self.rows.iter().filter(|r| r.passed).count(),
            self.rows.len()
        );
        s
    }
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

pub fn row(path: &Path) -> Result<ReportRow> {
    let mp = manifest_path(path);
    let m = RunManifest::load(&mp)?;
    let mut checks = m.checks.clone();
    let tp = mp.with_file_name(TIMINGS_FILE);
    if tp.exists() {
        let t = Timings::load(&tp)?;
        if t.config_hash == m.config_hash {
            checks.extend(t.checks);
        }
    }
    let passed = m.complete && checks.iter().all(|c| c.passed);
    Ok(ReportRow {
        name: m.name,
        kind: m.kind,
        config_hash: m.config_hash,
        source: mp.display().to_string(),
        complete: m.complete,
        passed,
        checks,
        warnings: m.warnings,
    })
}

/// One row per manifest (or run directory); fails on a missing or corrupt
/// manifest.
pub fn report(paths: &[PathBuf]) -> Result<Summary> {
    let rows = paths
        .iter()
        .map(|p| row(p).with_context(|| format!("manifest {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let passed = rows.iter().all(|r| r.passed);
    Ok(Summary { rows, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::manifest::ManifestWriter;

    #[test]
    fn empty_input_is_a_passing_empty_summary() {
        let s = report(&[]).unwrap();
        assert!(s.rows.is_empty() && s.passed);
        assert!(s.render().contains("0 of 0"));
    }

    #[test]
    fn warnings_are_surfaced_verbatim() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig::default_for("evolve").unwrap();
        let mut w = ManifestWriter::create(dir.path(), &c).unwrap();
        let text = "CFL: step reduced from 1.0e-1 to 5.0e-2 at t = 0.300000";
        w.add_warnings([text.to_string()]).unwrap();
        w.add_check(Check::at_most("x", 0.0, 1.0)).unwrap();
        w.finish().unwrap();
        let s = report(&[dir.path().to_path_buf()]).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert!(s.passed);
        assert!(s.render().contains(text));
        assert!(s.to_json().unwrap().contains(text));
    }

    #[test]
    fn corrupt_or_missing_manifest_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(report(&[dir.path().to_path_buf()]).is_err());
        std::fs::write(dir.path().join(MANIFEST_FILE), b"{ not json").unwrap();
        assert!(report(&[dir.path().to_path_buf()]).is_err());
    }
}
