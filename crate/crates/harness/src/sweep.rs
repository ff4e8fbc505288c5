//! Parameter sweeps over a base run configuration.
//!
//! ```toml
//! base = "desk.toml"          # relative to this file
//! directory = "out/sweep"
//! workers = 2
//!
//! [axes]
//! "physics.eta" = [0.5, 1.0]
//! "init.u_amplitude" = [0.02, 0.05]
//! ```
//!
//! Every combination of axis values runs in its own directory
//! `directory/run_NNN`; `directory/sweep_report.json` collects the outcomes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::{set_dotted, RunConfig};
use crate::error::{io_err, HarnessError, Result};
use crate::runner::{self, Summary, EXIT_ERROR, EXIT_PASS};

pub const REPORT_FILE: &str = "sweep_report.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: PathBuf,
    pub directory: PathBuf,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub axes: BTreeMap<String, Vec<toml::Value>>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub index: usize,
    pub params: BTreeMap<String, serde_json::Value>,
    pub directory: PathBuf,
    pub exit_code: i32,
    pub error: Option<String>,
    pub summary: Option<Summary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<SweepEntry>,
    pub failed: usize,
}

impl SweepReport {
    /// `0` when every run passed, `1` if any run errored, else `2`.
    pub fn exit_code(&self) -> i32 {
        self.runs.iter().map(|r| r.exit_code).fold(EXIT_PASS, |acc, c| match (acc, c) {
            (EXIT_ERROR, _) | (_, EXIT_ERROR) => EXIT_ERROR,
            (a, c) => a.max(c),
        })
    }
}

/// Cartesian product of the axes in key order, last axis fastest.
pub fn combinations(axes: &BTreeMap<String, Vec<toml::Value>>) -> Vec<Vec<(String, toml::Value)>> {
    let mut out: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for (key, values) in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((key.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    out
}

fn to_json(v: &toml::Value) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

pub fn load(path: &Path) -> Result<(SweepConfig, toml::Table)> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut cfg: SweepConfig =
        toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    if cfg.workers == 0 {
        return Err(HarnessError::Config("sweep: workers must be >= 1".into()));
    }
    if let Some((k, _)) = cfg.axes.iter().find(|(_, v)| v.is_empty()) {
        return Err(HarnessError::Config(format!("sweep: axis `{k}` has no values")));
    }
    let parent = path.parent().unwrap_or(Path::new("."));
    if cfg.base.is_relative() {
        cfg.base = parent.join(&cfg.base);
    }
    let base_text = std::fs::read_to_string(&cfg.base).map_err(io_err(&cfg.base))?;
    let base: toml::Table =
        toml::from_str(&base_text).map_err(|e| HarnessError::Config(format!("{}: {e}", cfg.base.display())))?;
    Ok((cfg, base))
}

fn run_one(base: &toml::Table, combo: &[(String, toml::Value)], dir: &Path) -> (i32, Option<String>, Option<Summary>) {
    let build = || -> Result<RunConfig> {
        let mut doc = base.clone();
        for (k, v) in combo {
            set_dotted(&mut doc, k, v.clone())?;
        }
        set_dotted(&mut doc, "output.directory", toml::Value::String(dir.display().to_string()))?;
        let cfg: RunConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    };
    match build().and_then(|cfg| runner::run(&cfg)) {
        Ok(o) => (o.exit_code(), None, Some(o.summary)),
        Err(e) => (EXIT_ERROR, Some(e.to_string()), None),
    }
}

/// Runs every combination with at most `workers` concurrent runs. Failed
/// runs are recorded and the sweep continues.
pub fn run_sweep(cfg: &SweepConfig, base: &toml::Table) -> Result<SweepReport> {
    std::fs::create_dir_all(&cfg.directory).map_err(io_err(&cfg.directory))?;
    let combos = combinations(&cfg.axes);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<SweepEntry>>> = Mutex::new(vec![None; combos.len()]);
    std::thread::scope(|s| {
        for _ in 0..cfg.workers.min(combos.len()).max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(combo) = combos.get(i) else { break };
                let dir = cfg.directory.join(format!("run_{i:03}"));
                let (exit_code, error, summary) = run_one(base, combo, &dir);
                let entry = SweepEntry {
                    index: i,
                    params: combo.iter().map(|(k, v)| (k.clone(), to_json(v))).collect(),
                    directory: dir,
                    exit_code,
                    error,
                    summary,
                };
                results.lock().expect("no poisoned workers")[i] = Some(entry);
            });
        }
    });
    let runs: Vec<SweepEntry> = results
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|e| e.expect("every combination ran"))
        .collect();
    let failed = runs.iter().filter(|r| r.exit_code != EXIT_PASS).count();
    let report = SweepReport { runs, failed };
    let path = cfg.directory.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_axes() {
        let mut axes = BTreeMap::new();
        axes.insert("a.x".to_string(), vec![toml::Value::Integer(1), toml::Value::Integer(2)]);
        axes.insert("b.y".to_string(), vec![toml::Value::Float(0.5), toml::Value::Float(1.0)]);
        let c = combinations(&axes);
        assert_eq!(c.len(), 4);
        assert_eq!(c[1][0].1, toml::Value::Integer(1));
        assert_eq!(c[1][1].1, toml::Value::Float(1.0));
        assert_eq!(combinations(&BTreeMap::new()).len(), 1);
    }
}
