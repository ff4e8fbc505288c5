//! Run configuration, read from a sectioned TOML file.
//!
//! ```toml
//! [grid]
//! n = 64
//! length_pi = 64      # L = 64π; or `length = 201.06`
//!
//! [physics]
//! eta = 1.0
//! nu = 1.0
//!
//! [init]
//! seed = 1
//! u_amplitude = 0.05
//! u_shell = [0.0, 0.65]
//! d_perturb_amplitude = 0.1
//! d_perturb_band = [0.0, 0.65]
//!
//! [stepper]
//! dt_max = 0.5
//! t_end = 80.0
//!
//! [diagnostics]
//! sample_interval = 1.0
//!
//! [fit]
//! t_lo = 5.0
//!
//! [output]
//! directory = "out/desk"
//! ```
//!
//! Unknown keys are rejected. Relative output directories resolve against
//! the current directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lcd_spectra::analysis::NormKind;
use lcd_spectra::{DiagnosticsConfig, ExpectationTable, InitConfig, PhysicsParams, Scheme, StepperConfig};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    pub init: InitConfig,
    pub stepper: StepperSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    /// Box side `L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    /// Box side as a multiple of `π`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_pi: Option<f64>,
}

impl GridSection {
    pub fn length(&self) -> Result<f64> {
        match (self.length, self.length_pi) {
            (Some(l), None) => Ok(l),
            (None, Some(m)) => Ok(m * std::f64::consts::PI),
            _ => Err(HarnessError::Config(
                "grid: exactly one of `length` and `length_pi` must be given".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub nu: f64,
    /// `false` drops the advection, stress and penalty terms.
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self {
            eta: 1.0,
            nu: 1.0,
            nonlinear: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    /// Cap on the first step; defaults to `dt_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_init: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl_number: f64,
    pub dt_max: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "default_t_lo")]
    pub t_lo: f64,
    /// Defaults to `min(t_end, 0.1·(L/2π)²)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_hi: Option<f64>,
    /// Tolerance for squared `L²` series.
    #[serde(default = "default_tol_l2")]
    pub tol_l2: f64,
    /// Tolerance for plain-norm series.
    #[serde(default = "default_tol_linf")]
    pub tol_linf: f64,
    /// Per-series tolerance overrides.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Series compared against the predicted exponents.
    #[serde(default = "default_series")]
    pub series: Vec<String>,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            t_lo: default_t_lo(),
            t_hi: None,
            tol_l2: default_tol_l2(),
            tol_linf: default_tol_linf(),
            tolerances: BTreeMap::new(),
            series: default_series(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    /// Time between checkpoints, a multiple of the sample interval. Defaults
    /// to every sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_interval: Option<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_dir(),
            checkpoint_interval: None,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_cfl() -> f64 {
    0.4
}
fn default_t_lo() -> f64 {
    5.0
}
fn default_tol_l2() -> f64 {
    0.2
}
fn default_tol_linf() -> f64 {
    0.3
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_series() -> Vec<String> {
    ["l2_u_sq", "l2_dev_d_sq", "l2_grad_d_sq", "l2_d1u_sq", "l2_d2u_sq", "linf_u", "linf_dev_d"]
        .map(String::from)
        .to_vec()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |section: &str, e: lcd_spectra::Error| HarnessError::Config(format!("{section}: {e}"));
        let length = self.grid.length()?;
        let grid = lcd_spectra::Grid::<f64>::new(self.grid.n, length).map_err(|e| cfg_err("grid", e))?;
        self.physics_params().map_err(|e| cfg_err("physics", e))?;
        if let Some(e) = self.init.eta {
            if e != self.physics.eta {
                return Err(HarnessError::Config(format!(
                    "init.eta = {e} disagrees with physics.eta = {}",
                    self.physics.eta
                )));
            }
        }
        self.init.validate(&grid).map_err(|e| cfg_err("init", e))?;
        self.stepper_config().validate().map_err(|e| cfg_err("stepper", e))?;
        self.diagnostics.validate().map_err(|e| cfg_err("diagnostics", e))?;
        for (name, tol) in self.fit.tolerances.iter().map(|(n, t)| (n.as_str(), *t)).chain([
            ("tol_l2", self.fit.tol_l2),
            ("tol_linf", self.fit.tol_linf),
        ]) {
            if !(tol > 0.0) {
                return Err(HarnessError::Config(format!("fit: tolerance for {name} must be > 0")));
            }
        }
        let table = self.expectations();
        if let Some(s) = self.fit.series.iter().find(|s| table.get(s).is_none()) {
            return Err(HarnessError::Config(format!("fit.series: no predicted exponent for `{s}`")));
        }
        if let Some(c) = self.output.checkpoint_interval {
            let ratio = c / self.diagnostics.sample_interval;
            if !(c > 0.0) || (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
                return Err(HarnessError::Config(
                    "output.checkpoint_interval must be a positive multiple of diagnostics.sample_interval".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn physics_params(&self) -> lcd_spectra::Result<PhysicsParams<f64>> {
        let p = PhysicsParams::new(self.physics.eta, self.physics.nu)?;
        Ok(if self.physics.nonlinear { p } else { p.linear() })
    }

    pub fn stepper_config(&self) -> StepperConfig<f64> {
        StepperConfig {
            dt_init: self.stepper.dt_init.unwrap_or(self.stepper.dt_max),
            cfl_number: self.stepper.cfl_number,
            dt_max: self.stepper.dt_max,
            t_end: self.stepper.t_end,
            scheme: self.stepper.scheme,
        }
    }

    /// `(t_lo, t_hi)` with the default upper edge resolved.
    pub fn fit_window(&self) -> Result<(f64, f64)> {
        let length = self.grid.length()?;
        let gap = 0.1 * (length / std::f64::consts::TAU).powi(2);
        Ok((self.fit.t_lo, self.fit.t_hi.unwrap_or(self.stepper.t_end.min(gap))))
    }

    pub fn expectations(&self) -> ExpectationTable {
        ExpectationTable::standard(self.diagnostics.m_max, &self.diagnostics.p_list)
    }

    /// Tolerance for one series: override, else by norm kind.
    pub fn tolerance(&self, series: &str) -> f64 {
        if let Some(t) = self.fit.tolerances.get(series) {
            return *t;
        }
        match self.expectations().get(series).map(|e| e.kind) {
            Some(NormKind::Plain) => self.fit.tol_linf,
            _ => self.fit.tol_l2,
        }
    }

    /// Every sample index that is also a checkpoint time.
    pub fn checkpoint_every(&self) -> u64 {
        self.output
            .checkpoint_interval
            .map_or(1, |c| (c / self.diagnostics.sample_interval).round() as u64)
    }
}

/// Sets `dotted.path = value` inside a TOML document.
pub fn set_dotted(doc: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts
        .pop()
        .filter(|p| !p.is_empty())
        .ok_or_else(|| HarnessError::Config(format!("bad override path `{path}`")))?;
    let mut table = doc;
    for p in parts {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("override `{path}`: `{p}` is not a section")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}
