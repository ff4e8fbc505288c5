//! `run`, `resume` and the fitting stage that turns `series.csv` into
//! `summary.json`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use lcd_spectra::analysis::compare_with;
use lcd_spectra::{
    fit_power_law, integrate, make_director, make_velocity, measure, Error, FitResult, Grid, Hooks, PhysicsParams,
    State, TheoryReport,
};
use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::config::RunConfig;
use crate::error::{io_err, HarnessError, Result};
use crate::series::{self, SeriesTable, SeriesWriter};

pub const SUMMARY_FILE: &str = "summary.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CONFIG_COPY: &str = "config.toml";
pub const BLOWUP_FILE: &str = "blowup.txt";

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_THEORY_FAIL: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Every compared series is identically zero; exponents were not fitted.
    Degenerate,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Degenerate => EXIT_PASS,
            Verdict::Fail => EXIT_THEORY_FAIL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Smallness {
    /// `‖u₀‖²_{H¹} + ‖d₀ − w₀‖²_{H²}`
    pub report: f64,
    /// `report / L³`
    pub box_normalized: f64,
    pub budget: f64,
    pub within_budget: bool,
}

/// Property checks evaluated over every recorded sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    /// Largest relative increase of `energy_basic` between consecutive samples.
    pub energy_max_rel_increase: f64,
    pub energy_monotone: bool,
    pub solenoidal_max: f64,
    pub solenoidal_ok: bool,
    /// Largest `|low + high − total| / total`.
    pub split_partition_max: f64,
    pub split_partition_ok: bool,
    /// Largest `max_uhat_low(t) / (2·max(max_uhat_low(0), 1))`.
    pub low_mode_ratio: f64,
    pub low_mode_bounded: bool,
    /// Smallest alignment `(d + w₀)·d` at `t >= fit.t_lo`.
    pub min_alignment_late: f64,
    pub alignment_ok: bool,
}

pub const ENERGY_TOL: f64 = 1e-10;
pub const SOLENOIDAL_TOL: f64 = 1e-12;
pub const PARTITION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesIssue {
    pub series: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub length: f64,
    pub t_final: f64,
    pub samples: usize,
    pub window: (f64, f64),
    pub smallness: Option<Smallness>,
    pub checks: Checks,
    pub fits: Vec<FitResult>,
    pub degenerate: Vec<String>,
    pub fit_errors: Vec<SeriesIssue>,
    pub report: Option<TheoryReport>,
    pub reasons: Vec<String>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub directory: PathBuf,
    pub summary: Summary,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.summary.verdict.exit_code()
    }
}

struct Recorder<'a> {
    config: &'a RunConfig,
    params: PhysicsParams<f64>,
    writer: SeriesWriter,
    checkpoint: PathBuf,
    last_checkpoint: Option<PathBuf>,
    every: u64,
}

impl Recorder<'_> {
    fn record(&mut self, state: &State<f64>) -> Result<()> {
        let rec = measure(state, &self.params, &self.config.diagnostics)?;
        self.writer.write(&rec)?;
        let interval = self.config.diagnostics.sample_interval;
        let k = (state.t / interval).round();
        let on_cadence = (state.t - k * interval).abs() <= 1e-9 * interval && (k as u64) % self.every == 0;
        if on_cadence || state.t >= self.config.stepper.t_end {
            checkpoint::save(&self.checkpoint, state, &self.params)?;
            self.last_checkpoint = Some(self.checkpoint.clone());
        }
        Ok(())
    }
}

impl Hooks<f64> for Recorder<'_> {
    fn on_sample(&mut self, state: &State<f64>) -> lcd_spectra::Result<()> {
        // harness errors surface through the core error type inside the loop
        self.record(state).map_err(|e| Error::Data(e.to_string()))
    }
}

fn prepare_dir(config: &RunConfig) -> Result<PathBuf> {
    let dir = config.output.directory.clone();
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let copy = dir.join(CONFIG_COPY);
    std::fs::write(&copy, config.to_toml()).map_err(io_err(&copy))?;
    Ok(dir)
}

fn drive(config: &RunConfig, state: State<f64>, recorder: &mut Recorder, resumed: bool) -> Result<()> {
    let params = config.physics_params()?;
    let mut stepper = config.stepper_config();
    if resumed {
        // the uninterrupted run does not cap steps after its first
        stepper.dt_init = stepper.dt_max;
    }
    let cadence = Some(config.diagnostics.sample_interval);
    match integrate(state, &params, &stepper, cadence, recorder) {
        Ok(_) => Ok(()),
        Err(Error::BlowUp { t, dump }) => {
            let path = config.output.directory.join(BLOWUP_FILE);
            std::fs::write(&path, &dump).map_err(io_err(&path))?;
            Err(HarnessError::BlowUp {
                message: format!("non-finite state at t = {t} (dump in {})", path.display()),
                checkpoint: recorder
                    .last_checkpoint
                    .as_ref()
                    .map_or("none".into(), |p| p.display().to_string()),
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// Builds the initial state described by `config`.
pub fn initial_state(config: &RunConfig) -> Result<State<f64>> {
    let grid = Arc::new(Grid::new(config.grid.n, config.grid.length()?)?);
    let u = make_velocity(&config.init, &grid)?;
    let d = make_director(&config.init, &grid)?;
    Ok(State::new(u, d.d_hat, config.init.w0, 0.0)?)
}

/// Fresh run from the configured initial data.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let dir = prepare_dir(config)?;
    let state = initial_state(config)?;
    let params = config.physics_params()?;
    let header = measure(&state, &params, &config.diagnostics)?.column_names();
    let mut recorder = Recorder {
        config,
        params,
        writer: SeriesWriter::create(&dir.join(series::FILE_NAME), header)?,
        checkpoint: dir.join(CHECKPOINT_FILE),
        last_checkpoint: None,
        every: config.checkpoint_every(),
    };
    recorder.record(&state)?;
    drive(config, state, &mut recorder, false)?;
    finalize(config, &dir)
}

/// Continues a run from `checkpoint_path`, appending to the existing
/// `series.csv` after dropping rows recorded past the checkpoint time.
pub fn resume(checkpoint_path: &Path, config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let (header, state) = checkpoint::load(checkpoint_path)?;
    let length = config.grid.length()?;
    let mismatch = |what: &str, a: String, b: String| HarnessError::Compat(format!("{what}: checkpoint {a}, config {b}"));
    if header.n as usize != config.grid.n {
        return Err(mismatch("N", header.n.to_string(), config.grid.n.to_string()));
    }
    if header.length != length {
        return Err(mismatch("L", header.length.to_string(), length.to_string()));
    }
    if header.eta != config.physics.eta || header.nu != config.physics.nu {
        return Err(mismatch(
            "eta/nu",
            format!("{}/{}", header.eta, header.nu),
            format!("{}/{}", config.physics.eta, config.physics.nu),
        ));
    }
    if header.w0 != config.init.w0 {
        return Err(mismatch("w0", format!("{:?}", header.w0), format!("{:?}", config.init.w0)));
    }
    let dir = prepare_dir(config)?;
    let params = config.physics_params()?;
    let columns = measure(&state, &params, &config.diagnostics)?.column_names();
    let csv_path = dir.join(series::FILE_NAME);
    let has_rows = if csv_path.exists() {
        series::truncate_after(&csv_path, header.t)?;
        !SeriesTable::read(&csv_path)?.rows.is_empty()
    } else {
        false
    };
    let writer = if csv_path.exists() {
        SeriesWriter::append(&csv_path, columns)?
    } else {
        SeriesWriter::create(&csv_path, columns)?
    };
    let mut recorder = Recorder {
        config,
        params,
        writer,
        checkpoint: dir.join(CHECKPOINT_FILE),
        last_checkpoint: Some(checkpoint_path.to_path_buf()),
        every: config.checkpoint_every(),
    };
    if !has_rows {
        recorder.record(&state)?;
    }
    drive(config, state, &mut recorder, true)?;
    finalize(config, &dir)
}

fn smallness(table: &SeriesTable, config: &RunConfig, length: f64) -> Option<Smallness> {
    let first = |name: &str| table.column(name).and_then(|c| c.first().copied());
    let report = first("l2_u_sq")?
        + first("l2_d1u_sq")?
        + first("l2_dev_d_sq")?
        + first("l2_grad_d_sq")?
        + first("l2_d2dev_d_sq")?;
    let box_normalized = report / length.powi(3);
    Some(Smallness {
        report,
        box_normalized,
        budget: config.init.smallness_budget,
        within_budget: box_normalized <= config.init.smallness_budget,
    })
}

/// Evaluates the sample-wise property checks.
pub fn evaluate_checks(table: &SeriesTable, t_late: f64) -> Result<Checks> {
    let col = |name: &str| {
        table.column(name).ok_or_else(|| HarnessError::Series {
            path: PathBuf::from(series::FILE_NAME),
            reason: format!("missing column {name}"),
        })
    };
    let t = table.times();
    let energy = col("energy_basic")?;
    let energy_max_rel_increase = energy
        .windows(2)
        .map(|w| if w[0] > 0.0 { (w[1] - w[0]) / w[0] } else { w[1] - w[0] })
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let solenoidal_max = col("solenoidal_defect")?.into_iter().fold(0.0, f64::max);
    let (low, high, total) = (col("split_low_energy_u")?, col("split_high_energy_u")?, col("l2_u_sq")?);
    let split_partition_max = (0..t.len())
        .map(|i| {
            let d = (low[i] + high[i] - total[i]).abs();
            if total[i] > 0.0 {
                d / total[i]
            } else {
                d
            }
        })
        .fold(0.0, f64::max);
    let uhat = col("split_max_uhat_low")?;
    let bound = 2.0 * uhat.first().copied().unwrap_or(0.0).max(1.0);
    let low_mode_ratio = uhat.iter().fold(0.0f64, |m, v| m.max(v / bound));
    let align = col("min_dir_alignment")?;
    let min_alignment_late = t
        .iter()
        .zip(&align)
        .filter(|(t, _)| **t >= t_late)
        .fold(f64::INFINITY, |m, (_, a)| m.min(*a));
    Ok(Checks {
        energy_max_rel_increase,
        energy_monotone: energy_max_rel_increase <= ENERGY_TOL,
        solenoidal_max,
        solenoidal_ok: solenoidal_max <= SOLENOIDAL_TOL,
        split_partition_max,
        split_partition_ok: split_partition_max <= PARTITION_TOL,
        low_mode_ratio,
        low_mode_bounded: low_mode_ratio <= 1.0,
        min_alignment_late,
        alignment_ok: !(min_alignment_late < 0.0),
    })
}

/// Fits and checks the recorded series, writing `summary.json`.
pub fn finalize(config: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    let summary = summarize(config, dir, config.fit_window()?)?;
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(RunOutcome {
        directory: dir.to_path_buf(),
        summary,
    })
}

/// Builds the summary for the series in `dir` over `window`.
pub fn summarize(config: &RunConfig, dir: &Path, window: (f64, f64)) -> Result<Summary> {
    let csv_path = dir.join(series::FILE_NAME);
    let table = SeriesTable::read(&csv_path)?;
    let length = config.grid.length()?;
    let run_name = dir.display().to_string();
    let checks = evaluate_checks(&table, config.fit.t_lo)?;

    let mut fits = Vec::new();
    let mut degenerate = Vec::new();
    let mut fit_errors = Vec::new();
    for name in &config.fit.series {
        let s = match table.norm_series(name, &run_name) {
            Some(Ok(s)) => s,
            Some(Err(e)) => {
                fit_errors.push(SeriesIssue {
                    series: name.clone(),
                    error: e.to_string(),
                });
                continue;
            }
            None => {
                fit_errors.push(SeriesIssue {
                    series: name.clone(),
                    error: "column not recorded".into(),
                });
                continue;
            }
        };
        if s.is_degenerate() {
            degenerate.push(name.clone());
            continue;
        }
        match fit_power_law(&s, window) {
            Ok(f) => fits.push(f),
            Err(e) => fit_errors.push(SeriesIssue {
                series: name.clone(),
                error: e.to_string(),
            }),
        }
    }
    let report = if fits.is_empty() {
        None
    } else {
        Some(compare_with(&fits, &config.expectations(), |s| config.tolerance(s))?)
    };

    let smallness = smallness(&table, config, length);
    let mut reasons = Vec::new();
    if let Some(r) = &report {
        for e in r.entries.iter().filter(|e| !e.verdict) {
            reasons.push(format!(
                "{}: alpha {:.4} vs predicted {} (tol {})",
                e.series, e.alpha, e.predicted, e.tol
            ));
        }
    }
    for e in &fit_errors {
        reasons.push(format!("{}: {}", e.series, e.error));
    }
    let flag = |ok: bool, msg: &str, reasons: &mut Vec<String>| {
        if !ok {
            reasons.push(msg.to_string());
        }
    };
    flag(checks.energy_monotone, "energy increased between samples", &mut reasons);
    flag(checks.solenoidal_ok, "velocity divergence above tolerance", &mut reasons);
    flag(checks.split_partition_ok, "Fourier split does not partition the energy", &mut reasons);
    flag(checks.low_mode_bounded, "low-mode amplitude exceeded its bound", &mut reasons);
    flag(checks.alignment_ok, "director alignment became negative", &mut reasons);
    if let Some(s) = &smallness {
        flag(s.within_budget, "initial data exceed the smallness budget", &mut reasons);
    }

    let all_degenerate = fits.is_empty() && fit_errors.is_empty() && !degenerate.is_empty();
    let verdict = if !reasons.is_empty() {
        Verdict::Fail
    } else if all_degenerate {
        Verdict::Degenerate
    } else if report.as_ref().is_some_and(|r| r.pass) {
        Verdict::Pass
    } else {
        reasons.push("no series compared".into());
        Verdict::Fail
    };

    Ok(Summary {
        n: config.grid.n,
        length,
        t_final: table.times().last().copied().unwrap_or(0.0),
        samples: table.rows.len(),
        window,
        smallness,
        checks,
        fits,
        degenerate,
        fit_errors,
        report,
        reasons,
        verdict,
    })
}

/// Re-fits an existing run directory, optionally over a new window, and
/// writes `refit.json`.
pub fn refit(config: &RunConfig, dir: &Path, t_lo: Option<f64>, t_hi: Option<f64>) -> Result<Summary> {
    let (lo, hi) = config.fit_window()?;
    let window = (t_lo.unwrap_or(lo), t_hi.unwrap_or(hi));
    if !(window.0 < window.1) {
        return Err(HarnessError::Usage(format!("empty fit window {window:?}")));
    }
    let mut cfg = config.clone();
    cfg.fit.t_lo = window.0;
    let summary = summarize(&cfg, dir, window)?;
    let path = dir.join("refit.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(summary)
}
