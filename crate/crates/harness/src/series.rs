//! `series.csv`: one row per diagnostic sample.
//!
//! Columns, in order (`M` is `diagnostics.m_max`, `p` runs over
//! `diagnostics.p_list`):
//!
//! `t, l2_u_sq, linf_u, l2_d1u_sq … l2_dMu_sq, linf_d1u … linf_dMu,
//! phi_sq_0 … phi_sq_M, psi_sq_0 … psi_sq_M, l2_grad_d_sq, l2_dev_d_sq,
//! l2_d2dev_d_sq … l2_d(M+1)dev_d_sq, lp_dev_d_p…, linf_dev_d, linf_grad_d,
//! linf_d2_d, energy_kinetic, energy_elastic, energy_penalty, energy_total,
//! energy_basic, split_low_energy_u, split_high_energy_u, split_radius,
//! split_max_uhat_low, min_dir_alignment, solenoidal_defect`
//!
//! Values are written in shortest round-trip scientific notation, so reading
//! a file back reproduces the recorded `f64` values exactly.

use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

use lcd_spectra::{DiagnosticsRecord, NormSeries};

use crate::error::{io_err, HarnessError, Result};

pub const FILE_NAME: &str = "series.csv";

fn series_err(path: &Path, reason: impl Into<String>) -> HarnessError {
    HarnessError::Series {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub struct SeriesWriter {
    path: PathBuf,
    writer: csv::Writer<File>,
    header: Vec<String>,
}

impl SeriesWriter {
    /// Starts a new file with the given header.
    pub fn create(path: &Path, header: Vec<String>) -> Result<Self> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        writer.write_record(&header).map_err(|e| series_err(path, e.to_string()))?;
        writer.flush().map_err(io_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
            header,
        })
    }

    /// Appends to an existing file whose header must equal `header`.
    pub fn append(path: &Path, header: Vec<String>) -> Result<Self> {
        let existing = read_header(path)?;
        if existing != header {
            return Err(series_err(path, "column layout differs from the current configuration"));
        }
        let file = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
        let writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        Ok(Self {
            path: path.to_path_buf(),
            writer,
            header,
        })
    }

    pub fn write(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        let cols = record.columns();
        if cols.len() != self.header.len() || cols.iter().zip(&self.header).any(|((n, _), h)| n != h) {
            return Err(series_err(&self.path, "record columns do not match the header"));
        }
        self.writer
            .write_record(cols.iter().map(|(_, v)| format!("{v:e}")))
            .map_err(|e| series_err(&self.path, e.to_string()))?;
        self.writer.flush().map_err(io_err(&self.path))
    }
}

fn read_header(path: &Path) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| series_err(path, e.to_string()))?;
    let h = rdr.headers().map_err(|e| series_err(path, e.to_string()))?;
    Ok(h.iter().map(String::from).collect())
}

/// A parsed `series.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SeriesTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| series_err(path, e.to_string()))?;
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| series_err(path, e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        if columns.first().map(String::as_str) != Some("t") {
            return Err(series_err(path, "first column must be `t`"));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| series_err(path, e.to_string()))?;
            let row = rec
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| series_err(path, format!("row {}: {e}", i + 1)))?;
            if row.len() != columns.len() {
                return Err(series_err(path, format!("row {} has {} fields", i + 1, row.len())));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }

    pub fn norm_series(&self, name: &str, run: &str) -> Option<lcd_spectra::Result<NormSeries>> {
        let v = self.column(name)?;
        Some(NormSeries::new(name, run, self.times().into_iter().zip(v).collect()))
    }
}

/// Drops rows with `t` beyond `t_max` (up to round-off), keeping the header.
pub fn truncate_after(path: &Path, t_max: f64) -> Result<()> {
    let table = SeriesTable::read(path)?;
    let slack = 1e-9 * t_max.abs().max(1.0);
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| series_err(path, e.to_string()))?;
    w.write_record(&table.columns).map_err(|e| series_err(path, e.to_string()))?;
    for row in table.rows.iter().filter(|r| r[0] <= t_max + slack) {
        w.write_record(row.iter().map(|v| format!("{v:e}")))
            .map_err(|e| series_err(path, e.to_string()))?;
    }
    w.flush().map_err(io_err(path))
}
