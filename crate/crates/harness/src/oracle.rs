//! Tabulated heat-semigroup norms for the `oracle` subcommand.

use lcd_spectra::{heat_oracle_l2, RadialProfile};
use serde::Serialize;

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub t: f64,
    pub l2_sq: f64,
    pub l2: f64,
}

pub fn oracle_table(profile: &RadialProfile, times: &[f64]) -> Result<Vec<OracleRow>> {
    if times.is_empty() {
        return Err(HarnessError::Usage("at least one time is required".into()));
    }
    times
        .iter()
        .map(|&t| {
            let l2 = heat_oracle_l2(profile, t)?;
            Ok(OracleRow { t, l2_sq: l2 * l2, l2 })
        })
        .collect()
}
