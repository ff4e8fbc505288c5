#![allow(dead_code)]

use std::path::Path;

use lcd_spectra_harness::RunConfig;

/// A short 16³ run that still has enough samples to fit.
pub fn small_toml(dir: &Path, t_end: f64, amplitude: f64) -> String {
    format!(
        r#"
[grid]
n = 16
length_pi = 16

[physics]
eta = 1.0
nu = 1.0

[init]
seed = 7
u_amplitude = {amplitude}
u_shell = [0.0, 0.6]
u_phases = "localized"
d_perturb_amplitude = {amplitude}
d_perturb_band = [0.0, 0.6]
d_phases = "localized"

[stepper]
dt_max = 0.5
t_end = {t_end:?}

[diagnostics]
sample_interval = 1.0

[fit]
t_lo = 1.0
t_hi = 12.0
tol_l2 = 5.0
tol_linf = 5.0

[output]
directory = "{}"
checkpoint_interval = 2.0
"#,
        dir.display()
    )
}

pub fn small(dir: &Path, t_end: f64) -> RunConfig {
    RunConfig::from_toml(&small_toml(dir, t_end, 0.05)).unwrap()
}
