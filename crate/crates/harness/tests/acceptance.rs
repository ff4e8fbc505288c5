//! Acceptance suite: runs the desk configuration and prints one line per
//! criterion. Exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use lcd_spectra::diagnostics::{gn_survey, random_band_limited};
use lcd_spectra::{
    fit_power_law, forward_transform, heat_oracle_l2, integrate, inverse_transform, l2_norm_spectral, lp_norm,
    make_director, make_velocity, step_with, Exponent, Grid, GnTuple, Hooks, InitConfig, NormSeries, PhysicsParams,
    RadialProfile, Scheme, SpectralField, State, StepperConfig,
};
use lcd_spectra_harness::series::{SeriesTable, FILE_NAME};
use lcd_spectra_harness::{checkpoint, run, runner, RunConfig, Summary};

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: u32, name: &'static str, pass: bool, detail: String) -> Line {
    Line { id, name, pass, detail }
}

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn desk(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&root().join("configs/desk.toml")).expect("desk config loads");
    cfg.output.directory = dir.to_path_buf();
    cfg
}

fn exponent(summary: &Summary, name: &str) -> Option<f64> {
    summary.fits.iter().find(|f| f.name == name).map(|f| f.alpha)
}

/// Every `(series, target, tolerance)` must be fitted and within range.
fn rates(summary: &Summary, targets: &[(&str, f64, f64)]) -> (bool, String) {
    let mut ok = true;
    let parts: Vec<String> = targets
        .iter()
        .map(|&(name, target, tol)| match exponent(summary, name) {
            Some(a) => {
                ok &= (a - target).abs() <= tol;
                format!("{name} alpha {a:.4} (want {target} +- {tol})")
            }
            None => {
                ok = false;
                format!("{name} not fitted")
            }
        })
        .collect();
    (ok, parts.join(", "))
}

struct Samples(Vec<State<f64>>);

impl Hooks<f64> for Samples {
    fn on_sample(&mut self, s: &State<f64>) -> lcd_spectra::Result<()> {
        self.0.push(s.clone());
        Ok(())
    }
}

fn stepper(dt_max: f64, t_end: f64) -> StepperConfig<f64> {
    StepperConfig {
        dt_init: dt_max,
        cfl_number: 1.0,
        dt_max,
        t_end,
        scheme: Scheme::IfRk2,
    }
}

fn linear_oracle(cfg: &RunConfig) -> (bool, String) {
    let start = Instant::now();
    let s0 = runner::initial_state(cfg).expect("desk initial state");
    let g = Arc::clone(s0.grid());
    let params = PhysicsParams::new(cfg.physics.eta, cfg.physics.nu).unwrap().linear();

    let t_mode = 20.0;
    let mut worst: f64 = 0.0;
    for (dt, cadence) in [(0.5, None), (0.37, Some(1.0)), (20.0, None)] {
        let end = integrate(s0.clone(), &params, &stepper(dt, t_mode), cadence, &mut Samples(vec![])).unwrap();
        for (got, init) in [(&end.u_hat, &s0.u_hat), (&end.d_hat, &s0.d_hat)] {
            for (i, (a, b)) in got.coeffs().iter().zip(init.coeffs()).enumerate() {
                let want = b * (-g.k_sq(i % g.size()) * t_mode).exp();
                if want.norm() > 0.0 {
                    worst = worst.max((a - want).norm() / want.norm());
                } else {
                    worst = worst.max(a.norm());
                }
            }
        }
    }

    let k_max = cfg.init.u_shell.1;
    let t_end = 100.0;
    let mut rec = Samples(vec![]);
    integrate(s0, &params, &stepper(0.5, t_end), Some(1.0), &mut rec).unwrap();
    let window = (10.0 / (k_max * k_max), t_end);
    let sim: Vec<(f64, f64)> = rec.0.iter().map(|s| (s.t, l2_norm_spectral(&s.u_hat).powi(2))).collect();
    let profile = RadialProfile::Flat {
        c: cfg.init.u_amplitude,
        k_max,
    };
    let oracle: Vec<(f64, f64)> = sim.iter().map(|&(t, _)| (t, heat_oracle_l2(&profile, t).unwrap().powi(2))).collect();
    let fit = |name, data| fit_power_law(&NormSeries::new("l2_u_sq", name, data).unwrap(), window).unwrap().alpha;
    let (a_sim, a_orc) = (fit("linear", sim), fit("oracle", oracle));
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && (a_sim - 1.5).abs() <= 0.05 && (a_sim - a_orc).abs() <= 0.05 && secs <= 60.0;
    (
        pass,
        format!(
            "per-mode rel error {worst:.1e}, alpha {a_sim:.4} vs oracle {a_orc:.4} on [{:.1}, {t_end}], {secs:.1} s",
            window.0
        ),
    )
}

fn gn_suite() -> (bool, String) {
    let path = root().join("crates/core/tests/data/gn_baseline.json");
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return (false, format!("{}: {e}", path.display())),
    };
    let b: serde_json::Value = serde_json::from_str(&text).expect("baseline parses");
    let n = b["n"].as_u64().unwrap() as usize;
    let length = b["length"].as_f64().unwrap();
    let seed = b["seed"].as_u64().unwrap();
    let samples = b["samples"].as_u64().unwrap() as usize;
    let grid = Arc::new(Grid::new(n, length).unwrap());
    let mut pass = samples >= 100;
    let mut worst_growth = f64::NEG_INFINITY;
    let entries = b["entries"].as_array().unwrap();
    for e in entries {
        let tuple: GnTuple = serde_json::from_value(e["tuple"].clone()).unwrap();
        let recorded = e["max_ratio"].as_f64().unwrap();
        let s = gn_survey(&grid, &tuple, samples, seed).unwrap();
        let growth = s.max_ratio / recorded - 1.0;
        worst_growth = worst_growth.max(growth);
        pass &= s.all_finite && s.max_ratio.is_finite() && growth < 0.05;
    }
    (
        pass,
        format!("{} tuples x {samples} fields, largest change of the maximum {worst_growth:+.2e}", entries.len()),
    )
}

fn convergence_order() -> f64 {
    let init = InitConfig {
        seed: 5,
        u_amplitude: 0.6,
        u_shell: (0.0, 1.0),
        d_perturb_amplitude: 0.3,
        d_perturb_band: (0.0, 1.0),
        ..InitConfig::default()
    };
    let g = Arc::new(Grid::new(16, 8.0 * std::f64::consts::PI).unwrap());
    let s0 = State::new(
        make_velocity(&init, &g).unwrap(),
        make_director(&init, &g).unwrap().d_hat,
        init.w0,
        0.0,
    )
    .unwrap();
    let params = PhysicsParams::new(1.0, 1.0).unwrap();
    let run = |steps: usize| {
        let dt = 2.0 / steps as f64;
        (0..steps).fold(s0.clone(), |s, _| step_with(&s, &params, dt, Scheme::IfRk2).unwrap())
    };
    let dist = |a: &State<f64>, b: &State<f64>| {
        let diff = |x: &SpectralField<f64>, y: &SpectralField<f64>| {
            let mut d = x.clone();
            d.axpy(-1.0, y);
            l2_norm_spectral(&d).powi(2)
        };
        (diff(&a.u_hat, &b.u_hat) + diff(&a.d_hat, &b.d_hat)).sqrt()
    };
    let (a, b, c) = (run(10), run(20), run(40));
    (dist(&a, &b) / dist(&b, &c)).log2()
}

fn hygiene(cfg: &RunConfig, dir: &Path, tmp: &Path) -> (bool, String) {
    let order = convergence_order();
    let order_ok = (order - 2.0).abs() <= 0.2;

    let s0 = runner::initial_state(cfg).unwrap();
    let g = Arc::clone(s0.grid());
    let mut fields = vec![s0.u_hat.clone(), s0.d_hat.clone()];
    for seed in 0..4u64 {
        let coeffs = (0..3).flat_map(|c| random_band_limited(&g, 10 * seed + c).into_coeffs()).collect();
        fields.push(SpectralField::from_coeffs(&g, 3, coeffs).unwrap());
    }
    let (mut trip, mut planch) = (0.0f64, 0.0f64);
    for f in &fields {
        let real = inverse_transform(f).unwrap();
        let back = forward_transform(&real).unwrap();
        let err = f.coeffs().iter().zip(back.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        trip = trip.max(err / f.max_abs());
        let grid_sq = lp_norm(&real, Exponent::Finite(2.0)).unwrap().powi(2);
        let spec_sq = l2_norm_spectral(f).powi(2);
        planch = planch.max((grid_sq - spec_sq).abs() / spec_sq);
    }

    // reload the final desk checkpoint and write it back out
    let ckpt = dir.join(runner::CHECKPOINT_FILE);
    let bytes = std::fs::read(&ckpt).unwrap();
    let (_, state) = checkpoint::load(&ckpt).unwrap();
    let bit_exact = checkpoint::encode(&state, &cfg.physics_params().unwrap()) == bytes;

    // a shorter rerun must reproduce the leading rows byte for byte
    let rerun_dir = tmp.join("rerun");
    let mut short = desk(&rerun_dir);
    short.stepper.t_end = 10.0;
    short.fit.t_lo = 1.0;
    short.fit.t_hi = Some(10.0);
    let identical = match run(&short) {
        Ok(_) => {
            let full = std::fs::read_to_string(dir.join(FILE_NAME)).unwrap();
            let part = std::fs::read_to_string(rerun_dir.join(FILE_NAME)).unwrap();
            let lines = part.lines().count();
            lines == 12 && full.lines().take(lines).eq(part.lines())
        }
        Err(_) => false,
    };

    let pass = order_ok && trip <= 1e-13 && planch <= 1e-12 && bit_exact && identical;
    (
        pass,
        format!(
            "order {order:.3}, round trip {trip:.1e}, plancherel {planch:.1e}, checkpoint bit-exact {bit_exact}, rerun identical {identical}"
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let dir = tmp.path().join("desk");
    let cfg = desk(&dir);
    let mut lines = Vec::new();

    let start = Instant::now();
    let outcome = run(&cfg);
    let secs = start.elapsed().as_secs_f64();
    let summary = match outcome {
        Ok(o) => o.summary,
        Err(e) => {
            println!("desk run failed: {e}");
            std::process::exit(1);
        }
    };
    println!(
        "desk run: N = {}, L = {:.4}, t_final = {}, {} samples, window {:?}, {secs:.0} s",
        summary.n, summary.length, summary.t_final, summary.samples, summary.window
    );
    let window_ok = summary.window == (5.0, 80.0);

    let (ok, d) = rates(&summary, &[("l2_u_sq", 1.5, 0.2)]);
    lines.push(line(1, "velocity L2 decay", ok && window_ok && secs <= 1800.0, d));
    let (ok, d) = rates(&summary, &[("l2_dev_d_sq", 1.5, 0.2)]);
    lines.push(line(2, "director L2 decay", ok && window_ok, d));
    let (ok, d) = rates(&summary, &[("l2_grad_d_sq", 2.5, 0.35)]);
    lines.push(line(3, "director gradient decay", ok && window_ok, d));
    let (ok, d) = rates(&summary, &[("l2_d1u_sq", 2.5, 0.35), ("l2_d2u_sq", 3.5, 0.5)]);
    lines.push(line(4, "derivative ladder", ok && window_ok, d));
    let (ok, d) = rates(&summary, &[("linf_u", 1.5, 0.3), ("linf_dev_d", 1.5, 0.3)]);
    lines.push(line(5, "L-infinity rates", ok && window_ok, d));

    let (ok, d) = linear_oracle(&cfg);
    lines.push(line(6, "linear oracle", ok, d));

    // property criteria straight from the recorded series
    let table = SeriesTable::read(&dir.join(FILE_NAME)).expect("series readable");
    let col = |n: &str| table.column(n).expect("column recorded");
    let t = table.times();
    let energy = col("energy_basic");
    let rise = energy.windows(2).map(|w| (w[1] - w[0]) / w[0]).fold(f64::NEG_INFINITY, f64::max);
    lines.push(line(7, "energy monotonicity", rise <= 1e-10, format!("largest relative increase {rise:.2e}")));

    let div = col("solenoidal_defect").into_iter().fold(0.0, f64::max);
    let (low, high, total) = (col("split_low_energy_u"), col("split_high_energy_u"), col("l2_u_sq"));
    let part = (0..t.len()).map(|i| ((low[i] + high[i] - total[i]) / total[i]).abs()).fold(0.0, f64::max);
    lines.push(line(
        8,
        "solenoidality and partition",
        div <= 1e-12 && part <= 1e-12,
        format!("max |k.u|/|u| {div:.1e}, partition {part:.1e}"),
    ));

    let uhat = col("split_max_uhat_low");
    let bound = 2.0 * uhat[0].max(1.0);
    let peak = uhat.iter().copied().fold(0.0, f64::max);
    lines.push(line(9, "low-mode boundedness", peak <= bound, format!("max {peak:.4e} vs bound {bound:.4e}")));

    let align = col("min_dir_alignment");
    let late = t.iter().zip(&align).filter(|(t, _)| **t >= 5.0).map(|(_, a)| *a).fold(f64::INFINITY, f64::min);
    lines.push(line(10, "director geometry", late >= 0.0, format!("min alignment for t >= 5: {late:.6}")));

    let (ok, d) = gn_suite();
    lines.push(line(11, "interpolation suite", ok, d));

    let (ok, d) = hygiene(&cfg, &dir, tmp.path());
    lines.push(line(12, "numerical hygiene", ok, d));

    let mut failed = 0;
    for l in &lines {
        let tag = if l.pass { "PASS" } else { "FAIL" };
        println!("criterion {:2} {tag} {}: {}", l.id, l.name, l.detail);
        failed += usize::from(!l.pass);
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
