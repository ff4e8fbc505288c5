use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lcd_spectra::RadialProfile;
use lcd_spectra_harness::runner::{EXIT_ERROR, EXIT_PASS};
use lcd_spectra_harness::{checkpoint, oracle, runner, sweep, HarnessError, RunConfig};

/// Decay-rate experiments for the simplified nematic liquid crystal flow.
///
/// Exit status: 0 pass, 2 theory comparison failed, 1 error.
#[derive(Parser)]
#[command(name = "lcd-spectra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration from its initial data.
    Run { config: PathBuf },
    /// Continue a run from a checkpoint.
    Resume { checkpoint: PathBuf, config: PathBuf },
    /// Tabulate the linear heat oracle `‖e^{tΔ}u₀‖²` for a radial profile.
    Oracle {
        #[arg(long, value_enum, default_value = "flat")]
        profile: ProfileKind,
        /// Profile height.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Support radius of the flat profile.
        #[arg(long, default_value_t = 1.0)]
        k_max: f64,
        /// Width of the gaussian profile.
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        /// Comma-separated evaluation times.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        times: Vec<f64>,
    },
    /// Run every combination of a sweep file.
    Sweep { sweep: PathBuf },
    /// Re-fit an existing run directory.
    Fit {
        dir: PathBuf,
        /// Configuration; defaults to the copy stored in the run directory.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        t_lo: Option<f64>,
        #[arg(long)]
        t_hi: Option<f64>,
    },
    /// Print the header of a checkpoint.
    Inspect { checkpoint: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileKind {
    Flat,
    Gaussian,
}

fn print_summary(outcome: &runner::RunOutcome) {
    let s = &outcome.summary;
    for f in &s.fits {
        println!("{:16} alpha = {:.4}  (n = {}, residual {:.2e})", f.name, f.alpha, f.n_points, f.residual_rms);
    }
    for r in &s.reasons {
        println!("fail: {r}");
    }
    println!(
        "verdict: {:?}  ({})",
        s.verdict,
        outcome.directory.join(runner::SUMMARY_FILE).display()
    );
}

fn execute(cli: Cli) -> Result<i32, HarnessError> {
    lcd_spectra_harness::init_threads()?;
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let out = runner::run(&cfg)?;
            print_summary(&out);
            Ok(out.exit_code())
        }
        Command::Resume { checkpoint, config } => {
            let cfg = RunConfig::load(&config)?;
            let out = runner::resume(&checkpoint, &cfg)?;
            print_summary(&out);
            Ok(out.exit_code())
        }
        Command::Oracle {
            profile,
            c,
            k_max,
            width,
            times,
        } => {
            let p = match profile {
                ProfileKind::Flat => RadialProfile::Flat { c, k_max },
                ProfileKind::Gaussian => RadialProfile::Gaussian { c, width },
            };
            let rows = oracle::oracle_table(&p, &times)?;
            println!("t,l2_sq,l2");
            for r in rows {
                println!("{:e},{:e},{:e}", r.t, r.l2_sq, r.l2);
            }
            Ok(EXIT_PASS)
        }
        Command::Sweep { sweep: path } => {
            let (cfg, base) = sweep::load(&path)?;
            let report = sweep::run_sweep(&cfg, &base)?;
            for r in &report.runs {
                let status = r.error.as_deref().unwrap_or(match r.exit_code {
                    0 => "pass",
                    _ => "fail",
                });
                println!("run_{:03} {:?}: {status}", r.index, r.params);
            }
            println!("{}", cfg.directory.join(sweep::REPORT_FILE).display());
            Ok(report.exit_code())
        }
        Command::Fit { dir, config, t_lo, t_hi } => {
            let path = config.unwrap_or_else(|| dir.join(runner::CONFIG_COPY));
            let cfg = RunConfig::load(&path)?;
            let s = runner::refit(&cfg, &dir, t_lo, t_hi)?;
            println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
            Ok(s.verdict.exit_code())
        }
        Command::Inspect { checkpoint: path } => {
            let (h, _) = checkpoint::load(&path)?;
            println!(
                "version {} N {} L {} t {} eta {} nu {} w0 {:?}",
                h.version, h.n, h.length, h.t, h.eta, h.nu, h.w0
            );
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // keep status 2 reserved for failed theory comparisons
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { EXIT_PASS as u8 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
