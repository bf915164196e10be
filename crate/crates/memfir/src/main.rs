//! Thin CLI over [`memfir::scenario`]. All experiment logic lives in the
//! library; this binary only parses arguments, resolves a config, and maps
//! errors to exit codes (0 ok, 1 usage/config, 2 non-convergence,
//! 3 invariant violation).

use clap::{Args, Parser, Subcommand};
use memfir::scenario::{self, ScenarioConfig, ScenarioError, ScenarioSummary};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "memfir", version, about = "Mixed-signal FIR filter with memristive tap weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config file (TOML)
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset: paper-exp1, paper-exp2, paper-fig1
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Quasi-DC I-V loop family, one CSV per amplitude
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Peak voltages in volts, comma separated
        #[arg(long, value_delimiter = ',', value_name = "V,V,...")]
        v_peaks: Option<Vec<f64>>,
    },
    /// Program a device bank and emit per-tap write-verify traces
    Tune {
        #[command(flatten)]
        common: Common,
    },
    /// Full scenario: tune the bank, filter the noisy sine, score metrics
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Analytic and probe-measured frequency-response curves
    Freqresp {
        #[command(flatten)]
        common: Common,
    },
    /// The paper-exp1 and paper-exp2 presets plus their comparison metrics
    DemoPaper {
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common, fallback_preset: &str) -> Result<ScenarioConfig, ScenarioError> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), None) => scenario::load_config(path)?,
        (None, Some(name)) => scenario::preset(name)?,
        (None, None) => scenario::preset(fallback_preset)?,
        (Some(_), Some(_)) => unreachable!("clap rejects --config with --preset"),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(summary: &ScenarioSummary) {
    for report in &summary.reports {
        println!(
            "tap: converged={} pulses={} final_r={:.1}",
            report.converged, report.pulses_used, report.final_r
        );
    }
    for (key, value) in &summary.metrics {
        println!("{key}={value}");
    }
    println!("wrote {} files to {}", summary.files.len(), summary.out_dir.display());
}

fn run(cli: Cli) -> Result<(), ScenarioError> {
    let summary = match cli.command {
        Command::Sweep { common, v_peaks } => {
            let cfg = resolve(&common, "paper-fig1")?;
            scenario::export_sweep(&cfg, v_peaks.as_deref())?
        }
        Command::Tune { common } => scenario::run_tune(&resolve(&common, "paper-exp1")?)?,
        Command::Run { common } => scenario::run_scenario(&resolve(&common, "paper-exp1")?)?,
        Command::Freqresp { common } => scenario::run_freqresp(&resolve(&common, "paper-exp1")?)?,
        Command::DemoPaper { common } => {
            if common.config.is_some() || common.preset.is_some() {
                return Err(ScenarioError::Config(
                    "demo-paper runs its fixed preset pair; --config/--preset do not apply".into(),
                ));
            }
            let seed = common.seed.unwrap_or(42);
            let out = common.out.unwrap_or_else(|| PathBuf::from("out/demo-paper"));
            scenario::demo_paper(seed, &out)?
        }
    };
    print_summary(&summary);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
