use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kcap_cli::config::{ExperimentConfig, Mode, SweepSpec};
use kcap_cli::plotdata::{emit_plot_data, PlotKind};
use kcap_cli::runner::run_experiment;
use kcap_cli::sweep::{run_sweep, write_results};
use kcap_cli::validation::{bounds_table, table_csv};

/// k-winners-take-all process on geometric random graphs: seeded
/// experiments, sweeps, bound validation, and plot data.
#[derive(Parser)]
#[command(name = "kcap", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file (any mode).
    Run { config: PathBuf },
    /// Run every cell of a sweep spec and write the summary table.
    Sweep { spec: PathBuf },
    /// Run a continuous-process config (mode must be `continuous`).
    Continuous { config: PathBuf },
    /// Validate the probability bounds and print the table.
    Bounds {
        /// Monte Carlo trials per row.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Also write the table to this CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a firing-probability profile config (mode must be `fire-prob`).
    FireProb { config: PathBuf },
    /// Extract plot data from a recorded trace.
    PlotData {
        trace: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    /// Bad invocation or config: exit code 1.
    Usage(anyhow::Error),
    /// Failure while executing: exit code 2.
    Runtime(anyhow::Error),
}

fn usage(e: anyhow::Error) -> CliError {
    CliError::Usage(e)
}

fn runtime(e: anyhow::Error) -> CliError {
    CliError::Runtime(e)
}

fn load_config(path: &PathBuf, expect: Option<Mode>) -> Result<ExperimentConfig, CliError> {
    let cfg = ExperimentConfig::parse_file(path).map_err(usage)?;
    if let Some(mode) = expect {
        if cfg.mode != mode {
            return Err(usage(anyhow::anyhow!(
                "config {} has mode `{}`, expected `{}`",
                path.display(),
                cfg.mode.name(),
                mode.name()
            )));
        }
    }
    Ok(cfg)
}

fn execute(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Run { config } => {
            let cfg = load_config(&config, None)?;
            let artifacts = run_experiment(&cfg).map_err(runtime)?;
            println!("manifest: {}", artifacts.manifest.display());
            for f in &artifacts.files {
                println!("wrote: {}", f.display());
            }
        }
        Cmd::Continuous { config } => {
            let cfg = load_config(&config, Some(Mode::Continuous))?;
            let artifacts = run_experiment(&cfg).map_err(runtime)?;
            for f in &artifacts.files {
                println!("wrote: {}", f.display());
            }
        }
        Cmd::FireProb { config } => {
            let cfg = load_config(&config, Some(Mode::FireProb))?;
            let artifacts = run_experiment(&cfg).map_err(runtime)?;
            for f in &artifacts.files {
                println!("wrote: {}", f.display());
            }
        }
        Cmd::Sweep { spec } => {
            let spec = SweepSpec::parse_file(&spec).map_err(usage)?;
            let results = run_sweep(&spec).map_err(runtime)?;
            let path = write_results(&spec, &results).map_err(runtime)?;
            println!("wrote: {} ({} rows)", path.display(), results.rows.len());
            for (label, err) in &results.failures {
                eprintln!("cell failed: {label}: {err}");
            }
            if !results.failures.is_empty() {
                return Err(runtime(anyhow::anyhow!(
                    "{} sweep cells failed",
                    results.failures.len()
                )));
            }
        }
        Cmd::Bounds { trials, out } => {
            if trials < 1000 {
                return Err(usage(anyhow::anyhow!("--trials must be at least 1000")));
            }
            let rows = bounds_table(trials, 0xB0);
            let csv = table_csv(&rows);
            print!("{csv}");
            if let Some(path) = out {
                std::fs::write(&path, &csv)
                    .map_err(|e| runtime(anyhow::anyhow!("writing {}: {e}", path.display())))?;
            }
            if rows.iter().any(|r| !r.pass) {
                return Err(runtime(anyhow::anyhow!("one or more bounds failed validation")));
            }
        }
        Cmd::PlotData { trace, kind, out } => {
            let kind: PlotKind = kind.parse().map_err(usage)?;
            let path = emit_plot_data(&trace, kind, out).map_err(runtime)?;
            println!("wrote: {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successful exits
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
