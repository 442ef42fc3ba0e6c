use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tskf_cli::commands::{self, McArgs, OracleArgs, RunArgs, SweepArgs};
use tskf_cli::config::{PlotFormat, PlotMode};
use tskf_cli::scenarios::BUILTIN_NAMES;
use tskf_cli::CliError;

#[derive(Parser)]
#[command(name = "tskf", version, about = "Kalman filtering on time scales")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and filter one realization.
    Run {
        /// Config file or built-in scenario name.
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Dotted config edit, e.g. `sampling.h=0.25`. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (default: config, then $TSKF_OUTPUT_DIR/<scenario>-run).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo over seeds base, base+1, ...
    Mc {
        scenario: String,
        #[arg(short = 'n', long)]
        replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Use the base seed for every replicate.
        #[arg(long)]
        same_seed: bool,
        /// Also write every replicate's trace CSV.
        #[arg(long)]
        keep_traces: bool,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bisect for the largest constant graininess with bounded covariance.
    Sweep {
        scenario: String,
        lo: f64,
        hi: f64,
        #[arg(long = "res", default_value_t = 0.05)]
        resolution: f64,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
        /// Trace ceiling as a multiple of trace(P0).
        #[arg(long, default_value_t = 1e8)]
        ceiling: f64,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the filter with the discrete and Riccati ODE oracles.
    OracleCheck {
        scenario: String,
        /// Constant graininess values to test.
        #[arg(long = "c", value_delimiter = ',', default_values_t = vec![0.1, 0.5, 2.0])]
        graininess: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1e-2)]
        ode_tol: f64,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a time scale from a `t,valid` CSV and print its spec string.
    ExtractTs {
        csv: PathBuf,
        /// Valid runs with at least this many samples become intervals.
        #[arg(long = "l-cont", default_value_t = 3)]
        l_cont: usize,
        /// Also write the spec string to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a trace or aggregate CSV.
    Plot {
        input: PathBuf,
        #[arg(long, default_value = "timescale")]
        mode: PlotMode,
        #[arg(long, default_value = "svg")]
        format: PlotFormat,
        /// Output directory (default: next to the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios or print one as TOML.
    Scenarios { name: Option<String> },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            overrides,
            out,
        } => {
            let o = commands::run(&RunArgs {
                scenario,
                seed,
                overrides,
                out,
            })?;
            report(&o);
        }
        Command::Mc {
            scenario,
            replicates,
            seed,
            same_seed,
            keep_traces,
            overrides,
            out,
        } => {
            let o = commands::monte_carlo(&McArgs {
                scenario,
                replicates,
                seed,
                same_seed,
                keep_traces,
                overrides,
                out,
            })?;
            report(&o);
        }
        Command::Sweep {
            scenario,
            lo,
            hi,
            resolution,
            horizon,
            ceiling,
            overrides,
            out,
        } => {
            let o = commands::sweep(&SweepArgs {
                scenario,
                lo,
                hi,
                resolution,
                horizon,
                ceiling_factor: ceiling,
                overrides,
                out,
            })?;
            report(&o);
        }
        Command::OracleCheck {
            scenario,
            graininess,
            steps,
            tol,
            ode_tol,
            overrides,
            out,
        } => {
            let o = commands::oracle_check(&OracleArgs {
                scenario,
                graininess,
                steps,
                tolerance: tol,
                ode_tolerance: ode_tol,
                overrides,
                out,
            })?;
            report(&o);
        }
        Command::ExtractTs { csv, l_cont, out } => {
            let (spec, ts) = commands::extract_ts(&csv, l_cont)?;
            println!("{spec}");
            eprintln!(
                "{} segments over [{}, {}], max graininess {}",
                ts.segments().len(),
                ts.min_time(),
                ts.max_time(),
                ts.max_graininess()
            );
            if let Some(path) = out {
                tskf_cli::artifacts::write_atomic(&path, format!("{spec}\n").as_bytes())?;
            }
        }
        Command::Plot {
            input,
            mode,
            format,
            out,
        } => {
            let dir = out.unwrap_or_else(|| {
                input
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            for p in commands::plot_file(&input, mode, format, &dir)? {
                println!("{}", p.display());
            }
        }
        Command::Scenarios { name } => match name {
            None => BUILTIN_NAMES.iter().for_each(|n| println!("{n}")),
            Some(n) => {
                let cfg = tskf_cli::scenarios::builtin(&n)
                    .ok_or_else(|| tskf_cli::ConfigError::UnknownScenario(n.clone()))?;
                print!("{}", cfg.to_toml_string());
            }
        },
    }
    Ok(())
}

fn report(o: &commands::CommandOutcome) {
    println!(
        "{}",
        serde_json::to_string_pretty(&o.summary).unwrap_or_default()
    );
    eprintln!("artifacts written to {}", o.dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
