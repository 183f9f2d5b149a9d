use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kinf_smc::experiment::csvio::fmt_opt;
use kinf_smc::experiment::{self, BatchSummary, Figure, SweepGrid};

const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "kinf-smc", version, about = "Barrier-function adaptive sliding mode experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config file and write trajectory and summary CSVs.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Sweep (rho, lambda) of one experiment's gain law.
    Sweep {
        config: PathBuf,
        /// Grid such as `rho=1,5,25;lambda=0.01,0.05`.
        #[arg(long)]
        grid: SweepGrid,
        /// Largest acceptable predicted band radius.
        #[arg(long)]
        target: f64,
        /// Largest acceptable peak |u|.
        #[arg(long)]
        budget: f64,
        /// Experiment to use as the base (default: the first one with a gain law).
        #[arg(long)]
        experiment: Option<String>,
    },
    /// Emit aligned plot data from a finished batch directory.
    Plot {
        dir: PathBuf,
        /// One of sliding, gain, control, escape.
        #[arg(long)]
        figure: Figure,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn print_summary(summary: &BatchSummary) {
    println!(
        "{:<12} {:<8} {:>12} {:>12} {:>12} {:>12}",
        "name", "status", "t_conv", "sigma", "sigma_meas", "tv"
    );
    for r in &summary.rows {
        let short = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.5e}"));
        println!(
            "{:<12} {:<8} {:>12} {:>12} {:>12} {:>12}",
            r.name,
            r.status.to_string(),
            short(r.t_conv),
            short(Some(r.sigma_target)),
            short(r.sigma_measured),
            short(r.total_variation),
        );
        for f in &r.failures {
            println!("    expectation failed: {f}");
        }
        if let Some(e) = &r.error {
            println!("    error: {e}");
        }
    }
}

fn run(cli: Cli) -> Result<u8, (u8, String)> {
    let config_err = |e: experiment::ConfigError| (EXIT_CONFIG, e.to_string());
    match cli.command {
        Command::Run { config, out, jobs } => {
            let specs = experiment::load_config(&config).map_err(config_err)?;
            let jobs = jobs.unwrap_or_else(|| {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            });
            let summary = experiment::run_batch(&specs, &out, jobs)
                .map_err(|e| (EXIT_CONFIG, format!("cannot write outputs: {e}")))?;
            print_summary(&summary);
            Ok(summary.exit_code() as u8)
        }
        Command::Sweep {
            config,
            grid,
            target,
            budget,
            experiment: name,
        } => {
            let specs = experiment::load_config(&config).map_err(config_err)?;
            let base = match &name {
                Some(n) => specs.iter().find(|s| &s.name == n),
                None => specs.iter().find(|s| s.controller.law().is_some()),
            }
            .ok_or_else(|| (EXIT_CONFIG, "no suitable base experiment in config".to_string()))?;
            let rows = experiment::sweep(base, &grid, target, budget).map_err(config_err)?;
            println!("rank,rho,lambda,bound,peak_u,t_conv,feasible,error");
            for (i, r) in rows.iter().enumerate() {
                let rank = if r.feasible { (i + 1).to_string() } else { String::new() };
                println!(
                    "{rank},{},{},{},{},{},{},{}",
                    r.rho,
                    r.lambda,
                    fmt_opt(r.bound),
                    fmt_opt(r.peak_u),
                    fmt_opt(r.t_conv),
                    r.feasible,
                    r.error.as_deref().unwrap_or("")
                );
            }
            Ok(if rows.iter().any(|r| r.error.is_some()) { 3 } else { 0 })
        }
        Command::Plot { dir, figure } => {
            let path = experiment::emit_plot_data(&dir, figure)
                .map_err(|e| (EXIT_CONFIG, e.to_string()))?;
            println!("{}", path.display());
            Ok(0)
        }
        Command::Validate { config } => {
            let specs = experiment::load_config(&config).map_err(config_err)?;
            for s in &specs {
                println!("ok  {}", s.name);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
