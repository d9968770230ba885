use std::path::PathBuf;
use std::process::ExitCode;

use cgmem_cli::config::Experiment;
use cgmem_cli::{load_config, resume, run, write_plot_template, CliError, LoadedConfig, Outcome};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cgmem", version, about = "Heat conduction with memory and dynamic boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Robustness sweep over a list of eps values.
    SweepEps {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and validate a config, printing the kernel and gate reports.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Continue a trajectory run from a checkpoint.
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a matplotlib script for the CSV outputs.
    PlotTemplate {
        #[arg(long)]
        out: PathBuf,
    },
}

fn print_reports(loaded: &LoadedConfig) {
    println!("config hash {}", loaded.hash);
    for c in &loaded.kernel_report.checks {
        println!("kernel {:<18} {} (margin {:.3e})", c.name, if c.passed { "ok" } else { "FAILED" }, c.worst_margin);
    }
    match &loaded.gate {
        Some(g) => println!(
            "smallness gate {}: C_F = {:.6} vs omega / C = {:.6} (C = {:.6}), m0 = {:.6}, P0 = {}",
            if g.passed { "passes" } else { "fails" },
            g.c_f,
            g.threshold,
            g.c_embed,
            g.m0,
            g.p0.map_or("n/a".to_string(), |p| format!("{p:.6}"))
        ),
        None => println!("smallness gate not evaluated: alpha = beta = 0"),
    }
}

fn report(outcome: &Outcome) -> i32 {
    for a in &outcome.summary.assertions {
        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    println!("outputs in {}", outcome.out_dir.display());
    outcome.exit_code()
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut loaded = load_config(&config)?;
            if let Some(seed) = seed {
                loaded.config.seed = seed;
                loaded = LoadedConfig::from_config(loaded.config)?;
            }
            print_reports(&loaded);
            Ok(report(&run(&loaded, &out)?))
        }
        Command::SweepEps { config, eps, out } => {
            let mut loaded = load_config(&config)?;
            loaded.config.experiment = Experiment::Robustness;
            loaded.config.sweep.eps = eps;
            let loaded = LoadedConfig::from_config(loaded.config)?;
            print_reports(&loaded);
            Ok(report(&run(&loaded, &out)?))
        }
        Command::Validate { config } => {
            print_reports(&load_config(&config)?);
            Ok(0)
        }
        Command::Resume { checkpoint, out } => Ok(report(&resume(&checkpoint, &out)?)),
        Command::PlotTemplate { out } => {
            write_plot_template(&out)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
