use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jtprecoding::backhaul::{participation_probability, BackhaulParams, Deadline};
use jtprecoding::config::{apply_full_scale, ConfigFile};
use jtprecoding::montecarlo::{convergence_trace, sweep, SimConfig};
use jtprecoding::report::{write_sweep_csv, write_trace_csv};
use jtprecoding::selftest::{all_passed, run_selftest, SelftestOptions};
use jtprecoding::Result;

#[derive(Parser)]
#[command(name = "jtprecode", version, about = "Precoder simulations for joint transmission with unreliable backhaul")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep; CSV on stdout or --out.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// 10,000 realizations x 1,000,000 symbols.
        #[arg(long)]
        paper_scale: bool,
        /// Override a config key, e.g. --set snr_db=15. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Helper participation probability.
    Pb {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.5)]
        beta: f64,
        #[arg(long, default_value_t = 7.5)]
        t0: f64,
        #[arg(long, default_value_t = 11.0)]
        deadline: f64,
    },
    /// Mean max-MSE per SIP iteration.
    Trace {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        snr: f64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Golden-value checks; exit 0 iff all pass.
    Selftest {
        #[arg(long, hide = true)]
        gamma_tolerance: Option<f64>,
    },
}

fn load(config: Option<&Path>, overrides: &[String]) -> Result<SimConfig> {
    let mut file = match config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    for w in file.warnings() {
        eprintln!("warning: {w}");
    }
    for o in overrides {
        file.set(o)?;
    }
    file.to_sim_config()
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { config, out, workers, paper_scale, overrides } => {
            let mut cfg = load(config.as_deref(), &overrides)?;
            if paper_scale {
                apply_full_scale(&mut cfg);
            }
            let result = sweep(&cfg, workers)?;
            let mut w = output(out.as_deref())?;
            write_sweep_csv(&result, &mut w)?;
            w.flush()?;
        }
        Command::Pb { alpha, beta, t0, deadline } => {
            let p = participation_probability(&BackhaulParams::new(alpha, beta, t0)?, Deadline::new(deadline)?);
            println!("{p:.6}");
        }
        Command::Trace { config, snr, workers, overrides } => {
            let cfg = load(config.as_deref(), &overrides)?;
            let history = convergence_trace(&cfg, snr, workers)?;
            let mut w = output(None)?;
            write_trace_csv(&history, &mut w)?;
            w.flush()?;
        }
        Command::Selftest { gamma_tolerance } => {
            let mut opts = SelftestOptions::default();
            if let Some(t) = gamma_tolerance {
                opts.gamma_tolerance = t;
            }
            let checks = run_selftest(&opts);
            for c in &checks {
                println!("{} {:<32} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let ok = all_passed(&checks);
            println!("{}/{} checks passed", checks.iter().filter(|c| c.passed).count(), checks.len());
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
