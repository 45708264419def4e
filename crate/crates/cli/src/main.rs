use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{ensure, Result};
use clap::{Args, Parser, Subcommand};
use log::error;
use rhomctdh::check::run_checks;
use rhomctdh::{load_config, run_experiment, run_ground_state, write_outputs, Overrides};
use rhomctdh_core::experiment::ExperimentConfig;

/// Density-operator MCTDH for a particle scattering off a trapped pair,
/// with an absorbing boundary.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Relax the (N-1)-particle ground state and propagate it alone with the absorber.
    Relax(RunArgs),
    /// Run the full scattering experiment.
    Run(RunArgs),
    /// Run the invariant suite on small instances.
    Check {
        /// Size of the complete SPF set (and grid) for the oracle comparison.
        #[arg(long, default_value_t = 8)]
        seed_basis: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file; omitted keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    /// Switch the absorber off (closed-system control run).
    #[arg(long)]
    gamma_off: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        let overrides = Overrides { tau: self.tau, t_final: self.t_final, gamma_off: self.gamma_off, output_dir: self.out.clone() };
        overrides.apply(&mut config)?;
        Ok(config)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Relax(args) => {
            let config = args.config()?;
            let out = run_ground_state(&config)?;
            write_outputs(&out, config.output_dir.as_ref())?;
            let last = out.records.last().expect("at least the initial record");
            println!("relaxed energy {:.10}", out.relaxed_energy);
            println!("absorbed probability at t = {}: {:.3e}", last.t, 1.0 - last.trace);
        }
        Command::Run(args) => {
            let config = args.config()?;
            let out = run_experiment(&config)?;
            write_outputs(&out, config.output_dir.as_ref())?;
            let last = out.records.last().expect("at least the initial record");
            println!("t = {}: p = {:?}", last.t, last.probabilities);
            println!("energy {:.10}, sigma_min {:.3e}", last.energy, last.sigma_min);
        }
        Command::Check { seed_basis } => {
            ensure!(seed_basis >= 2 && seed_basis.is_power_of_two(), "--seed-basis must be a power of two >= 2");
            let outcomes = run_checks(seed_basis)?;
            for c in &outcomes {
                let verdict = if c.passed() { "PASS" } else { "FAIL" };
                println!("{verdict} {}: {:.3e} (< {:.0e})", c.name, c.value, c.tolerance);
            }
            let failed = outcomes.iter().filter(|c| !c.passed()).count();
            ensure!(failed == 0, "{failed} check(s) failed");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
