use std::path::PathBuf;
use std::process::ExitCode;

use cardiodg::app::{self, ConvergenceOutput, RunConfig};
use cardiodg::error::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cardiodg",
    version,
    about = "High-order DG solver for cardiac electrophysiology"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a time-dependent simulation and write snapshots and a summary.
    Solve(RunArgs),
    /// Run a manufactured-solution convergence sweep.
    Convergence(RunArgs),
    /// Validate a configuration file without running it.
    Check { config: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot stride in steps (overrides the configured output times).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    stride: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = RunConfig::from_path(&self.config)?;
        if let Some(s) = self.stride {
            cfg.output.stride = s as usize;
            cfg.output.snapshot_times = None;
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        Ok((cfg, out))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Check { config } => {
            let cfg = RunConfig::from_path(&config)?;
            println!(
                "ok: {} {:?}, p={}, sigma={}, {} steps",
                cfg.model,
                cfg.scenario,
                cfg.p,
                cfg.level,
                cfg.params.n_steps()
            );
        }
        Command::Solve(args) => {
            let (cfg, out) = args.load()?;
            let s = app::solve(&cfg, &out)?;
            println!("{} steps, {} GMRES iterations", s.steps, s.total_iterations);
            if let Some(last) = s.rows.last() {
                println!("final Vm range [{:.4e}, {:.4e}]", last.vm_min, last.vm_max);
            }
            if let Some(e) = s.final_errors {
                println!(
                    "errors: Linf {:.4e} L2 {:.4e} H1 {:.4e} DG {:.4e}",
                    e.linf, e.l2, e.h1, e.dg
                );
            }
            println!("output written to {}", out.display());
        }
        Command::Convergence(args) => {
            let (cfg, out) = args.load()?;
            let (table, path) = app::run_convergence(&cfg, &out)?;
            match table {
                ConvergenceOutput::H(rows) => print!("{}", app::csv::render_convergence_csv(&rows)),
                ConvergenceOutput::P(rows) => print!("{}", app::csv::render_degree_csv(&rows)),
            }
            println!("table written to {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // usage errors count as configuration errors; clap would exit with 2
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(app::exit_code(&e) as u8)
        }
    }
}
