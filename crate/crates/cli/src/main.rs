use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fogswipt_cli::config::{parse_modes, parse_seeds, ConfigFile, RunSpec};
use fogswipt_cli::experiment::{self, ResultRow};
use fogswipt_cli::output;

#[derive(Parser)]
#[command(name = "fogswipt", version, about = "Minimum-energy SWIPT fog computing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed offloading time, every configured mode.
    Fot(Common),
    /// Optimized offloading time.
    Oot(Common),
    /// FOT modes versus the SINR target.
    SweepGamma(Common),
    /// FOT modes versus the task size; reports the offload/local crossover.
    SweepTask(Common),
    /// Per-iteration trace (seed, k, q, eps_tilde) of the OOT design.
    Convergence(Common),
    /// FOT at each t_u fraction and OOT versus the block time.
    SweepTime(Common),
    /// Wall time of FOT and OOT versus the number of users.
    Timing(Common),
}

#[derive(Args)]
struct Common {
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma list and/or half-open ranges, e.g. `0..20` or `1,4,9`.
    #[arg(long)]
    seeds: Option<String>,
    /// Offloading time as a fraction of the block time.
    #[arg(long)]
    tu_frac: Option<f64>,
    /// Comma list of partial, local_only, offload_only.
    #[arg(long)]
    modes: Option<String>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Exit successfully even when some cells did not converge.
    #[arg(long)]
    allow_infeasible: bool,
}

impl Common {
    fn spec(&self) -> Result<RunSpec> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let mut spec = RunSpec::from_file(&file)?;
        if let Some(s) = self.seed {
            spec.seeds = vec![s];
        }
        if let Some(s) = &self.seeds {
            spec.seeds = parse_seeds(s)?;
        }
        if let Some(f) = self.tu_frac {
            spec.tu_fracs = vec![f];
        }
        if let Some(m) = &self.modes {
            spec.modes = parse_modes(&m.split(',').collect::<Vec<_>>())?;
        }
        if let Some(j) = self.jobs {
            spec.jobs = j;
        }
        spec.check()?;
        Ok(spec)
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (common, rows) = match &cli.command {
        Command::Fot(c) => (c, experiment::run_fot(&c.spec()?)?),
        Command::Oot(c) => (c, experiment::run_oot(&c.spec()?)?),
        Command::SweepGamma(c) => (c, experiment::run_gamma_sweep(&c.spec()?)?),
        Command::SweepTask(c) => {
            let rows = experiment::run_task_sweep(&c.spec()?)?;
            for x in experiment::crossover_summary(&rows) {
                let at = x.crossover_bits.map_or("none".to_string(), |d| d.to_string());
                eprintln!(
                    "seed {}: offload_only {} local_only at the smallest task, {} sign change(s), first at {at} bits",
                    x.seed,
                    if x.first_sign < 0 { "below" } else { "above" },
                    x.sign_changes
                );
            }
            (c, rows)
        }
        Command::Convergence(c) => {
            let (trace, rows) = experiment::run_convergence(&c.spec()?)?;
            output::write_convergence(c.writer()?, &trace)?;
            for r in &rows {
                eprintln!("seed {}: {} outer iterations, converged {}", r.seed, r.iterations, r.converged);
            }
            return Ok(all_converged(&rows) || c.allow_infeasible);
        }
        Command::SweepTime(c) => (c, experiment::run_time_sweep(&c.spec()?)?),
        Command::Timing(c) => {
            let rows = experiment::run_timing(&c.spec()?)?;
            for (n, design, t) in experiment::timing_medians(&rows) {
                eprintln!("{n} users, {design}: median {t:.4} s");
            }
            (c, rows)
        }
    };
    output::write_results(common.writer()?, &rows)?;
    Ok(all_converged(&rows) || common.allow_infeasible)
}

fn all_converged(rows: &[ResultRow]) -> bool {
    let bad = rows.iter().filter(|r| !r.converged).count();
    if bad > 0 {
        eprintln!("{bad} of {} cells did not converge", rows.len());
    }
    bad == 0
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
