//! `nvsim`: strong-error, limit-law, source-term and MLMC studies of the
//! Ninomiya-Victoir scheme.
//!
//! Exit codes: 0 success, 1 usage, 2 numerical failure, 3 I/O.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CommandKind, Format, Layer, RunConfig};
use error::CliError;
use output::Sink;

#[derive(Debug, Parser)]
#[command(
    name = "nvsim",
    version,
    about = "Ninomiya-Victoir SDE simulation studies"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Overwrite outputs written under a different config.
    #[arg(long, global = true)]
    force: bool,
    /// Monte Carlo paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Euler steps of the limit-SDE simulator.
    #[arg(long, global = true)]
    nfine: Option<usize>,
    /// TOML file with defaults; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the problem catalog.
    Problems,
    /// Compare Runge-Kutta flows against closed forms.
    FlowCheck {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Strong errors over a ladder of step counts and the fitted rate.
    Convergence {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        scheme: Option<String>,
        /// Comma-separated step counts.
        #[arg(long, value_delimiter = ',')]
        nladder: Option<Vec<usize>>,
        /// Moment order: errors are L^{2p}.
        #[arg(long)]
        p: Option<u32>,
        /// Reference refinement over the finest ladder entry.
        #[arg(long)]
        refine: Option<usize>,
    },
    /// Normalized NV error against the limiting error SDE.
    LimitLaw {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long = "N")]
        n_steps: Option<usize>,
        #[arg(long)]
        refine: Option<usize>,
    },
    /// Variance of the sign-weighted iterated integrals.
    SourceTerm {
        #[arg(long = "N")]
        n_steps: Option<usize>,
        #[arg(long)]
        j: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Multilevel Monte Carlo with per-level variance profile.
    Mlmc {
        #[arg(long)]
        problem: Option<String>,
        /// identity, coordK, norm2 or call(K).
        #[arg(long)]
        payoff: Option<String>,
        /// Finest level.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        paths_per_level: Option<usize>,
        /// Steps at level 0.
        #[arg(long)]
        n0: Option<usize>,
    },
}

impl Cli {
    fn layers(self) -> Result<(CommandKind, Layer, Layer, bool), CliError> {
        let g = self.global;
        let file = match &g.config {
            Some(path) => Layer::from_file(path)?,
            None => Layer::default(),
        };
        let mut flags = Layer {
            seed: g.seed,
            threads: g.threads,
            out: g.out,
            format: g.format,
            paths: g.paths,
            nfine: g.nfine,
            ..Layer::default()
        };
        let kind = match self.command {
            Command::Problems => CommandKind::Problems,
            Command::FlowCheck { problem, trials } => {
                flags.problem = problem;
                flags.trials = trials;
                CommandKind::FlowCheck
            }
            Command::Convergence {
                problem,
                scheme,
                nladder,
                p,
                refine,
            } => {
                flags.problem = problem;
                flags.scheme = scheme;
                flags.nladder = nladder;
                flags.p = p;
                flags.refine_factor = refine;
                CommandKind::Convergence
            }
            Command::LimitLaw {
                problem,
                n_steps,
                refine,
            } => {
                flags.problem = problem;
                flags.n_steps = n_steps;
                flags.refine_factor = refine;
                CommandKind::LimitLaw
            }
            Command::SourceTerm {
                n_steps,
                j,
                m,
                t,
                horizon,
            } => {
                flags.n_steps = n_steps;
                flags.j = j;
                flags.m = m;
                flags.t = t;
                flags.horizon = horizon;
                CommandKind::SourceTerm
            }
            Command::Mlmc {
                problem,
                payoff,
                levels,
                paths_per_level,
                n0,
            } => {
                flags.problem = problem;
                flags.payoff = payoff;
                flags.levels = levels;
                flags.paths_per_level = paths_per_level;
                flags.n0 = n0;
                CommandKind::Mlmc
            }
        };
        Ok((kind, flags, file, g.force))
    }
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let (kind, flags, file, force) = cli.layers()?;
    let cfg = RunConfig::resolve(kind, flags, file);
    let sink = Sink::new(&cfg, force);
    let (tables, summaries) = commands::stems(kind);
    sink.guard(&sink.targets(tables, summaries))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| {
            CliError::Usage(format!("cannot start {} worker threads: {e}", cfg.threads))
        })?;
    let mut text = pool.install(|| commands::run(&cfg, &sink))?;
    text.push_str(&format!(
        "outputs in {} (config {})\n",
        cfg.out.display(),
        sink.hash()
    ));
    Ok(text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
