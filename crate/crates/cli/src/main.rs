use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod fixtures;
mod load;
mod report;

use report::{CliError, Report};

#[derive(Parser, Debug)]
#[command(
    name = "nmlogic",
    version,
    about = "Check preferential, size, interpolation and revision laws on finite structures"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for parallel checks.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Seed for sampled runs.
    #[arg(long, global = true, value_name = "S", default_value_t = 0)]
    pub seed: u64,
    /// Enumeration bound for oracles.
    #[arg(long, global = true, value_name = "B")]
    pub bound: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, short = 'o', global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check one rule or law on a structure file.
    Check {
        #[arg(long)]
        rule: String,
        #[arg(long, value_name = "FILE")]
        structure: PathBuf,
        /// Block split for product laws, e.g. "0|1,2".
        #[arg(long)]
        split: Option<String>,
    },
    /// Rebuild a built-in fixture and confirm its claims.
    Fixtures { name: FixtureName },
    /// Run an exhaustive oracle and stream one JSON record per structure.
    Oracle {
        kind: OracleName,
        /// Random tied tables per split (ghd only).
        #[arg(long, default_value_t = 4)]
        samples: usize,
    },
    /// Minimal elements of a set.
    Mu {
        #[arg(long, value_name = "FILE")]
        structure: PathBuf,
        /// Formula over the structure's language.
        #[arg(long, conflicts_with = "points")]
        set: Option<String>,
        /// Comma-separated point labels.
        #[arg(long)]
        points: Option<String>,
    },
    /// Solve an interpolation problem file.
    Interpolate {
        problem: PathBuf,
        /// Also search every J′ cylinder for an interpolant.
        #[arg(long)]
        search: bool,
    },
    /// Distance-based revision of a knowledge base.
    Revise {
        #[arg(long, value_name = "FILE")]
        kb: PathBuf,
        #[arg(long)]
        phi: String,
        #[arg(long, value_name = "FILE")]
        distance: PathBuf,
    },
    /// Parse a formula and list its models.
    Parse {
        formula: String,
        /// Comma-separated variables; defaults to the atoms in order of appearance.
        #[arg(long)]
        vars: Option<String>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum FixtureName {
    Mulmu1,
    Mulmu2,
    Mulmu3,
    RankedSuite,
    GhdSuite,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum OracleName {
    GhRep,
    BigSmall,
    Ghd,
}

fn run(cli: Cli) -> Result<Report, CliError> {
    let g = &cli.global;
    if let Some(n) = g.jobs {
        if n == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    match cli.command {
        Command::Check { rule, structure, split } => commands::check(&rule, &structure, split.as_deref()),
        Command::Fixtures { name } => fixtures::run(name),
        Command::Oracle { kind, samples } => commands::oracle(kind, g, samples),
        Command::Mu { structure, set, points } => commands::mu(&structure, set.as_deref(), points.as_deref()),
        Command::Interpolate { problem, search } => commands::interpolate(&problem, search),
        Command::Revise { kb, phi, distance } => commands::revise(&kb, &phi, &distance),
        Command::Parse { formula, vars } => commands::parse(&formula, vars.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let global = cli.global.clone();
    match run(cli).and_then(|r| r.emit(&global)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(2)
        }
    }
}
