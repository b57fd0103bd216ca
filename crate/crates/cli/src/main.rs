//! `blockip`: solve, verify, generate and benchmark block-structured
//! integer programs.
//!
//! Exit codes: 0 ok, 1 internal error, 2 parse or parameter error,
//! 3 unsupported class or oracle budget exceeded, 4 infeasible,
//! 5 verification failure.

mod bench;
mod commands;
mod generate;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use blockip::solve::SolverChoice;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_UNSUPPORTED: u8 = 3;
pub const EXIT_INFEASIBLE: u8 = 4;
pub const EXIT_VERIFY: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "blockip", version, about = "Exact solvers for 4-block n-fold integer programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Ones,
    Nfold,
    Fourblock,
    Bruteforce,
}

impl From<SolverArg> for SolverChoice {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Auto => SolverChoice::Auto,
            SolverArg::Ones => SolverChoice::Ones,
            SolverArg::Nfold => SolverChoice::Nfold,
            SolverArg::Fourblock => SolverChoice::Fourblock,
            SolverArg::Bruteforce => SolverChoice::Bruteforce,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an instance; the solution goes to --out (or stdout), the run
    /// report to stderr.
    Solve(SolveArgs),
    /// Check a solution file against an instance.
    Verify {
        instance: PathBuf,
        solution: PathBuf,
    },
    /// Write a generated instance (and, for reductions, an answer sidecar).
    Generate(generate::GenerateArgs),
    /// Exhaustive optimum of a small instance.
    Oracle(OracleArgs),
    /// Time a solver suite.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: SolverArg,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Concurrent cell solves in the four-block solver.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Lattice points the brute-force oracle may visit.
    #[arg(long, default_value = "10000000")]
    pub budget: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub instance: PathBuf,
    #[arg(long, default_value = "10000000")]
    pub budget: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Solve(args) => commands::solve(&args),
        Command::Verify { instance, solution } => commands::verify(&instance, &solution),
        Command::Generate(args) => generate::run(&args),
        Command::Oracle(args) => commands::oracle(&args),
        Command::Bench(args) => bench::run(&args),
    };
    ExitCode::from(code)
}
