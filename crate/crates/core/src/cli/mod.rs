//! `mv-reinsure` command-line front end.
//!
//! Exit codes: 0 success or PASS, 1 verification FAIL, 2 any input or
//! runtime error.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::model::{load_config, Config};

#[derive(Debug, Parser)]
#[command(name = "mv-reinsure", version, about = "Equilibrium mean-variance reinsurance and investment")]
pub struct Cli {
    /// JSON model configuration.
    #[arg(long, global = true, value_name = "PATH", conflicts_with = "example")]
    pub config: Option<PathBuf>,
    /// Built-in configuration when --config is absent.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub example: Option<u8>,
    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Master seed for simulation commands.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; output does not depend on it.
    #[arg(long, global = true, env = "MV_REINSURE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium strategy at the given times.
    Eval(EvalArgs),
    /// Value-function table.
    Table(GridArgs),
    /// Monte Carlo estimate of the objective under a strategy.
    Simulate(SimulateArgs),
    /// Extended-HJB certification of the closed forms.
    Verify(GridArgs),
    /// Perturbation test of the equilibrium condition.
    Perturb(PerturbArgs),
    /// Excess-loss against proportional reinsurance.
    Compare(GridArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Comma-separated times; default 10 points over [0, T].
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Parameter to sweep: r, mu, sigma1, sigma2, rho, theta, eta, gamma, T.
    #[arg(long, requires = "over")]
    pub vary: Option<String>,
    #[arg(long, value_delimiter = ',', requires = "vary")]
    pub over: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Comma-separated times; default 5 to 7 points over [0, T] per command.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Comma-separated surplus values.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub xs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyChoice {
    Equilibrium,
    Proportional,
    ExpUtility,
    Full,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpFormat {
    Binary,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = StrategyChoice::Equilibrium)]
    pub strategy: StrategyChoice,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Initial surplus; default from the configuration.
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// Initial time; default from the configuration.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Also write the terminal samples here.
    #[arg(long, value_name = "PATH")]
    pub dump: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DumpFormat::Binary)]
    pub dump_format: DumpFormat,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.25, 0.1])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
}

/// Rendered command output.
pub struct Output {
    pub text: String,
    /// `Some(false)` maps to exit code 1.
    pub pass: Option<bool>,
}

pub fn resolve_config(cli: &Cli) -> crate::Result<Config> {
    match (&cli.config, cli.example) {
        (Some(path), _) => load_config(path),
        (None, Some(1)) => Ok(Config::example1()),
        (None, Some(_)) => Ok(Config::example2()),
        (None, None) => Ok(match cli.command {
            Command::Eval(_) | Command::Table(_) | Command::Verify(_) => Config::example1(),
            _ => Config::example2(),
        }),
    }
}

pub fn execute(cli: &Cli) -> crate::Result<Output> {
    let cfg = resolve_config(cli)?;
    commands::dispatch(cli, &cfg)
}

/// Parses `args`, runs the command and writes its output.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let out = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &out.text),
        None => std::io::stdout().lock().write_all(out.text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match out.pass {
        Some(false) => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    }
}
