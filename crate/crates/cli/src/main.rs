//! `manin-d5`: exact point counts, constants and verification suites for the
//! D5 quartic del Pezzo surface.
//!
//! Exit codes: 0 success, 1 a verification check failed (or an I/O error),
//! 2 invalid arguments or an envelope violation, 3 arithmetic overflow,
//! 4 numerical failure (quadrature or fit).

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manin_d5::Method;
use thiserror::Error;

use crate::commands::VerifyParams;
use crate::config::{
    parse_grid, parse_height, parse_tol, Command, Format, Grid, Heights, RunConfig, Suite,
};
use crate::report::Sink;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] manin_d5::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use manin_d5::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Envelope { .. } | E::InvalidInput(_)) => 2,
            CliError::Core(E::Overflow(_)) => 3,
            CliError::Core(E::Convergence(_) | E::IllConditioned(_)) => 4,
            CliError::Core(E::ThreadPool(_))
            | CliError::Io(_)
            | CliError::Csv(_)
            | CliError::Json(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "manin-d5", version = env!("MANIN_D5_BUILD_ID"), about = "Point counts and constants for the D5 quartic del Pezzo surface")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "MANIN_D5_THREADS", default_value_t = 0)]
    threads: usize,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Report elapsed_ms as 0 so repeated runs are byte-identical.
    #[arg(long, global = true)]
    reproducible: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Args)]
#[group(required = false, multiple = false)]
struct HeightArgs {
    /// Height bound, e.g. 10000 or 1e4.
    #[arg(long = "B", value_parser = parse_height)]
    b: Option<u64>,
    /// Log-spaced heights lo:hi[:points] (default 9 points).
    #[arg(long, value_parser = parse_grid)]
    grid: Option<Grid>,
}

impl HeightArgs {
    fn heights(&self) -> Option<Heights> {
        match (self.b, self.grid) {
            (Some(b), _) => Some(Heights::Single(b)),
            (None, Some(g)) => Some(Heights::Grid(g)),
            (None, None) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Naive,
    Direct,
    Torsor,
    Degenerate,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Naive => Method::Naive,
            MethodArg::Direct => Method::Direct,
            MethodArg::Torsor => Method::Torsor,
            MethodArg::Degenerate => Method::Degenerate,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Count points of height at most B. naive gives N_U(B); direct and
    /// torsor give the all-nonzero count N(Q1,Q2;B); degenerate gives the
    /// points with a zero coordinate.
    Count {
        #[arg(long, value_enum, default_value_t = MethodArg::Torsor)]
        method: MethodArg,
        #[command(flatten)]
        heights: HeightArgs,
    },
    /// Report alpha, tau_inf, the Euler product tau and the leading constant.
    Constants {
        #[arg(long, value_parser = parse_tol, default_value = "1e-9")]
        tol: f64,
        #[arg(long = "prime-cutoff", value_parser = parse_height, default_value = "100000")]
        prime_cutoff: u64,
    },
    /// Run named verification suites; exits 1 if any check fails.
    Verify {
        /// Suites to run (repeatable); all of them by default.
        #[arg(long, value_enum)]
        suite: Vec<Suite>,
        #[command(flatten)]
        heights: HeightArgs,
        /// Largest prime for the local-factor identities.
        #[arg(long, value_parser = parse_height, default_value = "100")]
        pmax: u64,
        /// Weighted-degree cutoff of the brute-force local series.
        #[arg(long = "exponent-cutoff", default_value_t = 160)]
        exponent_cutoff: u32,
    },
}

impl Cli {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let command = match self.command {
            Sub::Count { method, heights } => Command::Count {
                method: method.into(),
                heights: heights
                    .heights()
                    .ok_or_else(|| CliError::Config("count needs --B or --grid".into()))?,
            },
            Sub::Constants { tol, prime_cutoff } => Command::Constants {
                abs_tol: tol,
                prime_cutoff,
            },
            Sub::Verify {
                suite,
                heights,
                pmax,
                exponent_cutoff,
            } => Command::Verify {
                suites: if suite.is_empty() {
                    Suite::ALL.to_vec()
                } else {
                    suite
                },
                heights: heights.heights(),
                exponent_cutoff,
                pmax,
            },
        };
        let cfg = RunConfig {
            command,
            threads: self.threads,
            out: self.out,
            format: self.format,
            reproducible: self.reproducible,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the command; `Ok(false)` means a verification check failed.
fn run(cfg: &RunConfig) -> Result<bool, CliError> {
    let mut passed = true;
    // Compute before opening the sink so failures leave no partial file.
    let mut sink;
    match &cfg.command {
        Command::Count { method, heights } => {
            let records = commands::count(*method, heights, cfg.threads, cfg.reproducible)?;
            sink = Sink::open(cfg.out.as_deref())?;
            commands::write_counts(&mut sink, cfg.format, &records)?;
        }
        Command::Constants {
            abs_tol,
            prime_cutoff,
        } => {
            let report = commands::constants(*abs_tol, *prime_cutoff)?;
            sink = Sink::open(cfg.out.as_deref())?;
            commands::write_constants(&mut sink, cfg.format, &report)?;
        }
        Command::Verify {
            suites,
            heights,
            exponent_cutoff,
            pmax,
        } => {
            let params = VerifyParams {
                threads: cfg.threads,
                exponent_cutoff: *exponent_cutoff,
                pmax: *pmax,
            };
            let checks = commands::verify(suites, heights.as_ref(), params)?;
            passed = checks.iter().all(|c| c.passed);
            sink = Sink::open(cfg.out.as_deref())?;
            commands::write_checks(&mut sink, cfg.format, &checks)?;
            for c in checks.iter().filter(|c| !c.passed) {
                eprintln!("FAIL {} / {}: {}", c.suite, c.check, c.detail);
            }
        }
    }
    sink.finish()?;
    Ok(passed)
}

fn main() -> ExitCode {
    let result = Cli::try_parse()
        .map_err(|e| e.exit())
        .and_then(Cli::into_config)
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("manin-d5: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kinds() {
        use manin_d5::Error as E;
        let code = |e: E| CliError::from(e).exit_code();
        assert_eq!(code(E::InvalidInput("x".into())), 2);
        assert_eq!(code(E::Overflow("lift")), 3);
        assert_eq!(code(E::Convergence("x".into())), 4);
        assert_eq!(code(E::IllConditioned("x".into())), 4);
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
