//! Run configuration and argument parsing helpers.

use std::path::PathBuf;

use manin_d5::surface::{DIRECT_MAX_B, NAIVE_MAX_B};
use manin_d5::torsor::TORSOR_MAX_B;
use manin_d5::Method;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    LemmaBase,
    #[value(name = "red-1")]
    #[serde(rename = "red-1")]
    Red1,
    LocalFactors,
    Densities,
    Predictor,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::LemmaBase,
        Suite::Red1,
        Suite::LocalFactors,
        Suite::Densities,
        Suite::Predictor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::LemmaBase => "lemma-base",
            Suite::Red1 => "red-1",
            Suite::LocalFactors => "local-factors",
            Suite::Densities => "densities",
            Suite::Predictor => "predictor",
        }
    }
}

/// Log-spaced heights `lo..=hi`, rounded to integers and deduplicated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: u64,
    pub hi: u64,
    pub points: usize,
}

impl Grid {
    pub fn heights(&self) -> Vec<u64> {
        if self.points == 1 || self.lo == self.hi {
            return vec![self.lo];
        }
        let (a, b) = ((self.lo as f64).ln(), (self.hi as f64).ln());
        let mut out: Vec<u64> = (0..self.points)
            .map(|i| {
                (a + (b - a) * i as f64 / (self.points - 1) as f64)
                    .exp()
                    .round() as u64
            })
            .map(|h| h.clamp(self.lo, self.hi))
            .collect();
        out.dedup();
        out
    }
}

/// Which heights a command runs at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heights {
    Single(u64),
    Grid(Grid),
}

impl Heights {
    pub fn list(&self) -> Vec<u64> {
        match self {
            Heights::Single(b) => vec![*b],
            Heights::Grid(g) => g.heights(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    Count {
        method: Method,
        heights: Heights,
    },
    Constants {
        abs_tol: f64,
        prime_cutoff: u64,
    },
    Verify {
        suites: Vec<Suite>,
        heights: Option<Heights>,
        exponent_cutoff: u32,
        pmax: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Zero out wall-clock fields so reruns are byte-identical.
    pub reproducible: bool,
}

pub const MAX_PRIME_CUTOFF: u64 = 10_000_000;
pub const MAX_EXPONENT_CUTOFF: u32 = 400;
pub const MAX_PMAX: u64 = 100_000;
pub const MAX_THREADS: usize = 1024;
const MIN_TOL: f64 = 1e-12;

fn envelope(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn method_max(method: Method) -> u64 {
    match method {
        Method::Naive => NAIVE_MAX_B,
        Method::Direct => DIRECT_MAX_B,
        Method::Torsor | Method::Degenerate => TORSOR_MAX_B,
    }
}

fn check_heights(heights: &Heights, max: u64, what: &str) -> Result<(), CliError> {
    let (lo, hi) = match heights {
        Heights::Single(b) => (*b, *b),
        Heights::Grid(g) => {
            if g.lo > g.hi || g.points == 0 {
                return Err(envelope(format!(
                    "grid {}:{}:{} is empty",
                    g.lo, g.hi, g.points
                )));
            }
            (g.lo, g.hi)
        }
    };
    if lo == 0 || hi > max {
        return Err(envelope(format!("{what} needs 1 <= B <= {max}")));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if !(MIN_TOL..1.0).contains(&tol) {
        return Err(envelope(format!("tolerance {tol} outside [{MIN_TOL}, 1)")));
    }
    Ok(())
}

impl RunConfig {
    /// Rejects parameters outside the envelopes of the underlying routines.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.threads > MAX_THREADS {
            return Err(envelope(format!("threads must be at most {MAX_THREADS}")));
        }
        match &self.command {
            Command::Count { method, heights } => {
                check_heights(heights, method_max(*method), &format!("method {method}"))
            }
            Command::Constants {
                abs_tol,
                prime_cutoff,
            } => {
                check_tol(*abs_tol)?;
                if !(10..=MAX_PRIME_CUTOFF).contains(prime_cutoff) {
                    return Err(envelope(format!(
                        "prime cutoff must lie in 10..={MAX_PRIME_CUTOFF}"
                    )));
                }
                Ok(())
            }
            Command::Verify {
                suites,
                heights,
                exponent_cutoff,
                pmax,
            } => {
                if suites.is_empty() {
                    return Err(envelope("no suite selected"));
                }
                if !(10..=MAX_EXPONENT_CUTOFF).contains(exponent_cutoff) {
                    return Err(envelope(format!(
                        "exponent cutoff must lie in 10..={MAX_EXPONENT_CUTOFF}"
                    )));
                }
                if !(2..=MAX_PMAX).contains(pmax) {
                    return Err(envelope(format!("pmax must lie in 2..={MAX_PMAX}")));
                }
                // Every height-driven suite runs the direct counter.
                if let Some(h) = heights {
                    check_heights(h, DIRECT_MAX_B, "verify")?;
                }
                Ok(())
            }
        }
    }
}

/// A height: a positive integer, also accepted in exponent form (`1e4`).
pub fn parse_height(s: &str) -> Result<u64, String> {
    if let Ok(b) = s.parse::<u64>() {
        return Ok(b);
    }
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a height"))?;
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("{s:?} is not a nonnegative integer"))
    }
}

/// `lo:hi[:points]`, default 9 points.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(format!("grid {s:?} must look like lo:hi[:points]"));
    }
    let lo = parse_height(parts[0])?;
    let hi = parse_height(parts[1])?;
    let points = match parts.get(2) {
        Some(p) => p
            .parse()
            .map_err(|_| format!("{p:?} is not a point count"))?,
        None => 9,
    };
    Ok(Grid { lo, hi, points })
}

pub fn parse_tol(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(format!(
            "tolerance must be a positive finite number, got {s:?}"
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<RunConfig> {
        let base = |command| RunConfig {
            command,
            threads: 4,
            out: Some(PathBuf::from("/tmp/x.json")),
            format: Format::Csv,
            reproducible: true,
        };
        vec![
            base(Command::Count {
                method: Method::Torsor,
                heights: Heights::Grid(Grid {
                    lo: 1_000,
                    hi: 100_000,
                    points: 9,
                }),
            }),
            base(Command::Constants {
                abs_tol: 0.1 + 0.2,
                prime_cutoff: 100_000,
            }),
            base(Command::Verify {
                suites: Suite::ALL.to_vec(),
                heights: Some(Heights::Single(1_000)),
                exponent_cutoff: 160,
                pmax: 100,
            }),
        ]
    }

    #[test]
    fn config_round_trips_losslessly() {
        for cfg in sample() {
            let json = serde_json::to_string(&cfg).unwrap();
            let back: RunConfig = serde_json::from_str(&json).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(serde_json::to_string(&back).unwrap(), json);
        }
    }

    #[test]
    fn heights_and_grids_parse() {
        assert_eq!(parse_height("1e4"), Ok(10_000));
        assert_eq!(parse_height("250"), Ok(250));
        assert!(parse_height("2.5").is_err());
        assert!(parse_height("-3").is_err());
        let g = parse_grid("1e3:1e5").unwrap();
        assert_eq!(
            g,
            Grid {
                lo: 1_000,
                hi: 100_000,
                points: 9
            }
        );
        let hs = g.heights();
        assert_eq!((hs[0], *hs.last().unwrap(), hs.len()), (1_000, 100_000, 9));
        assert!(hs.windows(2).all(|w| w[0] < w[1]));
        assert!(parse_grid("10").is_err());
        assert_eq!(parse_grid("5:5:3").unwrap().heights(), vec![5]);
    }

    #[test]
    fn envelopes_are_enforced() {
        let count = |method, b| RunConfig {
            command: Command::Count {
                method,
                heights: Heights::Single(b),
            },
            threads: 0,
            out: None,
            format: Format::Json,
            reproducible: false,
        };
        assert!(count(Method::Naive, 0).validate().is_err());
        assert!(count(Method::Naive, 81).validate().is_err());
        assert!(count(Method::Naive, 80).validate().is_ok());
        assert!(count(Method::Direct, DIRECT_MAX_B + 1).validate().is_err());
        assert!(parse_tol("abc").is_err());
        assert!(parse_tol("-1").is_err());
        let mut constants = count(Method::Torsor, 1);
        constants.command = Command::Constants {
            abs_tol: 1e-15,
            prime_cutoff: 1_000,
        };
        assert!(constants.validate().is_err());
    }
}
