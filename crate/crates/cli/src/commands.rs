//! The `count`, `constants` and `verify` commands.

use manin_d5::asymptotics::predictor_grid;
use manin_d5::constants::{
    constants_report, largest_feasible_exponent, omega_p_bruteforce, primes_up_to, ConstantsReport,
};
use manin_d5::dirichlet::{e2_spec, g12_local, local_factor_bruteforce, local_factor_closed};
use manin_d5::surface::{count_degenerate, count_direct, count_naive, count_u};
use manin_d5::torsor::count_torsor;
use manin_d5::{CountRecord, Method};
use serde::Serialize;

use crate::config::{Format, Grid, Heights, Suite};
use crate::report::{Cell, Sink};
use crate::CliError;

const DENSITY_PRIMES: [u64; 3] = [2, 3, 5];

pub fn count(
    method: Method,
    heights: &Heights,
    threads: usize,
    reproducible: bool,
) -> Result<Vec<CountRecord>, CliError> {
    heights
        .list()
        .into_iter()
        .map(|b| {
            let mut record = match method {
                Method::Naive => count_naive(b)?,
                Method::Direct => count_direct(b, threads)?,
                Method::Torsor => count_torsor(b, threads)?,
                Method::Degenerate => count_degenerate(b)?,
            };
            if reproducible {
                record.elapsed_ms = 0;
            }
            Ok(record)
        })
        .collect()
}

pub fn write_counts(
    sink: &mut Sink,
    format: Format,
    records: &[CountRecord],
) -> Result<(), CliError> {
    match format {
        Format::Json => records.iter().try_for_each(|r| sink.json_line(r)),
        Format::Csv => {
            let rows: Vec<Vec<Cell>> = records
                .iter()
                .map(|r| {
                    vec![
                        r.b.into(),
                        r.count.into(),
                        r.method.to_string().into(),
                        r.elapsed_ms.into(),
                    ]
                })
                .collect();
            sink.csv(&["B", "count", "method", "elapsed_ms"], &rows)
        }
    }
}

/// Densities at every feasible `(p, r)` for `p` in 2, 3, 5.
fn density_pairs() -> Vec<(u64, u32)> {
    DENSITY_PRIMES
        .iter()
        .flat_map(|&p| (1..=largest_feasible_exponent(p)).map(move |r| (p, r)))
        .collect()
}

pub fn constants(abs_tol: f64, prime_cutoff: u64) -> Result<ConstantsReport, CliError> {
    Ok(constants_report(abs_tol, prime_cutoff, &density_pairs())?)
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    command: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_constants(
    sink: &mut Sink,
    format: Format,
    report: &ConstantsReport,
) -> Result<(), CliError> {
    match format {
        Format::Json => sink.json_line(&Tagged {
            command: "constants",
            body: report,
        }),
        Format::Csv => {
            let est = |name: &str, v: f64, e: f64| vec![name.into(), v.into(), e.into()];
            let mut rows = vec![
                vec![
                    "alpha".into(),
                    report.alpha.to_string().into(),
                    Cell::Text(String::new()),
                ],
                vec![
                    "simplex_volume".into(),
                    report.simplex_volume.to_string().into(),
                    Cell::Text(String::new()),
                ],
                vec![
                    "anticanonical_degree".into(),
                    Cell::Int(report.anticanonical_degree as i128),
                    Cell::Text(String::new()),
                ],
                vec![
                    "lattice_ok".into(),
                    report.lattice_ok.into(),
                    Cell::Text(String::new()),
                ],
                est(
                    "tau_infinity",
                    report.tau_infinity.value,
                    report.tau_infinity.error,
                ),
                est(
                    "omega_infinity_plus",
                    report.omega_infinity_plus.value,
                    report.omega_infinity_plus.error,
                ),
                est(
                    "omega_infinity_minus",
                    report.omega_infinity_minus.value,
                    report.omega_infinity_minus.error,
                ),
                est("tau", report.tau.value, report.tau.tail_bound),
                vec![
                    "prime_cutoff".into(),
                    report.prime_cutoff.into(),
                    Cell::Text(String::new()),
                ],
                est(
                    "leading_constant",
                    report.leading_constant.value,
                    report.leading_constant.error,
                ),
            ];
            for d in &report.omega_p {
                rows.push(vec![
                    format!("omega_p[p={},r={}]", d.p, d.r).into(),
                    d.scaled.into(),
                    d.relative_deviation.into(),
                ]);
            }
            sink.csv(&["quantity", "value", "error"], &rows)
        }
    }
}

/// One named verification outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub check: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn new(
        suite: Suite,
        check: impl Into<String>,
        passed: bool,
        measured: f64,
        threshold: f64,
        detail: String,
    ) -> Self {
        Check {
            suite: suite.name(),
            check: check.into(),
            passed,
            measured,
            threshold,
            detail,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyParams {
    pub threads: usize,
    pub exponent_cutoff: u32,
    pub pmax: u64,
}

pub fn verify(
    suites: &[Suite],
    heights: Option<&Heights>,
    params: VerifyParams,
) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    for &suite in suites {
        let batch = match suite {
            Suite::LemmaBase => lemma_base(heights, params.threads)?,
            Suite::Red1 => red_one(heights, params.threads)?,
            Suite::LocalFactors => local_factors(params.pmax, params.exponent_cutoff)?,
            Suite::Densities => densities()?,
            Suite::Predictor => predictor(heights, params.threads)?,
        };
        checks.extend(batch);
    }
    Ok(checks)
}

fn lemma_base(heights: Option<&Heights>, threads: usize) -> Result<Vec<Check>, CliError> {
    let list = heights.map_or_else(|| vec![10, 100, 1_000, 10_000], Heights::list);
    list.into_iter()
        .map(|b| {
            let t = count_torsor(b, threads)?.count;
            let d = count_direct(b, threads)?.count;
            Ok(Check::new(
                Suite::LemmaBase,
                format!("torsor=direct B={b}"),
                t == d,
                t as f64,
                d as f64,
                format!("torsor {t}, direct {d}"),
            ))
        })
        .collect()
}

fn red_one(heights: Option<&Heights>, threads: usize) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let mismatch = (1..=60).find(|&b| {
        let naive = count_naive(b).map(|r| r.count);
        let split = count_direct(b, threads)
            .and_then(|d| count_degenerate(b).map(|g| 2 * d.count + g.count));
        naive.ok() != split.ok()
    });
    checks.push(Check::new(
        Suite::Red1,
        "naive=2*direct+degenerate B<=60",
        mismatch.is_none(),
        mismatch.unwrap_or(0) as f64,
        0.0,
        mismatch.map_or_else(
            || "all agree".into(),
            |b| format!("first mismatch at B={b}"),
        ),
    ));
    let list = heights.map_or_else(|| vec![100, 1_000, 10_000, 100_000], Heights::list);
    for b in list {
        let u = count_u(b, Method::Direct, threads)?.count as f64;
        let d = count_direct(b, threads)?.count as f64;
        let bf = b as f64;
        let dev =
            (u - 2.0 * d - 12.0 / std::f64::consts::PI.powi(2) * bf).abs() / bf.powf(2.0 / 3.0);
        checks.push(Check::new(
            Suite::Red1,
            format!("degenerate shape B={b}"),
            dev <= 10.0,
            dev,
            10.0,
            format!("|N_U - 2N - 12B/pi^2| / B^(2/3) = {dev:.6}"),
        ));
    }
    Ok(checks)
}

fn local_factors(pmax: u64, exponent_cutoff: u32) -> Result<Vec<Check>, CliError> {
    let primes = primes_up_to(pmax);
    let mut closed_err: f64 = 0.0;
    let mut closing_err: f64 = 0.0;
    for &p in &primes {
        let x = 1.0 / p as f64;
        closed_err = closed_err.max((local_factor_closed(p, 0.0)? - (1.0 + 6.0 * x + x * x)).abs());
        let product = e2_spec().local(p, 1.0) * g12_local(p)?;
        closing_err =
            closing_err.max((product - (1.0 - x).powi(6) * (1.0 + 6.0 * x + x * x)).abs());
    }
    let mut checks = vec![
        Check::new(
            Suite::LocalFactors,
            format!("closed form at s=0, p<={pmax}"),
            closed_err <= 1e-12,
            closed_err,
            1e-12,
            format!("{} primes", primes.len()),
        ),
        Check::new(
            Suite::LocalFactors,
            format!("closing identity, p<={pmax}"),
            closing_err <= 1e-10,
            closing_err,
            1e-10,
            format!("{} primes", primes.len()),
        ),
    ];
    for p in [2u64, 3, 5, 7] {
        for s in [0.1, 0.25, 0.5] {
            let (series, tail) = local_factor_bruteforce(p, s, exponent_cutoff)?;
            let gap = local_factor_closed(p, s)? - series;
            checks.push(Check::new(
                Suite::LocalFactors,
                format!("series within tail p={p} s={s}"),
                gap.abs() <= tail,
                gap.abs(),
                tail,
                format!("exponent cutoff {exponent_cutoff}"),
            ));
        }
    }
    Ok(checks)
}

fn densities() -> Result<Vec<Check>, CliError> {
    DENSITY_PRIMES
        .iter()
        .map(|&p| {
            let r_max = largest_feasible_exponent(p);
            let devs = (1..=r_max)
                .map(|r| Ok(omega_p_bruteforce(p, r)?.relative_deviation))
                .collect::<Result<Vec<f64>, CliError>>()?;
            let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
            let last = *devs.last().expect("r_max >= 1");
            let listed: Vec<String> = devs.iter().map(|d| format!("{d:.6}")).collect();
            Ok(Check::new(
                Suite::Densities,
                format!("p={p} r<={r_max}"),
                decreasing && last < 0.10,
                last,
                0.10,
                format!(
                    "relative deviations [{}]; strictly decreasing: {decreasing}",
                    listed.join(", ")
                ),
            ))
        })
        .collect()
}

fn predictor(heights: Option<&Heights>, threads: usize) -> Result<Vec<Check>, CliError> {
    let default = Heights::Grid(Grid {
        lo: 1_000,
        hi: 100_000,
        points: 11,
    });
    let list = heights.unwrap_or(&default).list();
    let (fit, reports) = predictor_grid(&list, threads)?;
    let exponent = reports
        .first()
        .map_or(f64::NAN, |r| r.residual_exponent_estimate);
    Ok(vec![
        Check::new(
            Suite::Predictor,
            format!("grid size, {} points", list.len()),
            list.len() >= 8,
            list.len() as f64,
            8.0,
            format!("B from {} to {}", list[0], list[list.len() - 1]),
        ),
        Check::new(
            Suite::Predictor,
            "residual exponent",
            exponent <= 0.9,
            exponent,
            0.9,
            format!("beta_hat {:.9}", fit.beta_hat),
        ),
        Check::new(
            Suite::Predictor,
            "window drift",
            fit.window_drift < 0.10,
            fit.window_drift,
            0.10,
            format!("beta_hat {:.9}", fit.beta_hat),
        ),
    ])
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    command: &'static str,
    passed: bool,
    checks: &'a [Check],
}

pub fn write_checks(sink: &mut Sink, format: Format, checks: &[Check]) -> Result<(), CliError> {
    match format {
        Format::Json => sink.json_line(&VerifySummary {
            command: "verify",
            passed: checks.iter().all(|c| c.passed),
            checks,
        }),
        Format::Csv => {
            let rows: Vec<Vec<Cell>> = checks
                .iter()
                .map(|c| {
                    vec![
                        c.suite.into(),
                        c.check.clone().into(),
                        c.passed.into(),
                        c.measured.into(),
                        c.threshold.into(),
                        c.detail.clone().into(),
                    ]
                })
                .collect();
            sink.csv(
                &[
                    "suite",
                    "check",
                    "passed",
                    "measured",
                    "threshold",
                    "detail",
                ],
                &rows,
            )
        }
    }
}
