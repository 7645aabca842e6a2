//! The twelve acceptance criteria. Each prints one PASS/FAIL line; the
//! process exits non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use manin_d5::asymptotics::{f, g, g11, predictor_grid, s_exact_vs_main};
use manin_d5::constants::{
    alpha_exact, largest_feasible_exponent, omega_infinity_parts, omega_p_bruteforce,
    simplex_volume, tau_infinity, verify_lattice, IntersectionLattice,
};
use manin_d5::dirichlet::{
    e1_spec, e2_spec, g12_local, local_factor_bruteforce, local_factor_closed, temple,
};
use manin_d5::quadrature::integrate;
use manin_d5::surface::{count_degenerate, count_direct, count_naive, count_u};
use manin_d5::torsor::{count_torsor, region_bounds};
use manin_d5::{constants::primes_up_to, Method};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn torsor_bijection() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for b in [10, 100, 1_000, 10_000] {
        let t = count_torsor(b, 0).unwrap().count;
        let d = count_direct(b, 0).unwrap().count;
        ok &= t == d;
        notes.push(format!("B={b}: {t}/{d}"));
    }
    (ok, notes.join(", "))
}

fn naive_oracle() -> Outcome {
    for b in 1..=60 {
        let naive = count_naive(b).unwrap().count;
        let split = 2 * count_direct(b, 0).unwrap().count + count_degenerate(b).unwrap().count;
        if naive != split {
            return (false, format!("B={b}: naive {naive} vs {split}"));
        }
    }
    (true, "B = 1..60 agree".into())
}

fn red_one_shape() -> Outcome {
    let mut worst: f64 = 0.0;
    for b in [100u64, 1_000, 10_000, 100_000] {
        let u = count_u(b, Method::Direct, 0).unwrap().count as f64;
        let d = count_direct(b, 0).unwrap().count as f64;
        let dev = (u - 2.0 * d - 12.0 / std::f64::consts::PI.powi(2) * b as f64).abs()
            / (b as f64).powf(2.0 / 3.0);
        worst = worst.max(dev);
    }
    (
        worst <= 10.0,
        format!("max normalized deviation {worst:.3}"),
    )
}

fn alpha() -> Outcome {
    let a = alpha_exact();
    let s = simplex_volume(&[6, 5, 3, 4, 2]);
    (
        a == Rational64::new(1, 345_600) && s == Rational64::new(1, 86_400),
        format!("alpha = {a}, simplex volume = {s}"),
    )
}

fn lattice() -> Outcome {
    let l = IntersectionLattice::d5();
    match verify_lattice(&l) {
        Ok(()) => (
            l.anticanonical_degree() == 4,
            format!("(-K)^2 = {}", l.anticanonical_degree()),
        ),
        Err(e) => (false, e.to_string()),
    }
}

fn local_densities() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [2u64, 3, 5] {
        let r_max = largest_feasible_exponent(p);
        let devs: Vec<f64> = (1..=r_max)
            .map(|r| omega_p_bruteforce(p, r).unwrap().relative_deviation)
            .collect();
        let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
        let last = *devs.last().unwrap();
        ok &= decreasing && last < 0.10;
        notes.push(format!(
            "p={p} r<={r_max} devs [{}]",
            devs.iter()
                .map(|d| format!("{d:.3}"))
                .collect::<Vec<_>>()
                .join(" ")
        ));
    }
    (ok, notes.join("; "))
}

fn local_factor_identity() -> Outcome {
    for p in primes_up_to(100) {
        let pf = p as f64;
        let closed = local_factor_closed(p, 0.0).unwrap();
        if (closed - (1.0 + 6.0 / pf + 1.0 / (pf * pf))).abs() > 1e-12 {
            return (false, format!("closed form at p={p}: {closed}"));
        }
    }
    let mut worst: f64 = 0.0;
    for p in [2u64, 3, 5, 7] {
        for s in [0.1, 0.25, 0.5] {
            let (series, tail) = local_factor_bruteforce(p, s, 160).unwrap();
            let gap = local_factor_closed(p, s).unwrap() - series;
            if gap < -1e-12 || gap > tail {
                return (
                    false,
                    format!("(p,s)=({p},{s}): gap {gap:.3e}, tail {tail:.3e}"),
                );
            }
            worst = worst.max(gap / tail.max(f64::MIN_POSITIVE));
        }
    }
    (
        true,
        format!("series gaps within tails (max gap/tail {worst:.3})"),
    )
}

fn closing_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in primes_up_to(100) {
        let x = 1.0 / p as f64;
        let product = e2_spec().local(p, 1.0) * g12_local(p).unwrap();
        let target = (1.0 - x).powi(6) * (1.0 + 6.0 * x + x * x);
        worst = worst.max((product - target).abs());
    }
    let e1 = e1_spec().local(2, 1.0);
    (
        worst <= 1e-10,
        format!("max |E2_p G12_p - target| = {worst:.2e}; E1_2(1) = {e1}"),
    )
}

/// Monte Carlo for `int_0^1 int_{-1}^{1/v} f`: `u` uniform on `[-1, 2]`
/// plus `u = 2/s^2` with `s` uniform on `(0, 1]` for the tail.
fn tau_monte_carlo(samples: u64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let v: f64 = rng.gen();
        let u = -1.0 + 3.0 * rng.gen::<f64>();
        let s: f64 = 1.0 - rng.gen::<f64>();
        let top = if v > 0.0 { 1.0 / v } else { f64::INFINITY };
        let mut x = if u <= top { 3.0 * f(u, v) } else { 0.0 };
        let ut = 2.0 / (s * s);
        if ut <= top {
            x += f(ut, v) * 4.0 / (s * s * s);
        }
        sum += x;
        sq += x * x;
    }
    let n = samples as f64;
    let mean = sum / n;
    (mean, ((sq / n - mean * mean) / n).sqrt())
}

fn tau_consistency() -> Outcome {
    let tol = 1e-9;
    let tau = tau_infinity(tol).unwrap();
    let (mc, se) = tau_monte_carlo(100_000_000, 20_240_601);
    let mc_ok = (tau.value - mc).abs() <= 3.0 * se;
    let (plus, minus) = omega_infinity_parts(tol).unwrap();
    let omega_gap = (plus.value + minus.value - 12.0 * tau.value).abs();
    let omega_ok = omega_gap <= 2.0 * (tol + 12.0 * tol);
    let vc = manin_d5::asymptotics::v_crossing();
    let gi = integrate(
        |w| 2.0 * w * g(w * w, 1e-13).unwrap(),
        0.0,
        vc.sqrt(),
        tol / 4.0,
    )
    .unwrap()
        + integrate(|v| g(v, 1e-13).unwrap(), vc, 1.0, tol / 4.0).unwrap();
    let g_gap = (gi.value - tau.value).abs();
    let g_ok = g_gap <= 2.0 * tol;
    let g11_1 = g11(1.0, tol).unwrap();
    let g11_gap = (g11_1.value - 12.0 * tau.value).abs();
    let g11_ok = g11_gap <= 2.0 * (tol + 12.0 * tol);
    (
        mc_ok && omega_ok && g_ok && g11_ok,
        format!(
            "tau_inf {:.12}; MC {mc:.6} +- {se:.1e}; |omega+ + omega- - 12 tau| {omega_gap:.1e}; |int g - tau| {g_gap:.1e}; |G11(1) - 12 tau| {g11_gap:.1e}",
            tau.value
        ),
    )
}

/// Every `(v, y0, y1, y2)` at height `B` with `temple`, the height
/// bound `v0^4 v1^6 v2^5 v3^3 y0^4 y2^2 <= B`, the `y1` window
/// `-Y1 < y1 <= V1 Y1 / v1` and `gcd(y1, v0 v1 v2 v3 y0) = 1`.
fn admissible_tuples(b: u64) -> Vec<([u64; 4], u64, i64, u64)> {
    let gcd = |mut a: u64, mut c: u64| {
        while c != 0 {
            (a, c) = (c, a % c);
        }
        a
    };
    let b128 = b as u128;
    let mut out = Vec::new();
    let pw = |x: u64, e: u32| (x as u128).pow(e);
    for v0 in (1..).take_while(|&v0| pw(v0, 4) <= b128) {
        for v1 in (1..).take_while(|&v1| pw(v0, 4) * pw(v1, 6) <= b128) {
            let a1 = pw(v0, 4) * pw(v1, 6);
            for v2 in (1..).take_while(|&v2| a1 * pw(v2, 5) <= b128) {
                let a2 = a1 * pw(v2, 5);
                for v3 in (1..).take_while(|&v3| a2 * pw(v3, 3) <= b128) {
                    let a3 = a2 * pw(v3, 3);
                    for y0 in (1..).take_while(|&y0| a3 * pw(y0, 4) <= b128) {
                        let a4 = a3 * pw(y0, 4);
                        for y2 in (1..).take_while(|&y2| a4 * pw(y2, 2) <= b128) {
                            let v = [v0, v1, v2, v3];
                            if !temple(&v, y0, y2) {
                                continue;
                            }
                            let rb = region_bounds(b, &v, y0, y2).unwrap();
                            let lo = (-rb.Y1).floor() as i64 + 1;
                            let hi = (rb.V1 * rb.Y1 / v1 as f64).floor() as i64;
                            for y1 in lo..=hi {
                                if y1 != 0 && gcd(y1.unsigned_abs(), v0 * v1 * v2 * v3 * y0) == 1 {
                                    out.push((v, y0, y1, y2));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn inner_sum() -> Outcome {
    let b = 10_000;
    let tuples = admissible_tuples(b);
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let (v, y0, y1, y2) = tuples[rng.gen_range(0..tuples.len())];
        let c = s_exact_vs_main(&v, y0, y1, y2, b).unwrap();
        worst = worst.max(c.error.abs() / c.divisor_bound);
    }
    (
        worst <= 10.0,
        format!(
            "{} admissible tuples; max |error|/bound {worst:.3}",
            tuples.len()
        ),
    )
}

fn predictor_residual() -> Outcome {
    let grid: Vec<u64> = (0..=10)
        .map(|i| (1e3 * 10f64.powf(i as f64 / 5.0)).round() as u64)
        .collect();
    let (fit, reports) = predictor_grid(&grid, 0).unwrap();
    let e = reports[0].residual_exponent_estimate;
    (
        e <= 0.9,
        format!(
            "{} points; beta_hat {:.5}; window drift {:.3}; residual exponent {e:.3}",
            grid.len(),
            fit.beta_hat,
            fit.window_drift
        ),
    )
}

fn determinism() -> Outcome {
    let snapshot = |threads: usize| {
        let mut parts = Vec::new();
        for b in [1_000u64, 30_000] {
            parts.push(count_direct(b, threads).unwrap().count.to_string());
            parts.push(count_torsor(b, threads).unwrap().count.to_string());
            parts.push(
                count_u(b, Method::Torsor, threads)
                    .unwrap()
                    .count
                    .to_string(),
            );
        }
        parts.push(format!(
            "{:?}",
            manin_d5::surface::direct_points(2_000, threads).unwrap()
        ));
        parts.push(format!(
            "{:?}",
            manin_d5::torsor::enumerate(2_000, threads).unwrap()
        ));
        parts.push(format!(
            "{:?}",
            manin_d5::surface::count_u_profile(20_000, threads).unwrap()
        ));
        let grid = [1_000u64, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000];
        parts.push(serde_json::to_string(&predictor_grid(&grid, threads).unwrap()).unwrap());
        parts.join("\n")
    };
    let one = snapshot(1);
    let same = [4, 8].iter().all(|&t| snapshot(t) == one);
    (
        same,
        format!(
            "{} bytes of counts, point lists and reports compared",
            one.len()
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "torsor bijection", torsor_bijection),
        (2, "naive oracle equality", naive_oracle),
        (3, "degenerate-count shape", red_one_shape),
        (4, "alpha exact", alpha),
        (5, "intersection lattice", lattice),
        (6, "local densities", local_densities),
        (7, "local-factor identity", local_factor_identity),
        (8, "closing Euler identity", closing_identity),
        (9, "tau_inf consistency", tau_consistency),
        (10, "inner sum main term", inner_sum),
        (11, "predictor residual", predictor_residual),
        (12, "thread-count determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (n, name, run) in criteria {
        let start = Instant::now();
        let (ok, detail) = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, format!("panicked: {msg}"))
        });
        failures += !ok as u32;
        println!(
            "{} [{n:>2}] {name}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", 12 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
