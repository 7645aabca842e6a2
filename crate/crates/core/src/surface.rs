//! The surface `Q1 = x0 x1 - x2^2 = 0`, `Q2 = x0 x4 - x1 x2 + x3^2 = 0` in
//! `P^4`, its height, its unique line `x0 = x2 = x3 = 0`, and three exact
//! counters for points of bounded height off the line.

use std::time::Instant;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{isqrt, isqrt_ceil, sqrt_residues, Factorization, SpfSieve};
use crate::error::{Error, Result};
use crate::parallel::with_threads;

/// Largest `B` accepted by [`count_naive`].
pub const NAIVE_MAX_B: u64 = 80;
/// Largest `B` accepted by [`count_direct`].
pub const DIRECT_MAX_B: u64 = 100_000;

pub type Vec5 = [i64; 5];

#[inline]
pub fn q1(x: &Vec5) -> i128 {
    x[0] as i128 * x[1] as i128 - x[2] as i128 * x[2] as i128
}

#[inline]
pub fn q2(x: &Vec5) -> i128 {
    x[0] as i128 * x[4] as i128 - x[1] as i128 * x[2] as i128 + x[3] as i128 * x[3] as i128
}

pub fn is_on_surface(x: &Vec5) -> bool {
    q1(x) == 0 && q2(x) == 0
}

pub fn is_on_line(x: &Vec5) -> bool {
    x[0] == 0 && x[2] == 0 && x[3] == 0
}

pub fn height(x: &Vec5) -> u64 {
    x.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
}

pub fn is_primitive(x: &Vec5) -> bool {
    x.iter().fold(0i64, |g, &c| g.gcd(&c)) == 1
}

/// Flips the sign so that the first nonzero coordinate is positive.
pub fn normalize_sign(x: &Vec5) -> Vec5 {
    match x.iter().find(|&&c| c != 0) {
        Some(&c) if c < 0 => x.map(|c| -c),
        _ => *x,
    }
}

/// A primitive, sign-normalised rational point of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SurfacePoint {
    x: Vec5,
}

impl SurfacePoint {
    pub fn new(x: Vec5) -> Result<Self> {
        if !is_primitive(&x) {
            return Err(Error::InvalidInput(format!("{x:?} is not primitive")));
        }
        if !is_on_surface(&x) {
            return Err(Error::InvalidInput(format!("{x:?} is not on the surface")));
        }
        Ok(SurfacePoint {
            x: normalize_sign(&x),
        })
    }

    pub fn coords(&self) -> Vec5 {
        self.x
    }

    pub fn height(&self) -> u64 {
        height(&self.x)
    }

    pub fn on_line(&self) -> bool {
        is_on_line(&self.x)
    }
}

/// Which counter produced a [`CountRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    Direct,
    Torsor,
    Degenerate,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Naive => "naive",
            Method::Direct => "direct",
            Method::Torsor => "torsor",
            Method::Degenerate => "degenerate",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Method::Naive),
            "direct" => Ok(Method::Direct),
            "torsor" => Ok(Method::Torsor),
            "degenerate" => Ok(Method::Degenerate),
            _ => Err(Error::InvalidInput(format!("unknown method {s:?}"))),
        }
    }
}

/// One counter run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    #[serde(rename = "B")]
    pub b: u64,
    pub count: u64,
    pub method: Method,
    pub elapsed_ms: u64,
}

impl CountRecord {
    pub(crate) fn timed(b: u64, method: Method, start: Instant, count: u64) -> Self {
        CountRecord {
            b,
            count,
            method,
            elapsed_ms: start.elapsed().as_millis() as u64,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialises")
    }
}

fn check_envelope(what: &'static str, b: u64, max: u64) -> Result<()> {
    if b > max {
        return Err(Error::envelope(what, b, format!("B <= {max}")));
    }
    Ok(())
}

/// `N_U(B)`: projective points off the line with height at most `B`,
/// by scanning every coordinate vector with `x0 > 0` (points with `x0 = 0`
/// all lie on the line).
pub fn count_naive(b: u64) -> Result<CountRecord> {
    check_envelope("naive B", b, NAIVE_MAX_B)?;
    let start = Instant::now();
    let mut count = 0u64;
    naive_scan(b, |_| count += 1);
    Ok(CountRecord::timed(b, Method::Naive, start, count))
}

/// Every primitive surface vector with `x0 > 0` and height at most `B`.
pub fn naive_points(b: u64) -> Result<Vec<Vec5>> {
    check_envelope("naive B", b, NAIVE_MAX_B)?;
    let mut out = Vec::new();
    naive_scan(b, |x| out.push(*x));
    Ok(out)
}

// x1 is pinned to be nonnegative and x0 x1 a square, so x2 has at most two
// values and x4 is forced by Q2.
fn naive_scan(b: u64, mut visit: impl FnMut(&Vec5)) {
    let b = b as i64;
    for x0 in 1..=b {
        for x1 in 0..=b {
            let prod = (x0 * x1) as u128;
            let s = isqrt(prod) as i64;
            if (s as u128) * (s as u128) != prod {
                continue;
            }
            let x2s: &[i64] = if s == 0 { &[0] } else { &[s, -s] };
            for &x2 in x2s {
                for x3 in -b..=b {
                    let num = x1 * x2 - x3 * x3;
                    if num % x0 != 0 {
                        continue;
                    }
                    let x4 = num / x0;
                    let x = [x0, x1, x2, x3, x4];
                    if x4.abs() <= b && is_primitive(&x) {
                        visit(&x);
                    }
                }
            }
        }
    }
}

/// Number of coprime pairs `1 <= a, b <= m`.
pub fn coprime_pairs(m: u64) -> u64 {
    if m == 0 {
        return 0;
    }
    let mu = mobius_table(m);
    let mut total = 0i64;
    for d in 1..=m {
        let q = (m / d) as i64;
        total += mu[d as usize] as i64 * q * q;
    }
    total as u64
}

fn mobius_table(n: u64) -> Vec<i8> {
    let n = n as usize;
    let mut mu = vec![1i8; n + 1];
    let mut composite = vec![false; n + 1];
    for p in 2..=n {
        if composite[p] {
            continue;
        }
        for j in (p..=n).step_by(p) {
            if j > p {
                composite[j] = true;
            }
            mu[j] = -mu[j];
        }
        let sq = p * p;
        for j in (sq..=n).step_by(sq) {
            mu[j] = 0;
        }
    }
    mu
}

/// Points of height at most `B` with `x1 x2 x3 x4 = 0`, off the line.
/// These are `(1,0,0,0,0)`, the conic family `(a^2,0,0,+-ab,-b^2)`, the cubic
/// family `(s^3,st^2,s^2t,0,t^3)` and the quartic family
/// `(s^4,t^4,s^2t^2,st^3,0)`, with `s > 0`, `t != 0`, `gcd(s,t) = 1`.
pub fn count_degenerate(b: u64) -> Result<CountRecord> {
    if b == 0 {
        return Err(Error::envelope("degenerate B", 0, "B >= 1"));
    }
    let start = Instant::now();
    let count = degenerate_count_value(b);
    Ok(CountRecord::timed(b, Method::Degenerate, start, count))
}

pub(crate) fn degenerate_count_value(b: u64) -> u64 {
    if b == 0 {
        return 0;
    }
    1 + 2 * coprime_pairs(isqrt(b as u128) as u64)
        + 2 * coprime_pairs(crate::arith::iroot(b, 3))
        + 2 * coprime_pairs(crate::arith::iroot(b, 4))
}

/// Explicit list of the degenerate points, for oracle comparisons.
pub fn degenerate_points(b: u64) -> Vec<Vec5> {
    let mut out = Vec::new();
    if b == 0 {
        return out;
    }
    out.push([1, 0, 0, 0, 0]);
    let r2 = isqrt(b as u128) as i64;
    let r3 = crate::arith::iroot(b, 3) as i64;
    let r4 = crate::arith::iroot(b, 4) as i64;
    for s in 1..=r2 {
        for t in 1..=r2 {
            if s.gcd(&t) == 1 {
                out.push([s * s, 0, 0, s * t, -t * t]);
                out.push([s * s, 0, 0, -s * t, -t * t]);
            }
        }
    }
    for s in 1..=r3 {
        for t in (-r3..=r3).filter(|&t| t != 0 && s.gcd(&t) == 1) {
            out.push([s.pow(3), s * t * t, s * s * t, 0, t.pow(3)]);
        }
    }
    for s in 1..=r4 {
        for t in (-r4..=r4).filter(|&t| t != 0 && s.gcd(&t) == 1) {
            out.push([s.pow(4), t.pow(4), s * s * t * t, s * t.pow(3), 0]);
        }
    }
    debug_assert!(out.iter().all(|x| height(x) <= b));
    out
}

/// Histogram of degenerate points by height, indexed `0..=B`.
pub fn degenerate_height_histogram(b: u64) -> Vec<u64> {
    let mut hist = vec![0u64; b as usize + 1];
    for x in degenerate_points(b) {
        hist[height(&x) as usize] += 1;
    }
    hist
}

/// Visits every vector counted by `N(Q1,Q2;B)` whose gcd-part
/// `z2 = gcd(x0, x1)` is the given value.
///
/// With `x0 = z0^2 z2`, `x1 = z1^2 z2`, `x2 = z0 z1 z2` and
/// `gcd(z0, z1) = 1`, the vector is primitive iff `gcd(z2, x3, x4) = 1`, and
/// `x4 = (z0 z1^3 z2^2 - x3^2) / (z0^2 z2)` forces `x3` into square-root
/// classes modulo `z0^2 z2`.
pub(crate) fn visit_direct_z2(b: u64, z2: u64, sieve: &SpfSieve, mut visit: impl FnMut(&Vec5)) {
    let lim = isqrt((b / z2) as u128) as u64;
    let bb = b as i128;
    let mut pairs = Vec::new();
    for z0 in 1..=lim {
        pairs.clear();
        sieve.factor_pairs(z0, &mut pairs);
        for p in pairs.iter_mut() {
            p.1 *= 2;
        }
        sieve.factor_pairs(z2, &mut pairs);
        let fac = Factorization::from_pairs(pairs.iter().copied());
        let m = (z0 * z0 * z2) as i128;
        for z1 in (1..=lim).filter(|z1| z0.gcd(z1) == 1) {
            for sign in [1i128, -1] {
                let z1s = sign * z1 as i128;
                let c = z0 as i128 * z1s * z1s * z1s * (z2 as i128) * (z2 as i128);
                let upper = c + bb * m;
                if upper < 1 {
                    continue;
                }
                let hi = (isqrt(upper as u128) as i128).min(bb);
                let lower = c - bb * m;
                let lo = if lower <= 1 {
                    1
                } else {
                    isqrt_ceil(lower as u128) as i128
                };
                if lo > hi {
                    continue;
                }
                for r in sqrt_residues(c, &fac) {
                    let r = r as i128;
                    let mut x3 = lo + (r - lo).rem_euclid(m);
                    while x3 <= hi {
                        let num = c - x3 * x3;
                        if num != 0 {
                            let x4 = num / m;
                            let g = (z2 as i128).gcd(&x3).gcd(&x4);
                            if g == 1 {
                                visit(&[
                                    m as i64,
                                    (z1s * z1s) as i64 * z2 as i64,
                                    z0 as i64 * z1s as i64 * z2 as i64,
                                    x3 as i64,
                                    x4 as i64,
                                ]);
                            }
                        }
                        x3 += m;
                    }
                }
            }
        }
    }
}

/// `N(Q1,Q2;B)`: vectors with all coordinates nonzero, `0 < x0, x1, x3 <= B`,
/// `|x4| <= B`, primitive and on the surface.
pub fn count_direct(b: u64, threads: usize) -> Result<CountRecord> {
    check_envelope("direct B", b, DIRECT_MAX_B)?;
    let start = Instant::now();
    let count = if b == 0 {
        0
    } else {
        let sieve = SpfSieve::new(b);
        with_threads(threads, || {
            (1..=b)
                .into_par_iter()
                .map(|z2| {
                    let mut n = 0u64;
                    visit_direct_z2(b, z2, &sieve, |_| n += 1);
                    n
                })
                .sum()
        })?
    };
    Ok(CountRecord::timed(b, Method::Direct, start, count))
}

/// All vectors counted by [`count_direct`], sorted.
pub fn direct_points(b: u64, threads: usize) -> Result<Vec<Vec5>> {
    check_envelope("direct B", b, DIRECT_MAX_B)?;
    if b == 0 {
        return Ok(Vec::new());
    }
    let sieve = SpfSieve::new(b);
    let mut points: Vec<Vec5> = with_threads(threads, || {
        (1..=b)
            .into_par_iter()
            .flat_map_iter(|z2| {
                let mut v = Vec::new();
                visit_direct_z2(b, z2, &sieve, |x| v.push(*x));
                v
            })
            .collect()
    })?;
    points.sort_unstable();
    Ok(points)
}

/// Histogram by height of the vectors counted by [`count_direct`], indexed
/// `0..=B`; its prefix sums are `N(Q1,Q2;t)` for every `t <= B`.
pub fn direct_height_histogram(b: u64, threads: usize) -> Result<Vec<u64>> {
    check_envelope("direct B", b, DIRECT_MAX_B)?;
    let len = b as usize + 1;
    if b == 0 {
        return Ok(vec![0]);
    }
    let sieve = SpfSieve::new(b);
    with_threads(threads, || {
        (1..=b)
            .into_par_iter()
            .fold(
                || vec![0u64; len],
                |mut hist, z2| {
                    visit_direct_z2(b, z2, &sieve, |x| hist[height(x) as usize] += 1);
                    hist
                },
            )
            .reduce(
                || vec![0u64; len],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    })
}

/// `N_U(t)` for every `t` in `0..=B`, from the exact identity
/// `N_U = 2 N(Q1,Q2) + degenerate`.
pub fn count_u_profile(b: u64, threads: usize) -> Result<Vec<u64>> {
    let direct = direct_height_histogram(b, threads)?;
    let degenerate = degenerate_height_histogram(b);
    let mut acc = 0u64;
    Ok(direct
        .iter()
        .zip(&degenerate)
        .map(|(d, g)| {
            acc += 2 * d + g;
            acc
        })
        .collect())
}

/// `N_U(B)` by the chosen method. The naive method scans directly; the
/// others use `N_U = 2 N(Q1,Q2;B) + degenerate(B)`.
pub fn count_u(b: u64, method: Method, threads: usize) -> Result<CountRecord> {
    let start = Instant::now();
    let count = match method {
        Method::Naive => count_naive(b)?.count,
        Method::Direct => 2 * count_direct(b, threads)?.count + degenerate_count_value(b),
        Method::Torsor => {
            2 * crate::torsor::count_torsor(b, threads)?.count + degenerate_count_value(b)
        }
        Method::Degenerate => {
            return Err(Error::InvalidInput(
                "count_u needs one of naive, direct, torsor".into(),
            ))
        }
    };
    Ok(CountRecord::timed(b, method, start, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn membership_examples() {
        assert!(is_on_surface(&[1, 1, 1, 0, 1]));
        assert!(is_on_surface(&[1, 1, 1, 1, 0]));
        assert!(!is_on_surface(&[1, 1, 1, 1, 1]));
        assert!(is_on_line(&[0, 1, 0, 0, 5]));
        assert!(!is_on_line(&[1, 0, 0, 0, 0]));
        assert!(is_on_line(&[0, 0, 0, 0, 1]));
    }

    #[test]
    fn surface_point_validates() {
        let p = SurfacePoint::new([-1, -1, 1, 0, 1]).unwrap();
        assert_eq!(p.coords(), [1, 1, -1, 0, -1]);
        assert_eq!(p.height(), 1);
        assert!(SurfacePoint::new([2, 2, 2, 0, 2]).is_err());
        assert!(SurfacePoint::new([1, 1, 1, 1, 1]).is_err());
        assert!(SurfacePoint::new([0; 5]).is_err());
    }

    #[test]
    fn b1_classes() {
        let mut pts = naive_points(1).unwrap();
        pts.sort_unstable();
        let mut expected = vec![
            [1, 0, 0, 0, 0],
            [1, 0, 0, 1, -1],
            [1, 0, 0, -1, -1],
            [1, 1, 1, 0, 1],
            [1, 1, -1, 0, -1],
            [1, 1, 1, 1, 0],
            [1, 1, 1, -1, 0],
        ];
        expected.sort_unstable();
        assert_eq!(pts, expected);
        assert_eq!(count_naive(0).unwrap().count, 0);
        assert_eq!(count_degenerate(1).unwrap().count, 7);
    }

    #[test]
    fn degenerate_families_are_disjoint_and_on_surface() {
        for b in [1u64, 2, 16, 81, 500] {
            let pts = degenerate_points(b);
            let mut sorted = pts.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), pts.len());
            assert_eq!(pts.len() as u64, count_degenerate(b).unwrap().count);
            for x in &pts {
                assert!(is_on_surface(x) && is_primitive(x) && !is_on_line(x));
                assert!(x[1] * x[2] * x[3] * x[4] == 0);
            }
        }
    }

    #[test]
    fn coprime_pair_counts() {
        for m in 0..40u64 {
            let brute = (1..=m)
                .flat_map(|a| (1..=m).map(move |b| (a, b)))
                .filter(|(a, b)| a.gcd(b) == 1)
                .count() as u64;
            assert_eq!(coprime_pairs(m), brute);
        }
    }

    #[test]
    fn direct_points_are_valid() {
        for x in direct_points(300, 2).unwrap() {
            assert!(is_on_surface(&x) && is_primitive(&x));
            assert!(x.iter().all(|&c| c != 0));
            assert!(x[0] > 0 && x[1] > 0 && x[3] > 0 && height(&x) <= 300);
        }
        assert_eq!(count_direct(1, 1).unwrap().count, 0);
    }

    #[test]
    fn histogram_matches_counts() {
        let profile = count_u_profile(200, 2).unwrap();
        for b in [1u64, 7, 50, 123, 200] {
            let direct = count_direct(b, 1).unwrap().count;
            assert_eq!(profile[b as usize], 2 * direct + degenerate_count_value(b));
        }
    }

    #[test]
    fn envelopes() {
        assert!(count_naive(NAIVE_MAX_B + 1).is_err());
        assert!(count_direct(DIRECT_MAX_B + 1, 1).is_err());
        assert!(count_degenerate(0).is_err());
        assert!(count_u(5, Method::Degenerate, 1).is_err());
    }

    #[test]
    fn record_json_shape() {
        let r = CountRecord {
            b: 10,
            count: 3,
            method: Method::Direct,
            elapsed_ms: 0,
        };
        assert_eq!(
            r.to_json_line(),
            r#"{"B":10,"count":3,"method":"direct","elapsed_ms":0}"#
        );
    }

    proptest! {
        #[test]
        fn normalisation_idempotent(s in 1i64..50, t in -50i64..50, neg in any::<bool>()) {
            prop_assume!(t != 0);
            let x = [s * s * s, s * t * t, s * s * t, 0, t * t * t];
            let x = if neg { x.map(|c| -c) } else { x };
            let once = normalize_sign(&x);
            prop_assert_eq!(normalize_sign(&once), once);
            prop_assert!(once[0] > 0);
            prop_assert!(is_on_surface(&once));
        }
    }
}
