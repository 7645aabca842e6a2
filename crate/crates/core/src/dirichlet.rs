//! The arithmetic function `Delta(n)`, its Dirichlet series `F` and local
//! factors, the zeta quotients `E1`, `E2`, and real-argument zeta values.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{is_squarefree, Factorization};
use crate::constants::primes_up_to;
use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

const BERNOULLI_2K: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Hurwitz zeta `sum_{n >= 0} (n + a)^{-s}` for real `s > 1`, `a > 0`, by
/// Euler-Maclaurin with ten correction terms.
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<f64> {
    if !(s > 1.0) || !(a > 0.0) {
        return Err(Error::InvalidInput(format!(
            "hurwitz zeta needs s > 1, a > 0 (s={s}, a={a})"
        )));
    }
    const N: usize = 16;
    let mut sum = 0.0;
    for n in 0..N {
        sum += (n as f64 + a).powf(-s);
    }
    let x = N as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // B_{2k}/(2k)! * s(s+1)...(s+2k-2) x^{-s-2k+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut xp = x.powf(-s - 1.0);
    for (k, b) in BERNOULLI_2K.iter().enumerate() {
        sum += b / fact * rising * xp;
        let k2 = 2.0 * (k as f64 + 1.0);
        rising *= (s + k2 - 1.0) * (s + k2);
        fact *= (k2 + 1.0) * (k2 + 2.0);
        xp /= x * x;
    }
    Ok(sum)
}

pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::InvalidInput(format!(
            "zeta argument {s} must exceed 1"
        )));
    }
    hurwitz_zeta(s, 1.0)
}

/// A quotient of zeta values `prod zeta(a s' + b) / prod zeta(a s' + b)`
/// written in the shifted variable `s' = s - 1`, so that `eval(s)` is the
/// value at `s` of the function whose `s + 1` form lists these factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerProductSpec {
    pub numerator: Vec<(f64, f64)>,
    pub denominator: Vec<(f64, f64)>,
}

/// `E1(s+1) = zeta(6s+1) zeta(5s+1) zeta(4s+1)^2 zeta(3s+1) zeta(2s+1)`.
pub fn e1_spec() -> EulerProductSpec {
    EulerProductSpec {
        numerator: vec![
            (6.0, 1.0),
            (5.0, 1.0),
            (4.0, 1.0),
            (4.0, 1.0),
            (3.0, 1.0),
            (2.0, 1.0),
        ],
        denominator: vec![],
    }
}

/// `E2(s+1) = zeta(14s+3) zeta(13s+3)^3 / (zeta(10s+2) zeta(9s+2)
/// zeta(8s+2)^3 zeta(7s+2)^3 zeta(19s+4))`.
pub fn e2_spec() -> EulerProductSpec {
    EulerProductSpec {
        numerator: vec![(14.0, 3.0), (13.0, 3.0), (13.0, 3.0), (13.0, 3.0)],
        denominator: vec![
            (10.0, 2.0),
            (9.0, 2.0),
            (8.0, 2.0),
            (8.0, 2.0),
            (8.0, 2.0),
            (7.0, 2.0),
            (7.0, 2.0),
            (7.0, 2.0),
            (19.0, 4.0),
        ],
    }
}

impl EulerProductSpec {
    fn arguments(&self, s: f64) -> impl Iterator<Item = (f64, bool)> + '_ {
        let t = s - 1.0;
        self.numerator
            .iter()
            .map(move |&(a, b)| (a * t + b, true))
            .chain(
                self.denominator
                    .iter()
                    .map(move |&(a, b)| (a * t + b, false)),
            )
    }

    /// Value from zeta evaluations.
    pub fn eval(&self, s: f64) -> Result<f64> {
        let mut acc = 1.0;
        for (arg, num) in self.arguments(s) {
            let z = zeta(arg)?;
            acc = if num { acc * z } else { acc / z };
        }
        Ok(acc)
    }

    /// The Euler factor at `p`. Arguments equal to 1 are allowed here.
    pub fn local(&self, p: u64, s: f64) -> f64 {
        let pf = p as f64;
        self.arguments(s).fold(1.0, |acc, (arg, num)| {
            let l = 1.0 - pf.powf(-arg);
            if num {
                acc / l
            } else {
                acc * l
            }
        })
    }
}

/// Truncated Euler product with a bound on the omitted primes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerEval {
    pub partial: f64,
    pub tail_bound: f64,
    pub zeta_value: f64,
}

/// `prod_{p <= cutoff}` of the local factors, with
/// `|log E - log partial| <= sum_i sum_{n > P} n^{-sigma_i} / (1 - P^{-sigma_i})`.
pub fn euler_product_eval(spec: &EulerProductSpec, s: f64, prime_cutoff: u64) -> Result<EulerEval> {
    if prime_cutoff < 2 {
        return Err(Error::envelope("prime cutoff", prime_cutoff, ">= 2"));
    }
    let args: Vec<f64> = spec.arguments(s).map(|(a, _)| a).collect();
    if let Some(bad) = args.iter().find(|&&a| !(a > 1.0)) {
        return Err(Error::InvalidInput(format!(
            "zeta argument {bad} must exceed 1"
        )));
    }
    let zeta_value = spec.eval(s)?;
    let mut log_partial = 0.0;
    for p in primes_up_to(prime_cutoff) {
        log_partial += spec.local(p, s).ln();
    }
    let big_p = prime_cutoff as f64;
    let log_tail: f64 = args
        .iter()
        .map(|&a| big_p.powf(1.0 - a) / ((a - 1.0) * (1.0 - big_p.powf(-a))))
        .sum();
    let partial = log_partial.exp();
    Ok(EulerEval {
        partial,
        tail_bound: partial * log_tail.exp_m1(),
        zeta_value,
    })
}

/// `F_p(s + 1/6)` from its closed form; valid for `s > -1/6`.
pub fn local_factor_closed(p: u64, s: f64) -> Result<f64> {
    if !(s > -1.0 / 6.0) {
        return Err(Error::InvalidInput(format!(
            "local factor needs s > -1/6, got {s}"
        )));
    }
    let pf = p as f64;
    let q = 1.0 - 1.0 / pf;
    let x2 = pf.powf(2.0 * s + 1.0);
    let x4 = pf.powf(4.0 * s + 1.0);
    let x6 = pf.powf(6.0 * s + 1.0);
    Ok(1.0
        + q / (x2 - 1.0)
        + q / (x4 - 1.0)
        + q * q / (x6 - 1.0) * (x2 / (x2 - 1.0) + 1.0 / (x4 - 1.0))
        + x4 * q * q / ((x2 - 1.0) * (x6 - 1.0))
        + pf.powf(5.0 * s + 1.0) * q * q / ((x4 - 1.0) * (x6 - 1.0))
        + pf.powf(3.0 * s) * q / (x6 - 1.0))
}

/// Monomial weights of `(v0, v1, v2, v3, y0, y2)` in `n`.
pub const WEIGHTS: [u32; 6] = [4, 6, 5, 3, 4, 2];

/// Local value of `theta / (v0 v1 v2 v3 y0 y2)^{...}` gating for a single
/// prime: exponents `e = (a0, a1, a2, a3, b0, b2)`. Returns `None` when the
/// local gates fail, otherwise `theta_p` as `q^i` with `q = 1 - 1/p`.
fn local_theta_power(e: &[u32; 6]) -> Option<i32> {
    let [a0, a1, a2, a3, b0, b2] = *e;
    if a0 + a2 + a3 > 1 {
        return None;
    }
    if b2 > 0 && (a2 > 0 || a3 > 0 || b0 > 0) {
        return None;
    }
    if b0 > 0 && (a0 > 0 || a3 > 0) {
        return None;
    }
    let first = (a0 + a1 + a2 + b2 > 0) as i32;
    let second = (a0 + a1 + a2 + a3 + b0 > 0) as i32;
    let common = (a1 > 0 && a3 > 0) as i32;
    Some(first + second - common)
}

/// Series for `F_p(s + 1/6)` over exponent tuples of weighted degree at most
/// `exponent_cutoff`, with a bound on the omitted terms plus floating-point
/// rounding.
pub fn local_factor_bruteforce(p: u64, s: f64, exponent_cutoff: u32) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!("series needs s > 0, got {s}")));
    }
    if exponent_cutoff < 10 {
        return Err(Error::envelope("exponent cutoff", exponent_cutoff, ">= 10"));
    }
    let pf = p as f64;
    let q = 1.0 - 1.0 / pf;
    let c = exponent_cutoff;
    // Neumaier-compensated sum.
    let (mut total, mut comp, mut terms) = (0.0f64, 0.0f64, 0u64);
    for_each_tuple(c, |e| {
        if let Some(k) = local_theta_power(e) {
            let expo: f64 = e
                .iter()
                .zip(WEIGHTS)
                .map(|(&ei, w)| ei as f64 * (w as f64 * s + 1.0))
                .sum();
            let term = q.powi(k) * pf.powf(-expo);
            let t = total + term;
            comp += if total.abs() >= term.abs() {
                (total - t) + term
            } else {
                (term - t) + total
            };
            total = t;
            terms += 1;
        }
    });
    total += comp;
    // Every term is at most x^W with x = p^{-(s+1/6)} and W the weighted
    // degree; the degree generating function of all tuples is
    // G(z) = (1 + z^3 + z^4 + z^5) / ((1-z^6)(1-z^4)(1-z^2)), and
    // sum_{W > c} a_W x^W <= (x/z)^{c+1} G(z) for any x < z < 1.
    let x = pf.powf(-(s + 1.0 / 6.0));
    let gen = |z: f64| {
        (1.0 + z.powi(3) + z.powi(4) + z.powi(5))
            / ((1.0 - z.powi(6)) * (1.0 - z.powi(4)) * (1.0 - z * z))
    };
    let tail = (1..200)
        .map(|i| x + (1.0 - x) * i as f64 / 200.0)
        .map(|z| (x / z).powi(c as i32 + 1) * gen(z))
        .fold(f64::INFINITY, f64::min);
    // Positive terms, each within a few ulps; compensation leaves
    // O(eps + n eps^2) relative error in the sum.
    let eps = f64::EPSILON;
    let rounding = (16.0 + terms as f64 * eps) * eps * total;
    Ok((total, tail + rounding))
}

fn for_each_tuple(cutoff: u32, mut visit: impl FnMut(&[u32; 6])) {
    let c = cutoff;
    for a0 in 0..=c / 4 {
        for a1 in 0..=(c - 4 * a0) / 6 {
            let r1 = c - 4 * a0 - 6 * a1;
            for a2 in 0..=r1 / 5 {
                let r2 = r1 - 5 * a2;
                for a3 in 0..=r2 / 3 {
                    let r3 = r2 - 3 * a3;
                    for b0 in 0..=r3 / 4 {
                        let r4 = r3 - 4 * b0;
                        for b2 in 0..=r4 / 2 {
                            visit(&[a0, a1, a2, a3, b0, b2]);
                        }
                    }
                }
            }
        }
    }
}

/// `F(s + 1/6) = prod_p F_p(s + 1/6)` over `p <= cutoff` with a bound on the
/// omitted primes from `F_p <= prod_i (1 - p^{-(w_i s + 1)})^{-1}`.
pub fn f_euler(s: f64, prime_cutoff: u64) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Euler product needs s > 0, got {s}"
        )));
    }
    let mut log_sum = 0.0;
    for p in primes_up_to(prime_cutoff) {
        log_sum += local_factor_closed(p, s)?.ln();
    }
    let big_p = prime_cutoff as f64;
    let log_tail: f64 = WEIGHTS
        .iter()
        .map(|&w| {
            let a = w as f64 * s + 1.0;
            big_p.powf(1.0 - a) / ((a - 1.0) * (1.0 - big_p.powf(-a)))
        })
        .sum();
    let value = log_sum.exp();
    Ok((value, value * log_tail.exp_m1()))
}

/// The factor at `p` of `G_{1,2}(1) = F(1/6) / (E1(1) E2(1))`.
pub fn g12_local(p: u64) -> Result<f64> {
    Ok(local_factor_closed(p, 0.0)? / (e1_spec().local(p, 1.0) * e2_spec().local(p, 1.0)))
}

fn phi_star_rational(n: u64) -> Rational {
    let f = Factorization::new(n).expect("positive");
    f.primes().fold(Rational::one(), |acc, p| {
        acc * Rational::new(p as i128 - 1, p as i128)
    })
}

/// The conditions `|mu(v0 v2 v3)| = 1`, `gcd(v2 v3 y0, y2) = 1`,
/// `gcd(v0 v3, y0) = 1`.
pub fn temple(v: &[u64; 4], y0: u64, y2: u64) -> bool {
    let [v0, _, v2, v3] = *v;
    is_squarefree(v0 * v2 * v3) && (v2 * v3 * y0).gcd(&y2) == 1 && (v0 * v3).gcd(&y0) == 1
}

/// `phi*(v0 v1 v2 y2) phi*(v0 v1 v2 v3 y0) / phi*(gcd(v1, v3))`, or 0 when
/// the conditions of [`temple`] fail.
pub fn theta(v: &[u64; 4], y0: u64, y2: u64) -> Rational {
    if v.contains(&0) || y0 == 0 || y2 == 0 || !temple(v, y0, y2) {
        return Rational::zero();
    }
    let [v0, v1, v2, v3] = *v;
    phi_star_rational(v0 * v1 * v2 * y2) * phi_star_rational(v0 * v1 * v2 * v3 * y0)
        / phi_star_rational(v1.gcd(&v3))
}

/// `Delta(n) = coefficient * n^{1/6}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaValue {
    pub n: u64,
    pub coefficient: Rational,
}

impl DeltaValue {
    pub fn value(&self) -> f64 {
        ratio_to_f64(&self.coefficient) * (self.n as f64).powf(1.0 / 6.0)
    }
}

pub fn ratio_to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

fn tuple_weight(v: &[u64; 4], y0: u64, y2: u64) -> Rational {
    let denom = v.iter().product::<u64>() * y0 * y2;
    theta(v, y0, y2) / Rational::from_integer(denom as i128)
}

/// `Delta(n)`, by splitting each prime power of `n` among the six monomial
/// slots and reassembling the tuples.
pub fn delta(n: u64) -> Result<DeltaValue> {
    let fac = Factorization::new(n)?;
    // Each entry: (v0, v1, v2, v3, y0, y2).
    let mut tuples: Vec<[u64; 6]> = vec![[1; 6]];
    for &(p, k) in fac.factors() {
        let mut local = Vec::new();
        for_each_tuple(k, |e| {
            if e.iter().zip(WEIGHTS).map(|(&a, w)| a * w).sum::<u32>() == k {
                local.push(*e);
            }
        });
        if local.is_empty() {
            return Ok(DeltaValue {
                n,
                coefficient: Rational::zero(),
            });
        }
        let mut next = Vec::with_capacity(tuples.len() * local.len());
        for t in &tuples {
            for e in &local {
                let mut u = *t;
                for i in 0..6 {
                    u[i] *= p.pow(e[i]);
                }
                next.push(u);
            }
        }
        tuples = next;
    }
    let coefficient = tuples
        .iter()
        .map(|t| tuple_weight(&[t[0], t[1], t[2], t[3]], t[4], t[5]))
        .fold(Rational::zero(), |a, b| a + b);
    Ok(DeltaValue { n, coefficient })
}

/// `Delta(n)` for every `n <= limit` with nonzero value, built by direct
/// enumeration of `(v, y0, y2)` with `v0^4 v1^6 v2^5 v3^3 y0^4 y2^2 <= limit`.
#[derive(Debug, Clone)]
pub struct DeltaTable {
    limit: u64,
    coefficients: BTreeMap<u64, Rational>,
}

impl DeltaTable {
    pub fn build(limit: u64) -> Self {
        let mut coefficients: BTreeMap<u64, Rational> = BTreeMap::new();
        let l = limit as u128;
        let pw = |x: u64, e: u32| (x as u128).pow(e);
        let mut v0 = 1;
        while pw(v0, 4) <= l {
            let mut v1 = 1;
            while pw(v0, 4) * pw(v1, 6) <= l {
                let mut v2 = 1;
                while pw(v0, 4) * pw(v1, 6) * pw(v2, 5) <= l {
                    let mut v3 = 1;
                    let base2 = pw(v0, 4) * pw(v1, 6) * pw(v2, 5);
                    while base2 * pw(v3, 3) <= l {
                        let base3 = base2 * pw(v3, 3);
                        let mut y0 = 1;
                        while base3 * pw(y0, 4) <= l {
                            let base4 = base3 * pw(y0, 4);
                            let mut y2 = 1;
                            while base4 * pw(y2, 2) <= l {
                                let w = tuple_weight(&[v0, v1, v2, v3], y0, y2);
                                if !w.is_zero() {
                                    let n = (base4 * pw(y2, 2)) as u64;
                                    *coefficients.entry(n).or_insert_with(Rational::zero) += w;
                                }
                                y2 += 1;
                            }
                            y0 += 1;
                        }
                        v3 += 1;
                    }
                    v2 += 1;
                }
                v1 += 1;
            }
            v0 += 1;
        }
        DeltaTable {
            limit,
            coefficients,
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn coefficient(&self, n: u64) -> Rational {
        self.coefficients
            .get(&n)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn value(&self, n: u64) -> f64 {
        ratio_to_f64(&self.coefficient(n)) * (n as f64).powf(1.0 / 6.0)
    }

    /// Support of `Delta` in increasing order, with `(n, coefficient)`.
    pub fn entries(&self) -> impl Iterator<Item = (u64, &Rational)> {
        self.coefficients.iter().map(|(&n, c)| (n, c))
    }

    /// `sum_{n <= N} Delta(n) n^{-s - 1/6}`, i.e. the partial sum of
    /// `F(s + 1/6)`.
    pub fn partial_sum(&self, s: f64, upto: u64) -> f64 {
        self.coefficients
            .range(..=upto)
            .map(|(&n, c)| ratio_to_f64(c) * (n as f64).powf(-s))
            .sum()
    }

    /// CSV with header `n,coefficient,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,coefficient,value\n");
        for (n, c) in self.entries() {
            out.push_str(&format!(
                "{n},{}/{},{:.17e}\n",
                c.numer(),
                c.denom(),
                ratio_to_f64(c) * (n as f64).powf(1.0 / 6.0)
            ));
        }
        out
    }
}
