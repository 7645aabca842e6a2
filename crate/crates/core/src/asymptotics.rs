//! The summation pipeline for `N_U(B)`: the weight `f` and its slice
//! integral `g`, the congruence sum `Sigma`, exact inner counts against
//! their main terms, `phi_+-` and `beta`, and the predictor
//! `2 B^{5/6} sum Delta(n) g((n/B)^{1/6}) + (12/pi^2 + 2 beta) B`.

use std::sync::OnceLock;

use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{
    gcd, inv_mod, isqrt, isqrt_ceil, omega, sqrt_roots_mod, squarefree_divisors, Factorization,
};
use crate::constants::GOLDEN;
use crate::dirichlet::{hurwitz_zeta, ratio_to_f64, temple, zeta, DeltaTable, Rational};
use crate::error::{Error, Result};
use crate::parallel::with_threads;
use crate::quadrature::{
    integrate, integrate_pieces, integrate_sqrt_left, integrate_sqrt_right, integrate_to_infinity,
    Estimate,
};
use crate::surface::count_u_profile;

const G_TOL: f64 = 1e-12;

/// `f(u, v) = min(sqrt(u^3+1), v^-3) - sqrt(max(u^3-1, 0))`, zero for `u < -1`.
pub fn f(u: f64, v: f64) -> f64 {
    let u3 = u * u * u;
    if u3 < -1.0 {
        return 0.0;
    }
    let cap = if v > 0.0 { v.powi(-3) } else { f64::INFINITY };
    let top = (u3 + 1.0).sqrt();
    if u3 > 1.0 && top <= cap {
        return 2.0 / (top + (u3 - 1.0).sqrt());
    }
    top.min(cap) - (u3 - 1.0).max(0.0).sqrt()
}

/// `d f / d u` away from the kinks at `u = 1` and `sqrt(u^3+1) = v^-3`.
pub fn f_du(u: f64, v: f64) -> f64 {
    let u3 = u * u * u;
    if u3 <= -1.0 {
        return 0.0;
    }
    let cap = if v > 0.0 { v.powi(-3) } else { f64::INFINITY };
    let plus = if (u3 + 1.0).sqrt() < cap {
        1.5 * u * u / (u3 + 1.0).sqrt()
    } else {
        0.0
    };
    let minus = if u > 1.0 {
        1.5 * u * u / (u3 - 1.0).sqrt()
    } else {
        0.0
    };
    plus - minus
}

fn sqrt_cubic_plus(u: f64) -> f64 {
    (u * u * u + 1.0).max(0.0).sqrt()
}

fn sqrt_cubic_minus(u: f64) -> f64 {
    (u * u * u - 1.0).max(0.0).sqrt()
}

// sqrt(u^3+1) - sqrt(u^3-1) without cancellation.
fn gap(u: f64) -> f64 {
    2.0 / (sqrt_cubic_plus(u) + sqrt_cubic_minus(u))
}

struct GConstants {
    /// `int_{-1}^0 sqrt(u^3+1)`
    c0: f64,
    /// `int_0^1 sqrt(u^3+1)`
    a: f64,
    /// `int_1^inf gap(u)`
    d_inf: f64,
}

fn g_constants() -> Result<&'static GConstants> {
    static CELL: OnceLock<std::result::Result<GConstants, Error>> = OnceLock::new();
    CELL.get_or_init(|| {
        let c0 = integrate_sqrt_left(sqrt_cubic_plus, -1.0, 0.0, 1e-13)?.value;
        let a = integrate(sqrt_cubic_plus, 0.0, 1.0, 1e-13)?.value;
        let d_inf = integrate_sqrt_left(gap, 1.0, 2.0, 1e-13)?.value
            + integrate_to_infinity(gap, 2.0, 1e-13)?.value;
        Ok(GConstants { c0, a, d_inf })
    })
    .as_ref()
    .map_err(Clone::clone)
}

/// `u_c(v)` with `sqrt(u_c^3 + 1) = v^-3`.
fn u_crossing(v: f64) -> f64 {
    if v > 0.0 {
        (v.powi(-6) - 1.0).max(0.0).cbrt()
    } else {
        f64::INFINITY
    }
}

/// `g(v) = int_{-1}^{1/v} f(u, v) du` for `v` in `[0, 1]`.
///
/// Split into closed pieces: below `v_c` the cap is inactive and
/// `g = C0 + A + int_1^{1/v} (sqrt(u^3+1) - sqrt(u^3-1))`; above it the cap
/// contributes a rectangle.
pub fn g(v: f64, abs_tol: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidInput(format!("g needs v in [0, 1], got {v}")));
    }
    let k = g_constants()?;
    if v == 0.0 {
        return Ok(k.c0 + k.a + k.d_inf);
    }
    let top = 1.0 / v;
    let uc = u_crossing(v);
    if uc >= top {
        // top > 1 here because uc >= top implies v <= v_c < 1.
        let tail = if top <= 2.0 {
            integrate_sqrt_right(gap, 1.0, top, abs_tol)?.value.max(0.0)
        } else {
            // int_1^top = d_inf - int_top^inf
            k.d_inf - integrate_to_infinity(gap, top, abs_tol)?.value
        };
        return Ok(k.c0 + k.a + tail);
    }
    let rise = integrate(sqrt_cubic_plus, 0.0, uc, abs_tol / 3.0)?.value;
    let cap = v.powi(-3) * (top - uc);
    let fall = if top > 1.0 {
        integrate_sqrt_left(sqrt_cubic_minus, 1.0, top, abs_tol / 3.0)?.value
    } else {
        0.0
    };
    Ok(k.c0 + rise + cap - fall)
}

/// `g'(v) = -f(1/v, v)/v^2 - 3 v^-4 (1/v - u_c)_+` for `v` in `(0, 1]`.
/// Near `v = 0` this behaves like `-v^{-1/2}`.
pub fn g_prime(v: f64) -> Result<f64> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "g' needs v in (0, 1], got {v}"
        )));
    }
    let top = 1.0 / v;
    let uc = u_crossing(v);
    let at_top = if uc >= top {
        gap(top)
    } else {
        v.powi(-3) - sqrt_cubic_minus(top)
    };
    Ok(-at_top / (v * v) - 3.0 * v.powi(-4) * (top - uc).max(0.0))
}

/// `v_c` where `u_c(v) = 1/v`.
pub fn v_crossing() -> f64 {
    GOLDEN.powf(-1.0 / 3.0)
}

fn check_tuple(v: &[u64; 4], y0: u64, y2: u64) -> Result<()> {
    if v.contains(&0) || y0 == 0 || y2 == 0 {
        return Err(Error::InvalidInput("tuple entries must be positive".into()));
    }
    Ok(())
}

fn capri5(v: &[u64; 4], y0: u64, y1: i64) -> bool {
    y1 != 0 && gcd(y1.unsigned_abs(), v.iter().product::<u64>() * y0) == 1
}

/// `Sigma(v, y0, y1, y2)`: the density of admissible `y3` modulo the lattice
/// of `(y3, y4)` solutions, with Mobius inversion for `gcd(y4, v1 v2) = 1`.
/// Zero when the conditions of [`temple`] fail.
pub fn sigma(v: &[u64; 4], y0: u64, y1: i64, y2: u64) -> Result<Rational> {
    check_tuple(v, y0, y2)?;
    if !capri5(v, y0, y1) {
        return Err(Error::InvalidInput(format!(
            "gcd(y1, v0 v1 v2 v3 y0) != 1 for y1 = {y1}"
        )));
    }
    if !temple(v, y0, y2) {
        return Ok(Rational::zero());
    }
    let [v0, v1, v2, v3] = *v;
    let mut primes: Vec<u64> = Factorization::new(v1 * v2)?
        .primes()
        .filter(|&p| !(v0 * v3 * y2).is_multiple_of(p))
        .collect();
    primes.sort_unstable();
    let mut total = Rational::zero();
    for (k4, mu) in squarefree_divisors(&primes) {
        let q = k4 * v2 * y0 * y0;
        let inv = inv_mod(v3 % q, q).unwrap_or(0);
        let target =
            ((v0 as i128 * y1 as i128).rem_euclid(q as i128) as u64 * inv % q.max(1)) as i64;
        let roots = sqrt_roots_mod(target, q, true)?;
        total += Rational::new(mu as i128 * roots.len() as i128, k4 as i128);
    }
    let phi = Factorization::new(v0 * y2)?
        .primes()
        .fold(Rational::one(), |acc, p| {
            acc * Rational::new(p as i128 - 1, p as i128)
        });
    Ok(total * phi)
}

/// Exact inner count against its main term for one `(v, y0, y1, y2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerComparison {
    pub exact: u64,
    pub main: f64,
    pub error: f64,
    /// `2^{omega(v0 y2)} 4^{omega(v1 v2 y0)}`
    pub divisor_bound: f64,
}

/// Counts `y3 >= 1` with `|v3 y3^2 - v0 y1^3 y2^2| <= B v2 y0^2`,
/// `x3 <= B`, `v2 y0^2 | v0 y1^3 y2^2 - v3 y3^2` with nonzero quotient
/// `y4`, `gcd(y3, v0 y0 y2) = 1` and `gcd(y4, v1 v2) = 1`, and compares
/// with `Y3 f(y1/Y1, v1/V1) Sigma / (v2 y0^2)`.
pub fn s_exact_vs_main(v: &[u64; 4], y0: u64, y1: i64, y2: u64, b: u64) -> Result<InnerComparison> {
    check_tuple(v, y0, y2)?;
    if b == 0 {
        return Err(Error::envelope("B", b, ">= 1"));
    }
    let [v0, v1, v2, v3] = *v;
    let bound = 2f64.powi(omega(v0 * y2)? as i32) * 4f64.powi(omega(v1 * v2 * y0)? as i32);
    let s = sigma(v, y0, y1, y2)?;
    if s.is_zero() && !temple(v, y0, y2) {
        return Ok(InnerComparison {
            exact: 0,
            main: 0.0,
            error: 0.0,
            divisor_bound: bound,
        });
    }
    let rb = crate::torsor::region_bounds(b, v, y0, y2)?;
    let main =
        rb.Y3 * f(y1 as f64 / rb.Y1, v1 as f64 / rb.V1) / (v2 * y0 * y0) as f64 * ratio_to_f64(&s);

    let m = (v2 * y0 * y0) as i128;
    let c = v0 as i128 * (y1 as i128).pow(3) * (y2 as i128).pow(2);
    let bm = b as i128 * m;
    let v3i = v3 as i128;
    let x3_unit = (v0 as i128).pow(2)
        * (v1 as i128).pow(3)
        * (v2 as i128).pow(2)
        * v3i
        * v3i
        * (y0 * y2) as i128;
    let mut hi = b as i128 / x3_unit;
    if c + bm >= 0 {
        hi = hi.min(isqrt(((c + bm) / v3i) as u128) as i128);
    } else {
        hi = 0;
    }
    let lo = if c - bm <= 0 {
        1
    } else {
        (isqrt_ceil(((c - bm + v3i - 1) / v3i) as u128) as i128).max(1)
    };
    let y3_gate = v0 * y0 * y2;
    let y4_gate = (v1 * v2) as i128;
    let mut exact = 0u64;
    for y3 in lo..=hi {
        let num = c - v3i * y3 * y3;
        if num == 0 || num % m != 0 {
            continue;
        }
        if gcd(y3 as u64, y3_gate) == 1 && (num / m).gcd(&y4_gate) == 1 {
            exact += 1;
        }
    }
    Ok(InnerComparison {
        exact,
        main,
        error: exact as f64 - main,
        divisor_bound: bound,
    })
}

/// Which of the two halves of `phi` to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// The sawtooth kernel `K(X) = sum_rho [psi(-a_rho/q) - psi((X/k1 - a_rho)/q)]`
/// over units `rho` mod `q`, with `a_rho = b rho^2 mod q`. It equals
/// `-s X + N(X)` where `s = phi(q)/(k1 q)` and `N` counts the jumps
/// `k1 (a_rho + j q)` in `(0, X]`.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    k1: f64,
    q: u64,
    residues: Vec<(u64, f64)>,
    slope: f64,
}

impl Kernel {
    pub(crate) fn new(k1: u64, q: u64, b: u64) -> Self {
        let mut counts = std::collections::BTreeMap::new();
        let units: Vec<u64> = if q == 1 {
            vec![0]
        } else {
            (1..q).filter(|&r| gcd(r, q) == 1).collect()
        };
        for &r in &units {
            let a = (b as u128 * r as u128 % q as u128 * r as u128 % q as u128) as u64;
            *counts.entry(a).or_insert(0.0) += 1.0;
        }
        Kernel {
            k1: k1 as f64,
            q,
            residues: counts.into_iter().collect(),
            slope: units.len() as f64 / (k1 as f64 * q as f64),
        }
    }

    // (number of jumps in (0, X], first unused index alpha for each residue)
    fn jump_data(&self, x: f64, mut each: impl FnMut(f64, f64)) -> f64 {
        let z = x / self.k1;
        let qf = self.q as f64;
        let mut n = 0.0;
        for &(a, mult) in &self.residues {
            let af = a as f64;
            let (count, alpha) = if a == 0 {
                let c = (z / qf).floor();
                (c, c + 1.0)
            } else if z >= af {
                let c = ((z - af) / qf).floor() + 1.0;
                (c, af / qf + c)
            } else {
                (0.0, af / qf)
            };
            n += mult * count;
            each(alpha, mult);
        }
        n
    }

    #[cfg(test)]
    pub(crate) fn eval(&self, x: f64) -> f64 {
        -self.slope * x + self.jump_data(x, |_, _| {})
    }

    /// `J(M) = int_M^inf K(X) X^{-5/2} dX` in closed form:
    /// `-2 s M^{-1/2} + (2/3) N(M) M^{-3/2} + (2/3) sum_{jumps > M} x^{-3/2}`,
    /// the last sum being Hurwitz zeta values.
    fn tail_integral(&self, m: f64) -> Result<f64> {
        let mut hz = 0.0;
        let mut failure = None;
        let n = self.jump_data(m, |alpha, mult| match hurwitz_zeta(1.5, alpha) {
            Ok(h) => hz += mult * h,
            Err(e) => failure = Some(e),
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let period = self.k1 * self.q as f64;
        Ok(
            -2.0 * self.slope / m.sqrt()
                + (2.0 / 3.0) * (n * m.powf(-1.5) + hz * period.powf(-1.5)),
        )
    }

    /// `T(u, tau) = int_0^tau t^2 K(c u / t^2) dt = (c u)^{3/2} J(c u / tau^2) / 2`.
    fn t_integral(&self, c: f64, u: f64, tau: f64) -> Result<f64> {
        if u <= 0.0 || tau <= 0.0 {
            return Ok(0.0);
        }
        Ok(0.5 * (c * u).powf(1.5) * self.tail_integral(c * u / (tau * tau))?)
    }
}

fn h_plus(u: f64) -> f64 {
    1.5 * u * u / sqrt_cubic_plus(u)
}

fn h_minus(u: f64) -> f64 {
    1.5 * u * u / (u * u * u - 1.0).abs().sqrt()
}

fn t_crossing(u: f64) -> f64 {
    (u * u * u + 1.0).powf(-1.0 / 6.0)
}

// Runs a closure that may fail inside a quadrature callback.
struct Guarded {
    failure: std::cell::RefCell<Option<Error>>,
}

impl Guarded {
    fn new() -> Self {
        Guarded {
            failure: std::cell::RefCell::new(None),
        }
    }
    fn failed(&self) -> bool {
        self.failure.borrow().is_some()
    }
    fn run(&self, r: impl FnOnce() -> Result<f64>) -> f64 {
        if self.failed() {
            return 0.0;
        }
        r().unwrap_or_else(|e| {
            self.failure.borrow_mut().get_or_insert(e);
            0.0
        })
    }
    fn finish<T>(self, value: T) -> Result<T> {
        match self.failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }
}

/// The double integral of `t^2 f'(+-u, t) K(c u / t^2)` for one `(k4, k1)`.
/// The `t` direction is done exactly through [`Kernel::t_integral`].
/// With `t_floor > 0` only the band `t >= t_floor` is integrated.
fn kernel_double_integral(
    kernel: &Kernel,
    c: f64,
    sign: Sign,
    tol: f64,
    t_floor: f64,
) -> Result<Estimate> {
    let guard = Guarded::new();
    let band = |u: f64, tau: f64| -> Result<f64> {
        let full = kernel.t_integral(c, u, tau)?;
        if t_floor > 0.0 {
            Ok(full - kernel.t_integral(c, u, tau.min(t_floor))?)
        } else {
            Ok(full)
        }
    };
    let est = match sign {
        Sign::Minus => {
            // f'(-u, t) = 3u^2 / (2 sqrt(1 - u^3)) on [0, 1] for every t <= 1.
            let integrand = |u: f64| {
                if u >= 1.0 {
                    return 0.0;
                }
                h_minus(u) * guard.run(|| band(u, 1.0))
            };
            integrate_sqrt_right(integrand, 0.0, 1.0, tol)?
        }
        Sign::Plus => {
            // For t <= min(1, 1/u): f'(u, t) = h+(u) [t < t_c(u)] - h-(u) [u > 1].
            let integrand = |u: f64| {
                let cap = if u > 1.0 { 1.0 / u } else { 1.0 };
                let plus = h_plus(u) * guard.run(|| band(u, cap.min(t_crossing(u))));
                let minus = if u > 1.0 {
                    h_minus(u) * guard.run(|| band(u, cap))
                } else {
                    0.0
                };
                plus - minus
            };
            let ug = GOLDEN.cbrt();
            integrate(integrand, 0.0, 1.0, tol / 4.0)?
                + integrate_sqrt_left(integrand, 1.0, ug, tol / 4.0)?
                + integrate(integrand, ug, 2.0, tol / 4.0)?
                + integrate_to_infinity(integrand, 2.0, tol / 4.0)?
        }
    };
    guard.finish(est)
}

/// Index data of the `(k4, k1)` sums in `phi_+-`.
pub(crate) struct PhiTerm {
    pub weight: f64,
    pub kernel: Kernel,
}

pub(crate) fn phi_terms(v: &[u64; 4], y0: u64, sign: Sign) -> Result<(f64, Vec<PhiTerm>)> {
    check_tuple(v, y0, 1)?;
    let [v0, v1, v2, v3] = *v;
    if !crate::arith::is_squarefree(v0 * v2 * v3) || gcd(v0 * v3, y0) != 1 {
        return Err(Error::InvalidInput(
            "phi needs |mu(v0 v2 v3)| = gcd(v0 v3, y0) = 1".into(),
        ));
    }
    let c = (v0 * v1 * v1 * v2 * v2 * v3 * y0 * y0) as f64;
    let k4_primes: Vec<u64> = Factorization::new(v1 * v2)?
        .primes()
        .filter(|&p| (v0 * v3) % p != 0)
        .collect();
    let mut terms = Vec::new();
    for (k4, mu4) in squarefree_divisors(&k4_primes) {
        let q = k4 * v2 * y0 * y0;
        let dagger = Factorization::new(k4 * v0 * v2 * v3 * y0)?
            .primes()
            .fold(1.0, |acc, p| acc * p as f64 / (p as f64 + 1.0));
        let k1_primes: Vec<u64> = Factorization::new(v0 * v1 * v3)?
            .primes()
            .filter(|&p| !(k4 * v2 * y0).is_multiple_of(p))
            .collect();
        for (k1, mu1) in squarefree_divisors(&k1_primes) {
            let b = if q == 1 {
                0
            } else {
                let inv = inv_mod((k1 * v0) % q, q).expect("k1 v0 is a unit modulo k4 v2 y0^2");
                let s = match sign {
                    Sign::Plus => v3 % q,
                    Sign::Minus => (q - v3 % q) % q,
                };
                (s as u128 * inv as u128 % q as u128) as u64
            };
            terms.push(PhiTerm {
                weight: 18.0 / std::f64::consts::PI.powi(2) * (mu4 * mu1) as f64 * dagger
                    / k4 as f64,
                kernel: Kernel::new(k1, q, b),
            });
        }
    }
    Ok((c, terms))
}

/// `phi_+(v, y0)` or `phi_-(v, y0)`.
pub fn phi_pm(v: &[u64; 4], y0: u64, sign: Sign, abs_tol: f64) -> Result<Estimate> {
    if !(abs_tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {abs_tol}"
        )));
    }
    let (c, terms) = phi_terms(v, y0, sign)?;
    let per = abs_tol / terms.iter().map(|t| t.weight.abs()).sum::<f64>();
    let mut total = Estimate::new(0.0, 0.0);
    for t in &terms {
        total = total + kernel_double_integral(&t.kernel, c, sign, per, 0.0)?.scale(t.weight);
    }
    Ok(total)
}

/// `phi_+ + phi_-`.
pub fn phi(v: &[u64; 4], y0: u64, abs_tol: f64) -> Result<Estimate> {
    Ok(phi_pm(v, y0, Sign::Plus, abs_tol / 2.0)? + phi_pm(v, y0, Sign::Minus, abs_tol / 2.0)?)
}

/// Empirical constant in `|phi_+-| <= C (v2 y0^2)^{0.55} 2^{omega(v1 v2) + omega(v0 v1 v3)}`.
pub const PHI_BOUND_CONSTANT: f64 = 20.0;

pub fn phi_bound(v: &[u64; 4], y0: u64) -> Result<f64> {
    let [v0, v1, v2, v3] = *v;
    Ok(PHI_BOUND_CONSTANT
        * ((v2 * y0 * y0) as f64).powf(0.55)
        * 2f64.powi((omega(v1 * v2)? + omega(v0 * v1 * v3)?) as i32))
}

/// `(v, y0)` with `|mu(v0 v2 v3)| = gcd(v0 v3, y0) = 1` and
/// `v0^4 v1^6 v2^5 v3^3 y0^4 <= cutoff`.
pub fn beta_tuples(cutoff: u64) -> Vec<([u64; 4], u64)> {
    let l = cutoff as u128;
    let pw = |x: u64, e: u32| (x as u128).pow(e);
    let mut out = Vec::new();
    let mut v0 = 1;
    while pw(v0, 4) <= l {
        let mut v1 = 1;
        while pw(v0, 4) * pw(v1, 6) <= l {
            let mut v2 = 1;
            while pw(v0, 4) * pw(v1, 6) * pw(v2, 5) <= l {
                let mut v3 = 1;
                while pw(v0, 4) * pw(v1, 6) * pw(v2, 5) * pw(v3, 3) <= l {
                    let base = pw(v0, 4) * pw(v1, 6) * pw(v2, 5) * pw(v3, 3);
                    let mut y0 = 1;
                    while base * pw(y0, 4) <= l {
                        if crate::arith::is_squarefree(v0 * v2 * v3) && gcd(v0 * v3, y0) == 1 {
                            out.push(([v0, v1, v2, v3], y0));
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
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaTruncated {
    pub value: f64,
    pub quadrature_error: f64,
    /// Bound on the omitted tuples, conditional on [`PHI_BOUND_CONSTANT`].
    pub tail_bound: f64,
    pub terms: usize,
}

/// Rankin bound for the tuples beyond `cutoff`, from the majorant
/// `C d(v0) d(v1)^2 d(v2) d(v3) v2^{0.55} y0^{1.1} / (v0^2 v1^3 v2^3 v3^2 y0^3)`.
pub fn beta_tail_bound(cutoff: u64) -> Result<f64> {
    let x = cutoff.max(1) as f64;
    let mut best = f64::INFINITY;
    for i in 1..225 {
        let d = i as f64 / 1000.0;
        let value = PHI_BOUND_CONSTANT
            * x.powf(-d)
            * zeta(2.0 - 4.0 * d)?.powi(2)
            * zeta(3.0 - 6.0 * d)?.powi(4)
            / zeta(6.0 - 12.0 * d)?
            * zeta(2.45 - 5.0 * d)?.powi(2)
            * zeta(2.0 - 3.0 * d)?.powi(2)
            * zeta(1.9 - 4.0 * d)?;
        best = best.min(value);
    }
    Ok(best)
}

/// `sum |mu(v0 v2 v3)| phi(v, y0) / (v0^2 v1^3 v2^3 v3^2 y0^3)` over the
/// tuples of [`beta_tuples`].
pub fn beta_truncated(height_cutoff: u64, abs_tol: f64) -> Result<BetaTruncated> {
    let tuples = beta_tuples(height_cutoff);
    let per = abs_tol / tuples.len().max(1) as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    for (v, y0) in &tuples {
        let [v0, v1, v2, v3] = v.map(|c| c as f64);
        let y = *y0 as f64;
        let w = 1.0 / (v0 * v0 * v1.powi(3) * v2.powi(3) * v3 * v3 * y.powi(3));
        let p = phi(v, *y0, per / w)?;
        value += p.value * w;
        err += p.error * w;
    }
    Ok(BetaTruncated {
        value,
        quadrature_error: err,
        tail_bound: beta_tail_bound(height_cutoff)?,
        terms: tuples.len(),
    })
}

/// `2 B^{5/6} sum_{n <= B} Delta(n) g((n/B)^{1/6})`.
pub fn delta_main_term(table: &DeltaTable, b: u64) -> Result<f64> {
    if table.limit() < b {
        return Err(Error::InvalidInput(format!(
            "Delta table covers n <= {}, need {b}",
            table.limit()
        )));
    }
    let bf = b as f64;
    let mut sum = 0.0;
    for (n, c) in table.entries() {
        if n > b {
            break;
        }
        let x = (n as f64 / bf).powf(1.0 / 6.0);
        sum += ratio_to_f64(c) * (n as f64).powf(1.0 / 6.0) * g(x.min(1.0), G_TOL)?;
    }
    Ok(2.0 * bf.powf(5.0 / 6.0) * sum)
}

/// Least-squares slope of `y = slope B` (no intercept).
pub fn fit_linear_term(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::IllConditioned(format!(
            "{} points, need at least 3",
            points.len()
        )));
    }
    let bmax = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let den: f64 = points.iter().map(|p| (p.0 / bmax).powi(2)).sum();
    if !(den > 0.0) {
        return Err(Error::IllConditioned("all abscissae vanish".into()));
    }
    let num: f64 = points.iter().map(|p| p.0 / bmax * p.1).sum();
    Ok(num / den / bmax)
}

/// Slope of `log |y|` against `log B`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 != 0.0)
        .map(|&(b, y)| (b.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::IllConditioned(
            "fewer than two nonzero residuals".into(),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::IllConditioned("all grid points coincide".into()));
    }
    Ok(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub beta_hat: f64,
    /// `|beta(lower half) - beta(upper half)| / |beta_hat|`.
    pub window_drift: f64,
}

fn beta_of_slope(slope: f64) -> f64 {
    (slope - 12.0 / std::f64::consts::PI.powi(2)) / 2.0
}

/// `beta_hat` from `(B, exact_count - 2 B^{5/6} sum Delta g)` pairs.
pub fn beta_from_points(points: &[(f64, f64)]) -> Result<BetaFit> {
    let beta_hat = beta_of_slope(fit_linear_term(points)?);
    let half = points.len() / 2;
    let window_drift = if half >= 3 && points.len() - half >= 3 {
        let lo = beta_of_slope(fit_linear_term(&points[..half])?);
        let hi = beta_of_slope(fit_linear_term(&points[half..])?);
        (lo - hi).abs() / beta_hat.abs()
    } else {
        f64::NAN
    };
    Ok(BetaFit {
        beta_hat,
        window_drift,
    })
}

fn check_grid(grid: &[u64]) -> Result<u64> {
    let lo = *grid
        .iter()
        .min()
        .ok_or_else(|| Error::InvalidInput("empty B grid".into()))?;
    let hi = *grid.iter().max().expect("non-empty");
    if lo == 0 || hi > crate::surface::DIRECT_MAX_B {
        return Err(Error::envelope(
            "B grid",
            format!("{lo}..{hi}"),
            format!("1..{}", crate::surface::DIRECT_MAX_B),
        ));
    }
    Ok(hi)
}

/// Fits `beta_hat` over the grid, which must span at least two decades.
pub fn beta_empirical(grid: &[u64], threads: usize) -> Result<BetaFit> {
    let hi = check_grid(grid)?;
    let lo = *grid.iter().min().expect("non-empty");
    if (hi as f64) < 100.0 * lo as f64 {
        return Err(Error::IllConditioned(format!(
            "grid {lo}..{hi} spans less than two decades"
        )));
    }
    let profile = count_u_profile(hi, threads)?;
    let table = DeltaTable::build(hi);
    let points = grid_points(grid, &profile, &table, threads)?;
    beta_from_points(&points)
}

fn grid_points(
    grid: &[u64],
    profile: &[u64],
    table: &DeltaTable,
    threads: usize,
) -> Result<Vec<(f64, f64)>> {
    let mains: Vec<Result<f64>> = with_threads(threads, || {
        grid.par_iter()
            .map(|&b| delta_main_term(table, b))
            .collect()
    })?;
    grid.iter()
        .zip(mains)
        .map(|(&b, m)| Ok((b as f64, profile[b as usize] as f64 - m?)))
        .collect()
}

/// One grid point of the predictor comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTermReport {
    #[serde(rename = "B")]
    pub b: u64,
    /// `N_U(B)`
    pub exact_count: u64,
    pub predictor: f64,
    pub residual: f64,
    pub residual_exponent_estimate: f64,
}

/// Predictor over a grid of `B`, `beta_hat` taken from the same grid.
pub fn predictor_grid(grid: &[u64], threads: usize) -> Result<(BetaFit, Vec<MainTermReport>)> {
    let hi = check_grid(grid)?;
    let profile = count_u_profile(hi, threads)?;
    let table = DeltaTable::build(hi);
    let points = grid_points(grid, &profile, &table, threads)?;
    let fit = beta_from_points(&points)?;
    let linear = 12.0 / std::f64::consts::PI.powi(2) + 2.0 * fit.beta_hat;
    let residuals: Vec<(f64, f64)> = points.iter().map(|&(b, y)| (b, y - linear * b)).collect();
    let exponent = log_log_slope(&residuals)?;
    let reports = grid
        .iter()
        .zip(&residuals)
        .map(|(&b, &(_, r))| {
            let exact = profile[b as usize];
            MainTermReport {
                b,
                exact_count: exact,
                predictor: exact as f64 - r,
                residual: r,
                residual_exponent_estimate: exponent,
            }
        })
        .collect();
    Ok((fit, reports))
}

/// Predictor at a single `B` with a given `beta_hat`.
pub fn predictor(b: u64, beta_hat: f64, threads: usize) -> Result<MainTermReport> {
    let profile = count_u_profile(b, threads)?;
    let table = DeltaTable::build(b);
    let value = delta_main_term(&table, b)?
        + (12.0 / std::f64::consts::PI.powi(2) + 2.0 * beta_hat) * b as f64;
    let exact = profile[b as usize];
    Ok(MainTermReport {
        b,
        exact_count: exact,
        predictor: value,
        residual: exact as f64 - value,
        residual_exponent_estimate: f64::NAN,
    })
}

/// `sum_{H(x) <= B} H(x)^{-s}` from a cumulative profile `N(0..=B)`.
pub fn zeta_from_profile(s: f64, profile: &[u64]) -> f64 {
    profile
        .windows(2)
        .enumerate()
        .map(|(i, w)| (w[1] - w[0]) as f64 * ((i + 1) as f64).powf(-s))
        .sum()
}

/// The same sum as `s int_1^B t^{-s-1} N(t) dt + N(B) B^{-s}`, integrating
/// the step function exactly.
pub fn zeta_stieltjes_from_profile(s: f64, profile: &[u64]) -> f64 {
    let b = profile.len() - 1;
    let mut sum = 0.0;
    for (h, &n) in profile.iter().enumerate().take(b).skip(1) {
        sum += n as f64 * ((h as f64).powf(-s) - ((h + 1) as f64).powf(-s));
    }
    sum + profile[b] as f64 * (b as f64).powf(-s)
}

/// Partial height zeta function of `U` at real `s > 1`.
pub fn zeta_partial(s: f64, b: u64, threads: usize) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::InvalidInput(format!(
            "zeta_partial needs s > 1, got {s}"
        )));
    }
    Ok(zeta_from_profile(s, &count_u_profile(b, threads)?))
}

fn check_g11(s: f64) -> Result<()> {
    if !(s > 5.0 / 6.0) {
        return Err(Error::InvalidInput(format!("G11 needs s > 5/6, got {s}")));
    }
    Ok(())
}

/// `G11(s) = 12 s int_0^1 v^{6s-6} g(v) dv`, via `v = w^m` with
/// `m = 2/(6s-5)`.
pub fn g11(s: f64, abs_tol: f64) -> Result<Estimate> {
    check_g11(s)?;
    let m = 2.0 / (6.0 * s - 5.0);
    let guard = Guarded::new();
    // The weight m w integrates to m/2, so inner errors cost 6 s m each.
    let inner_tol = (abs_tol / (12.0 * s * m)).max(1e-13);
    let wc = v_crossing().powf(1.0 / m);
    let e = integrate_pieces(
        |w: f64| m * w * guard.run(|| g(w.powf(m).min(1.0), inner_tol)),
        &[0.0, wc, 1.0],
        abs_tol / (24.0 * s),
    )?;
    guard.finish(e.scale(12.0 * s))
}

/// `12 s / (6s - 5) (g(1) - int_0^1 v^{6s-5} g'(v) dv)`.
pub fn g11_by_parts(s: f64, abs_tol: f64) -> Result<Estimate> {
    check_g11(s)?;
    let m = 2.0 / (6.0 * s - 5.0);
    let guard = Guarded::new();
    let wc = v_crossing().powf(1.0 / m);
    let scale = 12.0 * s / (6.0 * s - 5.0);
    let inner = integrate_pieces(
        |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            m * w.powf(m + 1.0) * guard.run(|| g_prime(w.powf(m).min(1.0)))
        },
        &[0.0, wc, 1.0],
        abs_tol / (2.0 * scale),
    )?;
    let inner = guard.finish(inner)?;
    let g1 = g(1.0, abs_tol / (4.0 * scale))?;
    Ok(Estimate::new(
        scale * (g1 - inner.value),
        scale * (inner.error + abs_tol / (4.0 * scale)),
    ))
}
