//! Ingredients of the conjectured leading constant: the intersection
//! lattice of the minimal desingularisation, the effective-cone volume
//! `alpha`, local densities `N(p^r)`, the archimedean density `tau_inf` and
//! the Euler product `tau`.

use num_integer::Integer;
use num_rational::Rational64;
use serde::{Deserialize, Serialize, Serializer};

use crate::asymptotics::f;
use crate::error::{Error, Result};
use crate::quadrature::{
    integrate, integrate_pieces, integrate_sqrt_left, integrate_to_infinity, Estimate,
};

/// `12 alpha = 1/28800`.
pub const LEADING_DENOMINATOR: f64 = 28_800.0;

/// Golden ratio; `u^3 = phi` is where `(u^3+1)^{1/2} = u^3` first holds.
pub(crate) const GOLDEN: f64 = 1.618_033_988_749_895;

fn ratio_str<S: Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

/// Intersection pairing on `E1..E6` and the anticanonical class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionLattice {
    pub gram: [[i64; 6]; 6],
    pub anticanonical: [i64; 6],
}

impl IntersectionLattice {
    pub fn d5() -> Self {
        IntersectionLattice {
            gram: [
                [-2, 1, 1, 1, 0, 0],
                [1, -2, 0, 0, 0, 1],
                [1, 0, -2, 0, 0, 0],
                [1, 0, 0, -2, 1, 0],
                [0, 0, 0, 1, -2, 0],
                [0, 1, 0, 0, 0, -1],
            ],
            anticanonical: [6, 5, 3, 4, 2, 4],
        }
    }

    /// `D . E` for coefficient vectors in the `E_i` basis.
    pub fn pair(&self, d: &[i64; 6], e: &[i64; 6]) -> i64 {
        (0..6)
            .map(|i| (0..6).map(|j| d[i] * self.gram[i][j] * e[j]).sum::<i64>())
            .sum()
    }

    pub fn anticanonical_degree(&self) -> i64 {
        self.pair(&self.anticanonical, &self.anticanonical)
    }
}

/// Checks symmetry, adjunction `-K . E_i = 2 + E_i^2` for every generator
/// and `(-K)^2 = 4`, listing every violation.
pub fn verify_lattice(lattice: &IntersectionLattice) -> Result<()> {
    let mut problems = Vec::new();
    for i in 0..6 {
        for j in 0..i {
            if lattice.gram[i][j] != lattice.gram[j][i] {
                problems.push(format!("gram not symmetric at ({i},{j})"));
            }
        }
        let mut e = [0i64; 6];
        e[i] = 1;
        let lhs = lattice.pair(&lattice.anticanonical, &e);
        let rhs = 2 + lattice.gram[i][i];
        if lhs != rhs {
            problems.push(format!(
                "adjunction fails for E{}: -K.E = {lhs}, 2 + E^2 = {rhs}",
                i + 1
            ));
        }
    }
    let deg = lattice.anticanonical_degree();
    if deg != 4 {
        problems.push(format!("(-K)^2 = {deg}, expected 4"));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidInput(problems.join("; ")))
    }
}

/// Volume of `{t >= 0 : sum a_i t_i <= 1}`, i.e. `1 / (n! prod a_i)`.
pub fn simplex_volume(weights: &[i64]) -> Rational64 {
    let n = weights.len() as i64;
    let factorial: i64 = (1..=n).product();
    Rational64::new(1, factorial * weights.iter().product::<i64>())
}

/// `alpha` as an exact rational: the hyperplane section of the effective
/// cone has a quarter of the volume of the projected simplex.
pub fn alpha_exact() -> Rational64 {
    simplex_volume(&[6, 5, 3, 4, 2]) * Rational64::new(1, 4)
}

/// `N(p^r)` with its normalisation and the limiting density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalDensityReport {
    pub p: u64,
    pub r: u32,
    pub raw_count: u64,
    pub scaled: f64,
    #[serde(serialize_with = "ratio_str")]
    pub closed_form: Rational64,
    pub relative_deviation: f64,
}

/// Largest modulus accepted by [`omega_p_bruteforce`]: the structured scan
/// costs about `q^3` steps.
pub const DENSITY_MAX_MODULUS: u64 = 1_000;

/// `1 + 6/p + 1/p^2`.
pub fn omega_p_closed(p: u64) -> Rational64 {
    let p = p as i64;
    Rational64::new(p * p + 6 * p + 1, p * p)
}

/// `N(q) = #{x mod q : Q1(x) = Q2(x) = 0 mod q}`, by looping over
/// `(x0, x2)`, solving `x0 x1 = x2^2` for `x1` and `x0 x4 = x1 x2 - x3^2` for
/// `x4` as linear congruences.
pub fn count_mod(q: u64) -> Result<u64> {
    if q == 0 || q > DENSITY_MAX_MODULUS {
        return Err(Error::envelope(
            "modulus",
            q,
            format!("1 <= q <= {DENSITY_MAX_MODULUS}"),
        ));
    }
    let qi = q as i64;
    // x^2 mod q and linear-congruence data are tabulated once.
    let squares: Vec<i64> = (0..qi).map(|x| x * x % qi).collect();
    let mut total = 0u64;
    for x0 in 0..qi {
        let g = x0.gcd(&qi);
        let step = qi / g;
        // x0/g is invertible modulo q/g.
        let inv =
            crate::arith::inv_mod((x0 / g) as u64 % step as u64, step as u64).unwrap_or(0) as i64;
        for x2 in 0..qi {
            let rhs = squares[x2 as usize];
            if rhs % g != 0 {
                continue;
            }
            let base = (rhs / g) % step * inv % step;
            for k in 0..g {
                let x1 = base + k * step;
                let x1x2 = x1 * x2 % qi;
                for x3 in 0..qi {
                    if (x1x2 - squares[x3 as usize]).rem_euclid(g) == 0 {
                        total += g as u64;
                    }
                }
            }
        }
    }
    Ok(total)
}

/// `N(p^r)` and its comparison with `1 + 6/p + 1/p^2`.
pub fn omega_p_bruteforce(p: u64, r: u32) -> Result<LocalDensityReport> {
    if !crate::arith::is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    if r == 0 {
        return Err(Error::InvalidInput("exponent must be positive".into()));
    }
    let q = p
        .checked_pow(r)
        .filter(|&q| q <= DENSITY_MAX_MODULUS)
        .ok_or_else(|| {
            Error::envelope(
                "p^r",
                format!("{p}^{r}"),
                format!("<= {DENSITY_MAX_MODULUS}"),
            )
        })?;
    let raw_count = count_mod(q)?;
    let scaled = raw_count as f64 / (q as f64).powi(3);
    let closed_form = omega_p_closed(p);
    let closed = *closed_form.numer() as f64 / *closed_form.denom() as f64;
    Ok(LocalDensityReport {
        p,
        r,
        raw_count,
        scaled,
        closed_form,
        relative_deviation: (scaled - closed).abs() / closed,
    })
}

/// Largest `r` with `p^{4r} <= 10^9`.
pub fn largest_feasible_exponent(p: u64) -> u32 {
    let mut r = 0;
    while (p as u128).pow(4 * (r + 1)) <= 1_000_000_000 {
        r += 1;
    }
    r
}

// Inner integral of f(., v) over [lo, hi] with lo, hi inside [-1, 1/v]
// splitting at -1, 1 (square-root endpoints) and u_c where sqrt(u^3+1) = v^-3.
fn inner_u_integral(v: f64, tol: f64) -> Result<Estimate> {
    let fv = |u: f64| f(u, v);
    let left = integrate_sqrt_left(fv, -1.0, 0.0, tol / 4.0)?;
    let top = if v > 0.0 { 1.0 / v } else { f64::INFINITY };
    let uc = if v > 0.0 {
        (v.powi(-6) - 1.0).max(0.0).cbrt()
    } else {
        f64::INFINITY
    };
    // [0, min(1, top)], kink at uc if inside.
    let mid_end = top.min(1.0);
    let mut breaks = vec![0.0];
    if uc > 0.0 && uc < mid_end {
        breaks.push(uc);
    }
    breaks.push(mid_end);
    let middle = integrate_pieces(fv, &breaks, tol / 4.0)?;
    if top <= 1.0 {
        return Ok(left + middle);
    }
    // [1, top]: square root at 1, possible kink at uc, long algebraic tail.
    let near_end = top.min(2.0);
    let near = if uc > 1.0 && uc < near_end {
        integrate_sqrt_left(fv, 1.0, uc, tol / 8.0)? + integrate(fv, uc, near_end, tol / 8.0)?
    } else {
        integrate_sqrt_left(fv, 1.0, near_end, tol / 4.0)?
    };
    if top <= 2.0 {
        return Ok(left + middle + near);
    }
    let far = if top.is_infinite() {
        integrate_to_infinity(fv, 2.0, tol / 4.0)?
    } else {
        // u = 2/s^2 maps [2, top] onto [sqrt(2/top), 1].
        let s_lo = (2.0 / top).sqrt();
        let mut breaks = vec![s_lo];
        if uc > 2.0 && uc < top {
            breaks.push((2.0 / uc).sqrt());
        }
        breaks.push(1.0);
        integrate_pieces(
            |s| f(2.0 / (s * s), v) * 4.0 / (s * s * s),
            &breaks,
            tol / 4.0,
        )?
    };
    Ok(left + middle + near + far)
}

/// `v` at which the kink `u_c` meets the upper limit `1/v`.
pub fn v_crossing() -> f64 {
    GOLDEN.powf(-1.0 / 3.0)
}

/// `tau_inf = int_0^1 int_{-1}^{1/v} f(u, v) du dv` by nested adaptive
/// quadrature, half of the tolerance going to each level.
pub fn tau_infinity(abs_tol: f64) -> Result<Estimate> {
    if !(abs_tol >= 1e-12) {
        return Err(Error::InvalidInput(format!(
            "tolerance {abs_tol} below 1e-12"
        )));
    }
    let inner_tol = abs_tol / 2.0;
    let outer_tol = abs_tol / 2.0;
    let inner_err = std::cell::Cell::new(0.0f64);
    let failure = std::cell::RefCell::new(None);
    let g = |v: f64| {
        if failure.borrow().is_some() {
            return 0.0;
        }
        match inner_u_integral(v, inner_tol) {
            Ok(e) => {
                inner_err.set(inner_err.get().max(e.error));
                e.value
            }
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                0.0
            }
        }
    };
    let vc = v_crossing();
    // g(v) - g(0) behaves like sqrt(v) near 0.
    let near = integrate(|w| 2.0 * w * g(w * w), 0.0, vc.sqrt(), outer_tol / 2.0)?;
    let far = integrate(g, vc, 1.0, outer_tol / 2.0)?;
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    let total = near + far;
    Ok(Estimate::new(total.value, total.error + inner_err.get()))
}

/// `(omega_inf_plus, omega_inf_minus)`, each from its own representation.
///
/// The plus part integrates over `v` in closed form for each `u >= 0`; the
/// minus part is a nested quadrature of `min(sqrt(u^3+1), v^-3)` over
/// `[0,1] x [-1,0]`.
pub fn omega_infinity_parts(abs_tol: f64) -> Result<(Estimate, Estimate)> {
    let h = |u: f64| {
        let s = (u * u * u + 1.0).sqrt();
        let m = (u * u * u - 1.0).max(0.0).sqrt();
        let cap = if u > 1.0 { 1.0 / u } else { 1.0 };
        let tc = (u * u * u + 1.0).powf(-1.0 / 6.0);
        if tc >= cap {
            // s - m without cancellation for large u.
            cap * 2.0 / (s + m)
        } else {
            s * tc + 0.5 * (tc.powi(-2) - cap.powi(-2)) - cap * m
        }
    };
    let tol = abs_tol / 12.0;
    let uc = GOLDEN.cbrt();
    let plus = integrate(h, 0.0, 1.0, tol / 4.0)?
        + integrate_sqrt_left(h, 1.0, uc, tol / 4.0)?
        + integrate(h, uc, 2.0, tol / 4.0)?
        + integrate_to_infinity(h, 2.0, tol / 4.0)?;
    let inner_fail = std::cell::RefCell::new(None);
    let inner_err = std::cell::Cell::new(0.0f64);
    let minus_inner = |v: f64| {
        let cap = if v > 0.0 { v.powi(-3) } else { f64::INFINITY };
        match integrate_sqrt_left(
            |u: f64| (u * u * u + 1.0).max(0.0).sqrt().min(cap),
            -1.0,
            0.0,
            tol / 4.0,
        ) {
            Ok(e) => {
                inner_err.set(inner_err.get().max(e.error));
                e.value
            }
            Err(e) => {
                inner_fail.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let minus = integrate(minus_inner, 0.0, 1.0, tol / 4.0)?;
    if let Some(e) = inner_fail.into_inner() {
        return Err(e);
    }
    let minus = Estimate::new(minus.value, minus.error + inner_err.get());
    Ok((plus.scale(12.0), minus.scale(12.0)))
}

/// `(1 - 1/p)^6 (1 + 6/p + 1/p^2)`.
pub fn tau_factor(p: u64) -> f64 {
    let x = 1.0 / p as f64;
    (1.0 - x).powi(6) * (1.0 + 6.0 * x + x * x)
}

/// Constant `C` in `|log tau_factor(p)| <= C / p^2` for `p >= 11`.
pub const TAU_LOG_CONSTANT: f64 = 21.0;

/// Primes up to `n` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            for j in (i * i..=n).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    (0..=n).filter(|&i| sieve[i]).map(|i| i as u64).collect()
}

/// Euler product for `tau` with error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// `prod_{p <= cutoff} tau_factor(p)` and a bound on `|tau - partial|`,
/// from `sum_{p > P} |log factor| <= 21 sum_{n > P} n^{-2} <= 21/P`.
pub fn tau_euler(prime_cutoff: u64) -> Result<EulerValue> {
    // The log bound is verified from p = 11 on, which covers every omitted
    // prime once the cutoff reaches 10.
    if prime_cutoff < 10 {
        return Err(Error::envelope("prime cutoff", prime_cutoff, ">= 10"));
    }
    let mut log_sum = 0.0;
    for p in primes_up_to(prime_cutoff) {
        let factor = tau_factor(p);
        if p >= 11 {
            debug_assert!(factor.ln().abs() <= TAU_LOG_CONSTANT / (p * p) as f64);
        }
        log_sum += factor.ln();
    }
    let value = log_sum.exp();
    let t = TAU_LOG_CONSTANT / prime_cutoff as f64;
    Ok(EulerValue {
        value,
        tail_bound: value * t.exp_m1(),
    })
}

/// `tau_inf * tau / 28800` with a propagated error.
pub fn leading_constant(abs_tol: f64, prime_cutoff: u64) -> Result<Estimate> {
    let ti = tau_infinity(abs_tol)?;
    let tau = tau_euler(prime_cutoff)?;
    let value = ti.value * tau.value / LEADING_DENOMINATOR;
    let error =
        (ti.error * (tau.value + tau.tail_bound) + ti.value * tau.tail_bound) / LEADING_DENOMINATOR;
    Ok(Estimate::new(value, error))
}

/// Everything the `constants` command reports.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    #[serde(serialize_with = "ratio_str")]
    pub alpha: Rational64,
    #[serde(serialize_with = "ratio_str")]
    pub simplex_volume: Rational64,
    pub anticanonical_degree: i64,
    pub lattice_ok: bool,
    pub tau_infinity: Estimate,
    pub omega_infinity_plus: Estimate,
    pub omega_infinity_minus: Estimate,
    pub tau: EulerValue,
    pub prime_cutoff: u64,
    pub omega_p: Vec<LocalDensityReport>,
    pub leading_constant: Estimate,
}

/// Builds the full report; `densities` lists `(p, r)` pairs to tabulate.
pub fn constants_report(
    abs_tol: f64,
    prime_cutoff: u64,
    densities: &[(u64, u32)],
) -> Result<ConstantsReport> {
    let lattice = IntersectionLattice::d5();
    let tau_infinity = tau_infinity(abs_tol)?;
    let (plus, minus) = omega_infinity_parts(abs_tol)?;
    let tau = tau_euler(prime_cutoff)?;
    let omega_p = densities
        .iter()
        .map(|&(p, r)| omega_p_bruteforce(p, r))
        .collect::<Result<Vec<_>>>()?;
    let value = tau_infinity.value * tau.value / LEADING_DENOMINATOR;
    let error = (tau_infinity.error * (tau.value + tau.tail_bound)
        + tau_infinity.value * tau.tail_bound)
        / LEADING_DENOMINATOR;
    Ok(ConstantsReport {
        alpha: alpha_exact(),
        simplex_volume: simplex_volume(&[6, 5, 3, 4, 2]),
        anticanonical_degree: lattice.anticanonical_degree(),
        lattice_ok: verify_lattice(&lattice).is_ok(),
        tau_infinity,
        omega_infinity_plus: plus,
        omega_infinity_minus: minus,
        tau,
        prime_cutoff,
        omega_p,
        leading_constant: Estimate::new(value, error),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_is_exact() {
        assert_eq!(simplex_volume(&[6, 5, 3, 4, 2]), Rational64::new(1, 86_400));
        assert_eq!(alpha_exact(), Rational64::new(1, 345_600));
        assert_eq!(alpha_exact() * 12, Rational64::new(1, 28_800));
    }

    #[test]
    fn lattice_rows() {
        let l = IntersectionLattice::d5();
        verify_lattice(&l).unwrap();
        assert_eq!(l.anticanonical_degree(), 4);
        let e1 = [1, 0, 0, 0, 0, 0];
        let e6 = [0, 0, 0, 0, 0, 1];
        assert_eq!(l.pair(&l.anticanonical, &e1), 0);
        assert_eq!(l.pair(&l.anticanonical, &e6), 1);
    }

    #[test]
    fn broken_lattice_is_reported() {
        let mut l = IntersectionLattice::d5();
        l.anticanonical[5] = 3;
        let err = verify_lattice(&l).unwrap_err().to_string();
        assert!(err.contains("E6") && err.contains("(-K)^2"));
    }

    #[test]
    fn small_moduli() {
        assert_eq!(count_mod(1).unwrap(), 1);
        assert_eq!(count_mod(2).unwrap(), 8);
        assert_eq!(count_mod(3).unwrap(), 27);
        assert_eq!(count_mod(4).unwrap(), 96);
        assert_eq!(count_mod(9).unwrap(), 1053);
        assert!(count_mod(0).is_err());
        assert!(omega_p_bruteforce(4, 1).is_err());
    }

    #[test]
    fn feasible_exponents() {
        assert_eq!(largest_feasible_exponent(2), 7);
        assert_eq!(largest_feasible_exponent(3), 4);
        assert_eq!(largest_feasible_exponent(5), 3);
    }

    #[test]
    fn tau_factor_values() {
        assert!((tau_factor(2) - 17.0 / 256.0).abs() < 1e-16);
        let p = 1e4;
        let series = 1.0 - 20.0 / (p * p) + 64.0 / (p * p * p);
        assert!((tau_factor(10_000) - series).abs() < 1e-10);
        for p in primes_up_to(200_000).into_iter().filter(|&p| p >= 11) {
            assert!(tau_factor(p).ln().abs() <= TAU_LOG_CONSTANT / (p * p) as f64);
        }
    }

    #[test]
    fn tau_euler_is_self_consistent() {
        let a = tau_euler(10_000).unwrap();
        let b = tau_euler(100_000).unwrap();
        assert!((a.value - b.value).abs() <= a.tail_bound);
        assert!(b.value < a.value);
        let coarse = tau_euler(50).unwrap();
        assert!(coarse.tail_bound > b.tail_bound);
        assert!((coarse.value - b.value).abs() <= coarse.tail_bound);
        assert!(tau_euler(9).is_err());
    }

    #[test]
    fn inner_integral_at_one() {
        let e = inner_u_integral(1.0, 1e-12).unwrap();
        let c0 = integrate_sqrt_left(|u: f64| (u * u * u + 1.0).sqrt(), -1.0, 0.0, 1e-13).unwrap();
        assert!((e.value - 1.0 - c0.value).abs() < 1e-11);
    }
}
