//! Exact number-theoretic primitives: factorisation, the Jacobi symbol,
//! square roots modulo arbitrary moduli, the sawtooth function and the small
//! multiplicative functions used throughout the crate.

use num_integer::Integer;
use num_rational::{Ratio, Rational64};

use crate::error::{Error, Result};

const TRIAL_DIVISION_LIMIT: u64 = 1_000_000;

#[inline]
pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Reduces a signed integer into `[0, m)`.
#[inline]
pub fn rem_euclid(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = ((a % m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Deterministic Miller-Rabin for the whole `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// Brent's variant of Pollard rho; `n` must be odd and composite.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
        c += 1;
    }
}

fn factor_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_rho(n);
    factor_into(d, out);
    factor_into(n / d, out);
}

/// A positive integer together with its prime factorisation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factorization {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Factors `n` by trial division up to `10^6`, then Miller-Rabin and
    /// Pollard rho for whatever cofactor remains.
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("cannot factor 0".into()));
        }
        let mut factors = Vec::new();
        let mut m = n;
        let mut p = 2u64;
        while p <= TRIAL_DIVISION_LIMIT && p * p <= m {
            if m.is_multiple_of(p) {
                let mut e = 0;
                while m.is_multiple_of(p) {
                    m /= p;
                    e += 1;
                }
                factors.push((p, e));
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if m > 1 {
            let mut rest = Vec::new();
            factor_into(m, &mut rest);
            rest.sort_unstable();
            for q in rest {
                match factors.last_mut() {
                    Some((last, e)) if *last == q => *e += 1,
                    _ => factors.push((q, 1)),
                }
            }
        }
        Ok(Factorization { value: n, factors })
    }

    /// Builds a factorisation from prime/exponent pairs (merged and sorted).
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, u32)>) -> Self {
        let mut factors: Vec<(u64, u32)> = pairs.into_iter().filter(|&(_, e)| e > 0).collect();
        factors.sort_unstable();
        let mut merged: Vec<(u64, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            match merged.last_mut() {
                Some((q, f)) if *q == p => *f += e,
                _ => merged.push((p, e)),
            }
        }
        let value = merged.iter().map(|&(p, e)| p.pow(e)).product();
        Factorization {
            value,
            factors: merged,
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Product of the two factorisations.
    pub fn mul(&self, other: &Factorization) -> Factorization {
        Factorization::from_pairs(self.factors.iter().chain(other.factors.iter()).copied())
    }

    pub fn pow(&self, k: u32) -> Factorization {
        Factorization::from_pairs(self.factors.iter().map(|&(p, e)| (p, e * k)))
    }
}

/// Smallest-prime-factor table for fast repeated factorisation of small
/// integers.
#[derive(Debug, Clone)]
pub struct SpfSieve {
    spf: Vec<u32>,
}

impl SpfSieve {
    pub fn new(limit: u64) -> Self {
        let n = limit.max(1) as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        SpfSieve { spf }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Appends the prime/exponent pairs of `n` to `out` (unsorted across calls).
    pub fn factor_pairs(&self, mut n: u64, out: &mut Vec<(u64, u32)>) {
        debug_assert!(n >= 1 && n <= self.limit());
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }

    pub fn factorize(&self, n: u64) -> Factorization {
        let mut pairs = Vec::new();
        self.factor_pairs(n, &mut pairs);
        Factorization::from_pairs(pairs)
    }

    pub fn is_squarefree(&self, mut n: u64) -> bool {
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            n /= p;
            if n.is_multiple_of(p) {
                return false;
            }
        }
        true
    }
}

/// The Jacobi symbol `(a/n)` for odd positive `n`.
pub fn jacobi(a: i64, n: u64) -> Result<i32> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "Jacobi symbol needs an odd positive modulus, got {n}"
        )));
    }
    let mut a = rem_euclid(a as i128, n);
    let mut n = n;
    let mut sign = 1;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    Ok(if n == 1 { sign } else { 0 })
}

// Square root of a quadratic residue modulo an odd prime.
fn tonelli_shanks(a: u64, p: u64) -> u64 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if p % 4 == 3 {
        return pow_mod(a, (p + 1) / 4, p);
    }
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    r
}

/// Roots of `y^2 = a (mod p^j)` for a unit `a`, `j >= 1`.
fn unit_roots_prime_power(a: u64, p: u64, j: u32, out: &mut Vec<u64>) {
    let m = p.pow(j);
    let a = a % m;
    if p == 2 {
        match j {
            1 => out.push(1),
            2 => {
                if a % 4 == 1 {
                    out.extend([1, 3]);
                }
            }
            _ => {
                if a % 8 != 1 {
                    return;
                }
                // Lift a root one bit at a time.
                let mut r = 1u64;
                for i in 3..j {
                    let modulus = 1u64 << (i + 1);
                    if mul_mod(r, r, modulus) != a % modulus {
                        r += 1 << (i - 1);
                    }
                }
                let half = m / 2;
                let mut roots = [r, m - r, (r + half) % m, (m - r + half) % m];
                roots.sort_unstable();
                out.extend(roots);
            }
        }
        return;
    }
    if pow_mod(a % p, (p - 1) / 2, p) != 1 {
        return;
    }
    // Hensel lifting from the root modulo p.
    let mut r = tonelli_shanks(a % p, p);
    let mut pk = p;
    for _ in 1..j {
        let next = pk.saturating_mul(p);
        let fr = (mul_mod(r, r, next) as i128 - (a % next) as i128).rem_euclid(next as i128) as u64;
        let inv = inv_mod(mul_mod(2, r, next), next).expect("2r is a unit for odd p");
        r = (r as i128 - mul_mod(fr, inv, next) as i128).rem_euclid(next as i128) as u64;
        pk = next;
    }
    let r2 = (m - r) % m;
    out.push(r.min(r2));
    if r != r2 {
        out.push(r.max(r2));
    }
}

/// All `x` in `[0, p^k)` with `x^2 = a (mod p^k)`.
fn roots_prime_power(a: i128, p: u64, k: u32) -> Vec<u64> {
    let m = p.pow(k);
    let a = rem_euclid(a, m);
    let mut out = Vec::new();
    if a == 0 {
        let step = p.pow(k.div_ceil(2));
        out.extend((0..m / step).map(|i| i * step));
        return out;
    }
    let mut v = 0u32;
    let mut rest = a;
    while rest.is_multiple_of(p) {
        rest /= p;
        v += 1;
    }
    if v % 2 == 1 {
        return out;
    }
    let mut units = Vec::new();
    unit_roots_prime_power(rest, p, k - v, &mut units);
    let half = p.pow(v / 2);
    let lift = p.pow(k - v);
    for y in units {
        for t in 0..half {
            out.push(half * (y + t * lift));
        }
    }
    out.sort_unstable();
    out
}

fn eta_prime_power(a: i128, p: u64, k: u32) -> u64 {
    let m = p.pow(k);
    let a = rem_euclid(a, m);
    if a == 0 {
        return p.pow(k / 2);
    }
    let mut v = 0u32;
    let mut rest = a;
    while rest.is_multiple_of(p) {
        rest /= p;
        v += 1;
    }
    if v % 2 == 1 {
        return 0;
    }
    let j = k - v;
    let units = if p == 2 {
        match j {
            1 => 1,
            2 => {
                if rest % 4 == 1 {
                    2
                } else {
                    0
                }
            }
            _ => {
                if rest % 8 == 1 {
                    4
                } else {
                    0
                }
            }
        }
    } else if pow_mod(rest % p, (p - 1) / 2, p) == 1 {
        2
    } else {
        0
    };
    units * p.pow(v / 2)
}

/// Number of `n` in `[1, q]` with `n^2 = a (mod q)`, computed prime power by
/// prime power.
pub fn eta(a: i64, q: u64) -> Result<u64> {
    let fac = Factorization::new(q)?;
    Ok(eta_factored(a as i128, &fac))
}

pub fn eta_factored(a: i128, q: &Factorization) -> u64 {
    q.factors()
        .iter()
        .map(|&(p, k)| eta_prime_power(a, p, k))
        .product()
}

/// Square roots of `a` modulo the factored modulus, as sorted residues in
/// `[0, q)`.
pub fn sqrt_residues(a: i128, q: &Factorization) -> Vec<u64> {
    let mut roots = vec![0u64];
    let mut modulus = 1u64;
    for &(p, k) in q.factors() {
        let pk = p.pow(k);
        let local = roots_prime_power(a, p, k);
        if local.is_empty() {
            return Vec::new();
        }
        // CRT: x = r (mod modulus), x = s (mod pk).
        let inv = inv_mod(modulus % pk, pk).expect("coprime moduli");
        let next = modulus * pk;
        let mut combined = Vec::with_capacity(roots.len() * local.len());
        for &r in &roots {
            for &s in &local {
                let diff = (s as i128 - r as i128).rem_euclid(pk as i128) as u64;
                let t = mul_mod(diff, inv, pk);
                combined.push(r + modulus * t);
            }
        }
        roots = combined;
        modulus = next;
    }
    roots.sort_unstable();
    roots
}

/// All `rho` in `[1, q]` with `rho^2 = a (mod q)`; when `require_coprime` is
/// set only those with `gcd(rho, q) = 1` are kept.
pub fn sqrt_roots_mod(a: i64, q: u64, require_coprime: bool) -> Result<Vec<u64>> {
    let fac = Factorization::new(q)?;
    let mut roots: Vec<u64> = sqrt_residues(a as i128, &fac)
        .into_iter()
        .map(|r| if r == 0 { q } else { r })
        .filter(|&r| !require_coprime || gcd(r, q) == 1)
        .collect();
    roots.sort_unstable();
    Ok(roots)
}

/// The sawtooth `{t} - 1/2`.
#[inline]
pub fn psi(t: f64) -> f64 {
    t - t.floor() - 0.5
}

/// Exact sawtooth of a rational argument.
pub fn psi_exact(t: Ratio<i128>) -> Ratio<i128> {
    t - Ratio::from_integer(t.floor().to_integer()) - Ratio::new(1, 2)
}

/// Count of `n` in `(t1, t2]` with `n = a (mod q)`, together with the
/// sawtooth remainder `psi((t1-a)/q) - psi((t2-a)/q)`.
pub fn interval_count_residue(t1: f64, t2: f64, a: i64, q: u64) -> Result<(i64, f64)> {
    if q == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    if !(t2 >= t1) || !t1.is_finite() || !t2.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need t1 <= t2, got ({t1}, {t2})"
        )));
    }
    let q = q as f64;
    let a = a as f64;
    let lo = ((t1 - a) / q).floor();
    let hi = ((t2 - a) / q).floor();
    let r = psi((t1 - a) / q) - psi((t2 - a) / q);
    Ok(((hi - lo) as i64, r))
}

/// Exact-rational form of [`interval_count_residue`].
pub fn interval_count_residue_exact(
    t1: Ratio<i128>,
    t2: Ratio<i128>,
    a: i64,
    q: u64,
) -> Result<(i64, Ratio<i128>)> {
    if q == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    if t2 < t1 {
        return Err(Error::InvalidInput("need t1 <= t2".into()));
    }
    let q = Ratio::from_integer(q as i128);
    let a = Ratio::from_integer(a as i128);
    let lo = ((t1 - a) / q).floor().to_integer();
    let hi = ((t2 - a) / q).floor().to_integer();
    let r = psi_exact((t1 - a) / q) - psi_exact((t2 - a) / q);
    Ok(((hi - lo) as i64, r))
}

/// `sum_{0 <= x < q} psi((t - b x^2)/q)`, optionally restricted to
/// `gcd(x, q) = 1`. Evaluated directly.
pub fn psi_quadratic_sum(t: f64, b: i64, q: u64, coprime_only: bool) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    if gcd(rem_euclid(b as i128, q), q) != 1 {
        return Err(Error::InvalidInput(format!("gcd({b}, {q}) > 1")));
    }
    let bq = rem_euclid(b as i128, q);
    let qf = q as f64;
    let mut sum = 0.0;
    for x in 0..q {
        if coprime_only && gcd(x, q) != 1 {
            continue;
        }
        // Reduce b x^2 mod q first so the argument stays small.
        let bx2 = mul_mod(bq, mul_mod(x, x, q), q) as f64;
        sum += psi((t - bx2) / qf);
    }
    Ok(sum)
}

pub fn mu(n: u64) -> Result<i32> {
    let fac = Factorization::new(n)?;
    Ok(mu_factored(&fac))
}

pub fn mu_factored(fac: &Factorization) -> i32 {
    if fac.factors().iter().any(|&(_, e)| e > 1) {
        0
    } else if fac.factors().len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn omega(n: u64) -> Result<u32> {
    Ok(Factorization::new(n)?.factors().len() as u32)
}

/// `phi(n)/n = prod_{p | n} (1 - 1/p)`.
pub fn phi_star(n: u64) -> Result<Rational64> {
    let fac = Factorization::new(n)?;
    Ok(fac.primes().fold(Rational64::from_integer(1), |acc, p| {
        acc * Rational64::new(p as i64 - 1, p as i64)
    }))
}

/// `prod_{p | n} (1 + 1/p)^{-1}`.
pub fn phi_dagger(n: u64) -> Result<Rational64> {
    let fac = Factorization::new(n)?;
    Ok(fac.primes().fold(Rational64::from_integer(1), |acc, p| {
        acc * Rational64::new(p as i64, p as i64 + 1)
    }))
}

/// Squarefree test by factoring.
pub fn is_squarefree(n: u64) -> bool {
    match Factorization::new(n) {
        Ok(f) => f.factors().iter().all(|&(_, e)| e == 1),
        Err(_) => false,
    }
}

/// Divisors of a squarefree part: every product of a subset of `primes`,
/// returned with the Mobius sign.
pub fn squarefree_divisors(primes: &[u64]) -> Vec<(u64, i32)> {
    let mut out = vec![(1u64, 1i32)];
    for &p in primes {
        let len = out.len();
        for i in 0..len {
            let (d, s) = out[i];
            out.push((d * p, -s));
        }
    }
    out
}

/// Distinct primes dividing the product of the given integers.
pub fn distinct_primes(values: &[u64]) -> Result<Vec<u64>> {
    let mut primes = Vec::new();
    for &v in values {
        primes.extend(Factorization::new(v)?.primes());
    }
    primes.sort_unstable();
    primes.dedup();
    Ok(primes)
}

/// `floor(sqrt(n))` for `n >= 0`.
pub fn isqrt(n: u128) -> u128 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// `floor(n^(1/k))`.
pub fn iroot(n: u64, k: u32) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).powf(1.0 / k as f64).round() as u64;
    let pow = |x: u64| (x as u128).checked_pow(k).unwrap_or(u128::MAX);
    while x > 0 && pow(x) > n as u128 {
        x -= 1;
    }
    while pow(x + 1) <= n as u128 {
        x += 1;
    }
    x
}

/// `ceil(sqrt(n))`.
pub fn isqrt_ceil(n: u128) -> u128 {
    let r = isqrt(n);
    if r * r == n {
        r
    } else {
        r + 1
    }
}
