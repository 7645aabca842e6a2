//! The universal torsor `v2 y0^2 y4 - v0 y1^3 y2^2 + v3 y3^2 = 0` with its
//! coprimality conditions, the monomial lift to the surface and an exact
//! counter for `N(Q1,Q2;B)` through torsor points.

use std::time::Instant;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{is_squarefree, isqrt, isqrt_ceil, sqrt_residues, Factorization, SpfSieve};
use crate::error::{Error, Result};
use crate::parallel::with_threads;
use crate::surface::{CountRecord, Method, SurfacePoint, Vec5};

/// Largest `B` accepted by [`count_torsor`].
pub const TORSOR_MAX_B: u64 = 10_000_000;

/// A point `(v0..v3, y0..y4)` of the torsor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TorsorPoint {
    pub v: [u64; 4],
    pub y: [i64; 5],
}

fn gcd_u(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

fn gcd_i(a: i64, b: u64) -> u64 {
    a.unsigned_abs().gcd(&b)
}

/// The torsor equation and every coprimality condition, including
/// `|mu(v0 v2 v3)| = 1`, `gcd(v2 v3 y0, y2) = gcd(v0 v3, y0) = 1`.
pub fn is_torsor_point(v: &[u64; 4], y: &[i64; 5]) -> bool {
    let [v0, v1, v2, v3] = *v;
    let [y0, y1, y2, y3, y4] = *y;
    if v.contains(&0) || y.contains(&0) {
        return false;
    }
    if y0 <= 0 || y2 <= 0 || y3 <= 0 {
        return false;
    }
    let eq = v2 as i128 * (y0 as i128).pow(2) * y4 as i128
        - v0 as i128 * (y1 as i128).pow(3) * (y2 as i128).pow(2)
        + v3 as i128 * (y3 as i128).pow(2);
    if eq != 0 {
        return false;
    }
    let (y0u, y2u) = (y0 as u64, y2 as u64);
    let capri4 = gcd_i(y3, v0 * y0u * y2u) == 1 && gcd_i(y4, v1 * v2) == 1;
    let capri5 = gcd_i(y1, v0 * v1 * v2 * v3 * y0u) == 1;
    let temple =
        is_squarefree(v0 * v2 * v3) && gcd_u(v2 * v3 * y0u, y2u) == 1 && gcd_u(v0 * v3, y0u) == 1;
    capri4 && capri5 && temple
}

impl TorsorPoint {
    pub fn new(v: [u64; 4], y: [i64; 5]) -> Result<Self> {
        if !is_torsor_point(&v, &y) {
            return Err(Error::InvalidInput(format!(
                "{v:?}, {y:?} is not a torsor point"
            )));
        }
        Ok(TorsorPoint { v, y })
    }

    /// The five lifted coordinates, overflow-checked.
    pub fn monomials(&self) -> Result<Vec5> {
        let [v0, v1, v2, v3] = self.v.map(|c| c as i128);
        let [y0, y1, y2, y3, y4] = self.y.map(|c| c as i128);
        let mono = |terms: &[(i128, u32)]| -> Result<i64> {
            let mut acc: i128 = 1;
            for &(base, e) in terms {
                let p = base.checked_pow(e).ok_or(Error::Overflow("torsor lift"))?;
                acc = acc.checked_mul(p).ok_or(Error::Overflow("torsor lift"))?;
            }
            i64::try_from(acc).map_err(|_| Error::Overflow("torsor lift"))
        };
        Ok([
            mono(&[(v0, 4), (v1, 6), (v2, 5), (v3, 3), (y0, 4), (y2, 2)])?,
            mono(&[(v0, 2), (v1, 2), (v2, 1), (v3, 1), (y1, 2), (y2, 2)])?,
            mono(&[
                (v0, 3),
                (v1, 4),
                (v2, 3),
                (v3, 2),
                (y0, 2),
                (y1, 1),
                (y2, 2),
            ])?,
            mono(&[
                (v0, 2),
                (v1, 3),
                (v2, 2),
                (v3, 2),
                (y0, 1),
                (y2, 1),
                (y3, 1),
            ])?,
            y4 as i64,
        ])
    }
}

/// The surface point attached to a torsor point.
pub fn lift(t: &TorsorPoint) -> Result<SurfacePoint> {
    SurfacePoint::new(t.monomials()?)
}

/// `Psi(v, y)`: the largest of the `x0`, `x1`, `x3` monomials and `|y4|`.
pub fn psi_height(t: &TorsorPoint) -> Result<u64> {
    let x = t.monomials()?;
    Ok([x[0], x[1], x[3], x[4]]
        .iter()
        .map(|c| c.unsigned_abs())
        .max()
        .unwrap_or(0))
}

/// The bounds `V1, Y1, Y2, Y3` governing the torsor region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct RegionBounds {
    pub V1: f64,
    pub Y1: f64,
    pub Y2: f64,
    pub Y3: f64,
}

impl RegionBounds {
    /// `V1^3 Y1` in closed form.
    pub fn v1_cubed_y1(b: f64, v: &[u64; 4], y0: u64, y2: u64) -> f64 {
        let [v0, _, v2, v3] = v.map(|c| c as f64);
        let (y0, y2) = (y0 as f64, y2 as f64);
        b.powf(5.0 / 6.0)
            / (v0.powf(7.0 / 3.0)
                * v2.powf(13.0 / 6.0)
                * v3.powf(1.5)
                * y0.powf(4.0 / 3.0)
                * y2.powf(5.0 / 3.0))
    }
}

pub fn region_bounds(b: u64, v: &[u64; 4], y0: u64, y2: u64) -> Result<RegionBounds> {
    if b == 0 || v.contains(&0) || y0 == 0 || y2 == 0 {
        return Err(Error::InvalidInput(
            "region bounds need positive inputs".into(),
        ));
    }
    let [v0, v1, v2, v3] = v.map(|c| c as f64);
    let (bf, y0, y2) = (b as f64, y0 as f64, y2 as f64);
    let bounds = RegionBounds {
        V1: (bf / (v0.powi(4) * v2.powi(5) * v3.powi(3) * y0.powi(4) * y2.powi(2))).powf(1.0 / 6.0),
        Y1: (bf * v2 * y0 * y0 / (v0 * y2 * y2)).cbrt(),
        Y2: (bf / (v0.powi(4) * v1.powi(6) * v2.powi(5) * v3.powi(3) * y0.powi(4))).sqrt(),
        Y3: (bf * v2 * y0 * y0 / v3).sqrt(),
    };
    if bounds.V1 >= 1.0 {
        debug_assert!(bounds.V1 * bounds.Y1 <= bounds.V1.powi(3) * bounds.Y1 * (1.0 + 1e-12));
    }
    Ok(bounds)
}

/// An outer tuple `(v0, v1, v2, v3, y0, y2)` with its precomputed data.
#[derive(Debug, Clone)]
pub(crate) struct Outer {
    pub v: [u64; 4],
    pub y0: u64,
    pub y2: u64,
    modulus: Factorization,
}

/// Outer tuples obeying `v0^4 v1^6 v2^5 v3^3 y0^4 y2^2 <= B` and the
/// conditions on `v0 v2 v3`, `y0`, `y2` alone.
pub(crate) fn outer_tuples(b: u64) -> Vec<Outer> {
    let b = b as u128;
    let mut out = Vec::new();
    let sieve = SpfSieve::new(crate::arith::iroot(b as u64, 2).max(2));
    let pow = |x: u64, e: u32| (x as u128).pow(e);
    let mut v0 = 1u64;
    while pow(v0, 4) <= b {
        let mut v2 = 1u64;
        while pow(v0, 4) * pow(v2, 5) <= b {
            let mut v3 = 1u64;
            while pow(v0, 4) * pow(v2, 5) * pow(v3, 3) <= b {
                let base = pow(v0, 4) * pow(v2, 5) * pow(v3, 3);
                let sqf = gcd_u(v0, v2) == 1
                    && gcd_u(v0, v3) == 1
                    && gcd_u(v2, v3) == 1
                    && [v0, v2, v3].iter().all(|&c| sieve.is_squarefree(c));
                if sqf {
                    let mut v1 = 1u64;
                    while base * pow(v1, 6) <= b {
                        let mut y0 = 1u64;
                        while base * pow(v1, 6) * pow(y0, 4) <= b {
                            if gcd_u(v0 * v3, y0) == 1 {
                                let m = v2 * y0 * y0;
                                let mut pairs = Vec::new();
                                sieve.factor_pairs(v2, &mut pairs);
                                let mut y0p = Vec::new();
                                sieve.factor_pairs(y0, &mut y0p);
                                pairs.extend(y0p.into_iter().map(|(p, e)| (p, 2 * e)));
                                let modulus = Factorization::from_pairs(pairs);
                                debug_assert_eq!(modulus.value(), m);
                                let mut y2 = 1u64;
                                while base * pow(v1, 6) * pow(y0, 4) * pow(y2, 2) <= b {
                                    if gcd_u(v2 * v3 * y0, y2) == 1 {
                                        out.push(Outer {
                                            v: [v0, v1, v2, v3],
                                            y0,
                                            y2,
                                            modulus: modulus.clone(),
                                        });
                                    }
                                    y2 += 1;
                                }
                            }
                            y0 += 1;
                        }
                        v1 += 1;
                    }
                }
                v3 += 1;
            }
            v2 += 1;
        }
        v0 += 1;
    }
    out
}

/// Visits every torsor point with `Psi <= B` over one outer tuple, in the
/// order `y1`, then `y3`.
pub(crate) fn visit_outer(b: u64, o: &Outer, mut visit: impl FnMut(&TorsorPoint)) {
    let [v0, v1, v2, v3] = o.v;
    let (y0, y2) = (o.y0, o.y2);
    let bb = b as i128;
    let m = o.modulus.value() as i128;
    // x1 = v0^2 v1^2 v2 v3 y1^2 y2^2 <= B
    let x1_unit = (v0 * v0 * v1 * v1 * v2 * v3 * y2 * y2) as u128;
    let y1_max = isqrt(b as u128 / x1_unit) as i64;
    // x3 = v0^2 v1^3 v2^2 v3^2 y0 y2 y3 <= B
    let x3_unit =
        v0 as u128 * v0 as u128 * (v1 as u128).pow(3) * (v2 * v2 * v3 * v3 * y0 * y2) as u128;
    let y3_cap = (b as u128 / x3_unit) as i128;
    if y3_cap < 1 {
        return;
    }
    let v3_inv = crate::arith::inv_mod(v3, m as u64).expect("v3 is a unit modulo v2 y0^2");
    let capri5 = v0 * v1 * v2 * v3 * y0;
    let capri4_y3 = v0 * y0 * y2;
    let capri4_y4 = (v1 * v2) as i128;
    for y1 in (-y1_max..=y1_max).filter(|&y1| y1 != 0) {
        if gcd_i(y1, capri5) != 1 {
            continue;
        }
        let c = v0 as i128 * (y1 as i128).pow(3) * (y2 as i128).pow(2);
        // |v3 y3^2 - c| <= B m
        let upper = c + bb * m;
        if upper < v3 as i128 {
            continue;
        }
        let hi = (isqrt((upper / v3 as i128) as u128) as i128).min(y3_cap);
        let lower = c - bb * m;
        let lo = if lower <= v3 as i128 {
            1
        } else {
            isqrt_ceil(((lower + v3 as i128 - 1) / v3 as i128) as u128) as i128
        };
        if lo > hi {
            continue;
        }
        let target = (v0 as i128 * y1 as i128).rem_euclid(m) * v3_inv as i128 % m;
        let shift = (y1 as i128 * y2 as i128).rem_euclid(m);
        for rho in sqrt_residues(target, &o.modulus) {
            if gcd_u(rho, m as u64) != 1 && m > 1 {
                continue;
            }
            let class = rho as i128 * shift % m;
            let mut y3 = lo + (class - lo).rem_euclid(m);
            while y3 <= hi {
                let num = c - v3 as i128 * y3 * y3;
                if num != 0 {
                    let y4 = num / m;
                    if gcd_u(y3 as u64, capri4_y3) == 1 && y4.gcd(&capri4_y4) == 1 {
                        visit(&TorsorPoint {
                            v: o.v,
                            y: [y0 as i64, y1, y2 as i64, y3 as i64, y4 as i64],
                        });
                    }
                }
                y3 += m;
            }
        }
    }
}

fn check_b(b: u64) -> Result<()> {
    if b == 0 || b > TORSOR_MAX_B {
        return Err(Error::envelope(
            "torsor B",
            b,
            format!("1 <= B <= {TORSOR_MAX_B}"),
        ));
    }
    Ok(())
}

/// `#{(v, y) in T : Psi(v, y) <= B}`, which equals `N(Q1,Q2;B)`.
pub fn count_torsor(b: u64, threads: usize) -> Result<CountRecord> {
    check_b(b)?;
    let start = Instant::now();
    let outer = outer_tuples(b);
    let count = with_threads(threads, || {
        outer
            .par_iter()
            .map(|o| {
                let mut n = 0u64;
                visit_outer(b, o, |_| n += 1);
                n
            })
            .sum()
    })?;
    Ok(CountRecord::timed(b, Method::Torsor, start, count))
}

/// Every torsor point with `Psi <= B`, in enumeration order.
pub fn enumerate(b: u64, threads: usize) -> Result<Vec<TorsorPoint>> {
    check_b(b)?;
    let outer = outer_tuples(b);
    with_threads(threads, || {
        outer
            .par_iter()
            .flat_map_iter(|o| {
                let mut v = Vec::new();
                visit_outer(b, o, |t| v.push(*t));
                v
            })
            .collect()
    })
}

fn exact_div(a: u64, d: u64) -> Result<u64> {
    if d == 0 || !a.is_multiple_of(d) {
        return Err(Error::InvalidInput(format!("{d} does not divide {a}")));
    }
    Ok(a / d)
}

fn exact_sqrt(n: u64) -> Result<u64> {
    let r = isqrt(n as u128) as u64;
    if r * r != n {
        return Err(Error::InvalidInput(format!("{n} is not a square")));
    }
    Ok(r)
}

fn squarefree_part(n: u64) -> Result<u64> {
    Ok(Factorization::new(n)?
        .factors()
        .iter()
        .filter(|&&(_, e)| e % 2 == 1)
        .map(|&(p, _)| p)
        .product())
}

/// Recovers the torsor point above a vector counted by `N(Q1,Q2;B)`.
pub fn reduce_to_torsor(x: &Vec5) -> Result<TorsorPoint> {
    if x[0] <= 0 || x[1] <= 0 || x[3] <= 0 || x[2] == 0 || x[4] == 0 {
        return Err(Error::InvalidInput(format!(
            "{x:?} is outside the counted set"
        )));
    }
    let (x0, x1, x3) = (x[0] as u64, x[1] as u64, x[3] as u64);
    let z2 = gcd_u(x0, x1);
    let z0 = exact_sqrt(exact_div(x0, z2)?)?;
    if x[2] % (z0 * z2) as i64 != 0 {
        return Err(Error::InvalidInput(format!("{x:?} is not on the surface")));
    }
    let z1 = x[2] / (z0 * z2) as i64;
    let (s0, s2) = (squarefree_part(z0)?, squarefree_part(z2)?);
    let v3 = gcd_u(s0, s2);
    let v0 = s0 / v3;
    let v2 = s2 / v3;
    let y0pp = exact_sqrt(exact_div(z0, v0 * v3)?)?;
    let y2pp = exact_sqrt(exact_div(z2, v2 * v3)?)?;
    let y3pp = exact_div(x3, v0 * v2 * v3 * y0pp * y2pp)?;
    let y0p = exact_div(y0pp, v2)?;
    let y2p = exact_div(y2pp, v0)?;
    let y3p = exact_div(y3pp, v3)?;
    let v1 = gcd_u(gcd_u(y0p, y2p), y3p);
    let t = TorsorPoint::new(
        [v0, v1, v2, v3],
        [
            (y0p / v1) as i64,
            z1,
            (y2p / v1) as i64,
            (y3p / v1) as i64,
            x[4],
        ],
    )?;
    if t.monomials()? != *x {
        return Err(Error::InvalidInput(format!("{x:?} does not lift back")));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        assert!(is_torsor_point(&[1, 1, 1, 1], &[1, -1, 1, 1, -2]));
        assert!(!is_torsor_point(&[1, 1, 1, 1], &[2, 1, 2, 1, -1]));
        assert!(!is_torsor_point(&[1, 1, 1, 1], &[1, 1, 1, 1, 0]));
    }

    #[test]
    fn lift_examples() {
        let t = TorsorPoint::new([1, 1, 1, 1], [1, -1, 1, 1, -2]).unwrap();
        assert_eq!(lift(&t).unwrap().coords(), [1, 1, -1, 1, -2]);
        assert_eq!(psi_height(&t).unwrap(), 2);
        let t = TorsorPoint::new([1, 1, 1, 1], [1, 2, 1, 3, -1]).unwrap();
        assert_eq!(lift(&t).unwrap().coords(), [1, 4, 2, 3, -1]);
        assert_eq!(psi_height(&t).unwrap(), 4);
        // y4 = y1^3 - y3^2 = 0 is excluded.
        assert!(TorsorPoint::new([1, 1, 1, 1], [1, 1, 1, 1, 0]).is_err());
    }

    #[test]
    fn lift_overflow_is_reported() {
        let t = TorsorPoint {
            v: [1, 1 << 20, 1, 1],
            y: [1, 1, 1, 1, 1],
        };
        assert_eq!(t.monomials(), Err(Error::Overflow("torsor lift")));
    }

    #[test]
    fn region_bound_examples() {
        let r = region_bounds(1, &[1, 1, 1, 1], 1, 1).unwrap();
        assert_eq!((r.V1, r.Y1, r.Y2, r.Y3), (1.0, 1.0, 1.0, 1.0));
        let r = region_bounds(64, &[1, 1, 1, 1], 1, 1).unwrap();
        for (got, want) in [(r.V1, 2.0), (r.Y1, 4.0), (r.Y2, 8.0), (r.Y3, 8.0)] {
            assert!((got - want).abs() <= want * 2f64.powi(-40));
        }
        let r = region_bounds(1_000_000, &[1, 2, 1, 1], 1, 1).unwrap();
        assert!((r.Y2 - 125.0).abs() <= 125.0 * 2f64.powi(-40));
    }

    #[test]
    fn closed_form_of_v1_cubed_y1() {
        for (b, v, y0, y2) in [
            (1e6, [1u64, 1, 2, 3], 1u64, 5u64),
            (3e7, [2, 1, 1, 3], 5, 7),
        ] {
            let r = region_bounds(b as u64, &v, y0, y2).unwrap();
            let closed = RegionBounds::v1_cubed_y1(b, &v, y0, y2);
            assert!((r.V1.powi(3) * r.Y1 / closed - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_counts() {
        assert_eq!(count_torsor(1, 1).unwrap().count, 0);
        assert!(count_torsor(0, 1).is_err());
    }
}
