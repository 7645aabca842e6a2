//! Globally adaptive Gauss-Kronrod (7/15) quadrature with caller-supplied
//! break points, plus the substitutions used for square-root endpoints and
//! algebraically decaying tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_INTERVALS: usize = 20_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// A quadrature value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Estimate { value, error }
    }

    pub fn scale(self, c: f64) -> Self {
        Estimate::new(self.value * c, self.error * c.abs())
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

impl std::ops::Sub for Estimate {
    type Output = Estimate;
    fn sub(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value - rhs.value, self.error + rhs.error)
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::new(0.0, 0.0), |a, b| a + b)
    }
}

/// One 15-point Kronrod panel: returns (integral, error estimate).
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, &x) in XGK[..7].iter().enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        fv[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let result = kronrod * h;
    let resasc = asc * h.abs();
    let resabs = abs_sum * h.abs();
    let mut err = ((kronrod - gauss) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then(other.a.total_cmp(&self.a))
    }
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from one panel
/// per break interval and bisecting the worst panel until the summed error
/// estimate is below `abs_tol`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], abs_tol: f64) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Err(Error::InvalidInput("need at least two break points".into()));
    }
    if !(abs_tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be positive, got {abs_tol}"
        )));
    }
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b >= a) {
            return Err(Error::InvalidInput(format!(
                "break points not sorted: {a} > {b}"
            )));
        }
        if b > a {
            let (value, error) = gauss_kronrod(&f, a, b);
            total_err += error;
            heap.push(Panel { a, b, value, error });
        }
    }
    let mut steps = 0usize;
    loop {
        // Refresh the running sum now and then to shed rounding drift.
        steps += 1;
        if steps.is_multiple_of(1024) {
            total_err = heap.iter().map(|p| p.error).sum();
        }
        if total_err <= abs_tol {
            break;
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Convergence(format!(
                "error estimate {total_err:.3e} above {abs_tol:.1e} after {MAX_INTERVALS} panels"
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        total_err -= worst.error;
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel is at machine resolution; accept it as is.
            if total_err <= abs_tol {
                heap.push(Panel {
                    error: 0.0,
                    ..worst
                });
                continue;
            }
            return Err(Error::Convergence(format!(
                "panel [{}, {}] cannot be bisected further",
                worst.a, worst.b
            )));
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gauss_kronrod(&f, a, b);
            total_err += error;
            heap.push(Panel { a, b, value, error });
        }
    }
    // Sum in a fixed order so the result does not depend on heap layout.
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(panels.iter().map(|p| Estimate::new(p.value, p.error)).sum())
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Estimate> {
    integrate_pieces(f, &[a, b], abs_tol)
}

/// `int_a^b f` for `f` with a square-root type endpoint at `a`, via
/// `u = a + w^2`.
pub fn integrate_sqrt_left<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<Estimate> {
    let w_max = (b - a).max(0.0).sqrt();
    integrate(|w| 2.0 * w * f(a + w * w), 0.0, w_max, abs_tol)
}

/// `int_a^b f` for `f` with a square-root type endpoint at `b`, via
/// `u = b - w^2`.
pub fn integrate_sqrt_right<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<Estimate> {
    let w_max = (b - a).max(0.0).sqrt();
    integrate(|w| 2.0 * w * f(b - w * w), 0.0, w_max, abs_tol)
}

/// `int_a^inf f` for `a > 0` and `f = O(u^{-3/2})`, via `u = a / s^2`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64) -> Result<Estimate> {
    if !(a > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tail start must be positive, got {a}"
        )));
    }
    integrate(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let u = a / (s * s);
            f(u) * 2.0 * a / (s * s * s)
        },
        0.0,
        1.0,
        abs_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let e = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-12).unwrap();
        assert!((e.value - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn kinked_integrand_with_breaks() {
        let e = integrate_pieces(|x: f64| (x - 0.3).abs(), &[0.0, 0.3, 1.0], 1e-12).unwrap();
        assert!((e.value - (0.045 + 0.245)).abs() < 1e-14);
        let e = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-10).unwrap();
        assert!((e.value - 0.29).abs() < 1e-10);
    }

    #[test]
    fn sqrt_endpoint() {
        let e = integrate_sqrt_left(|u: f64| (u - 1.0).sqrt(), 1.0, 2.0, 1e-12).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-13);
        let e = integrate_sqrt_right(|u: f64| (1.0 - u).max(0.0).sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn algebraic_tail() {
        let e = integrate_to_infinity(|u: f64| u.powf(-1.5), 4.0, 1e-12).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        let e = integrate_to_infinity(|u: f64| 1.0 / (1.0 + u * u), 1.0, 1e-12).unwrap();
        assert!((e.value - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn error_estimate_is_honest_on_jumps() {
        let f = |x: f64| if x < 1.0 / 3.0 { 1.0 } else { -2.0 };
        let e = integrate(f, 0.0, 1.0, 1e-9).unwrap();
        assert!((e.value - (1.0 / 3.0 - 4.0 / 3.0)).abs() <= e.error.max(1e-9));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(integrate(|x| x, 0.0, 1.0, 0.0).is_err());
        assert!(integrate_pieces(|x| x, &[1.0, 0.0], 1e-6).is_err());
        assert!(integrate_pieces(|x| x, &[1.0], 1e-6).is_err());
    }
}
