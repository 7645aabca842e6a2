//! Independent oracles for the exact counters and closed forms.

use std::collections::BTreeSet;

use manin_d5::asymptotics::{beta_tuples, phi_bound, phi_pm, Sign};
use manin_d5::constants::{count_mod, simplex_volume};
use manin_d5::surface::{
    count_degenerate, count_direct, count_naive, direct_points, naive_points, normalize_sign, Vec5,
};
use manin_d5::torsor::{count_torsor, enumerate, lift, reduce_to_torsor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Every nonzero primitive vector in `[-B, B]^5` on the surface.
fn full_box(b: i64) -> Vec<Vec5> {
    let mut out = Vec::new();
    let r = -b..=b;
    for x0 in r.clone() {
        for x1 in r.clone() {
            for x2 in r.clone() {
                if x0 * x1 != x2 * x2 {
                    continue;
                }
                for x3 in r.clone() {
                    for x4 in r.clone() {
                        let x = [x0, x1, x2, x3, x4];
                        if x0 * x4 - x1 * x2 + x3 * x3 == 0
                            && x.iter().fold(0, |g, &c| gcd(g, c)) == 1
                        {
                            out.push(x);
                        }
                    }
                }
            }
        }
    }
    out
}

#[test]
fn naive_counter_matches_full_box_scan() {
    for b in 1..=9 {
        let off_line: BTreeSet<Vec5> = full_box(b)
            .into_iter()
            .filter(|x| !(x[0] == 0 && x[2] == 0 && x[3] == 0))
            .map(|x| normalize_sign(&x))
            .collect();
        let naive: BTreeSet<Vec5> = naive_points(b as u64).unwrap().into_iter().collect();
        assert_eq!(naive, off_line, "B = {b}");
        assert_eq!(count_naive(b as u64).unwrap().count, off_line.len() as u64);
    }
}

#[test]
fn direct_counter_matches_filtered_box_scan() {
    for b in 1..=9 {
        let filtered: Vec<Vec5> = full_box(b)
            .into_iter()
            .filter(|x| x.iter().all(|&c| c != 0) && x[0] > 0 && x[1] > 0 && x[3] > 0)
            .collect();
        let mut direct = direct_points(b as u64, 1).unwrap();
        direct.sort_unstable();
        let mut expect = filtered;
        expect.sort_unstable();
        assert_eq!(direct, expect, "B = {b}");
    }
}

#[test]
fn direct_counter_matches_filtered_naive_points() {
    // Each class up to sign has exactly one representative with x3 > 0
    // once all coordinates are nonzero.
    for b in [20u64, 45, 60] {
        let filtered = naive_points(b)
            .unwrap()
            .into_iter()
            .filter(|x| x.iter().all(|&c| c != 0) && x[3] > 0)
            .count() as u64;
        assert_eq!(count_direct(b, 1).unwrap().count, filtered, "B = {b}");
    }
}

#[test]
fn degenerate_count_is_the_remainder_of_the_naive_scan() {
    for b in [10u64, 30, 60] {
        let with_zero = naive_points(b)
            .unwrap()
            .into_iter()
            .filter(|x| x.contains(&0))
            .count() as u64;
        assert_eq!(count_degenerate(b).unwrap().count, with_zero, "B = {b}");
    }
}

#[test]
fn torsor_enumeration_lifts_onto_direct_points() {
    let b = 3_000;
    let mut lifted: Vec<Vec5> = enumerate(b, 1)
        .unwrap()
        .iter()
        .map(|t| lift(t).unwrap().coords())
        .collect();
    lifted.sort_unstable();
    let direct = direct_points(b, 1).unwrap();
    assert_eq!(lifted.len() as u64, count_torsor(b, 1).unwrap().count);
    assert_eq!(lifted, direct);
}

#[test]
fn reduction_inverts_lift() {
    for x in direct_points(1_500, 1).unwrap() {
        let t = reduce_to_torsor(&x).unwrap();
        assert_eq!(lift(&t).unwrap().coords(), x);
    }
}

#[test]
fn simplex_volume_matches_monte_carlo() {
    let w = [6.0, 5.0, 3.0, 4.0, 2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(86_400);
    let n = 2_000_000;
    let hits = (0..n)
        .filter(|_| {
            w.iter()
                .map(|&wi| wi * (rng.gen::<f64>() / wi))
                .sum::<f64>()
                <= 1.0
        })
        .count();
    // The box prod [0, 1/w_i] has volume 1/720.
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    let exact = simplex_volume(&[6, 5, 3, 4, 2]);
    let exact = *exact.numer() as f64 / *exact.denom() as f64;
    assert!(
        (p / 720.0 - exact).abs() <= 4.0 * se / 720.0,
        "{} vs {exact}",
        p / 720.0
    );
}

#[test]
fn count_mod_matches_full_residue_loop() {
    for q in [1u64, 2, 3, 4, 5, 6, 8, 9, 12] {
        let qi = q as i64;
        let mut n = 0;
        for x0 in 0..qi {
            for x1 in 0..qi {
                for x2 in 0..qi {
                    if (x0 * x1 - x2 * x2).rem_euclid(qi) != 0 {
                        continue;
                    }
                    for x3 in 0..qi {
                        for x4 in 0..qi {
                            n += ((x0 * x4 - x1 * x2 + x3 * x3).rem_euclid(qi) == 0) as u64;
                        }
                    }
                }
            }
        }
        assert_eq!(count_mod(q).unwrap(), n, "q = {q}");
    }
}

#[test]
fn phi_respects_empirical_bound_shape() {
    let mut tuples = beta_tuples(100_000);
    tuples.shuffle(&mut ChaCha8Rng::seed_from_u64(55));
    let mut worst: f64 = 0.0;
    for (v, y0) in tuples.iter().take(100) {
        let bound = phi_bound(v, *y0).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let p = phi_pm(v, *y0, sign, 1e-3).unwrap();
            worst = worst.max((p.value.abs() + p.error) / bound);
        }
    }
    assert!(worst <= 1.0, "worst ratio {worst}");
}
