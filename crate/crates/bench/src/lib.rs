//! Shared fixtures for the criterion benches under `benches/`.

use manin_d5::asymptotics::beta_tuples;

/// Heights at which the exact counters are timed.
pub const COUNTER_HEIGHTS: [u64; 3] = [1_000, 10_000, 100_000];

/// A fixed spread of moduli for the arithmetic kernels: prime powers,
/// smooth numbers and a large semiprime.
pub const MODULI: [u64; 6] = [
    1 << 20,
    3_u64.pow(12),
    720_720,
    999_983,
    1_000_000_007,
    4_294_967_291 * 3,
];

/// The first `n` outer tuples `(v, y0)` of the constant `beta`.
pub fn phi_tuples(n: usize) -> Vec<([u64; 4], u64)> {
    beta_tuples(100_000).into_iter().take(n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_in_range() {
        assert_eq!(phi_tuples(5).len(), 5);
        assert!(COUNTER_HEIGHTS
            .iter()
            .all(|&b| b <= manin_d5::surface::DIRECT_MAX_B));
        assert!(MODULI.iter().all(|&q| manin_d5::arith::eta(1, q).is_ok()));
    }
}
