//! Worker-count plumbing. Every parallel routine runs inside a dedicated
//! rayon pool so callers control the thread count; reductions are integer
//! sums or fixed-order float sums, so results do not depend on it.

use crate::error::{Error, Result};

/// Runs `f` on a pool with `threads` workers (`0` means the rayon default).
pub fn with_threads<T, F>(threads: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}
