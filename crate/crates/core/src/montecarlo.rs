//! Deterministic parallel sample driver.
//!
//! Sample indices `0..total` are cut into fixed-size chunks. Each chunk is
//! folded into a private aggregate on whatever rayon thread picks it up; the
//! chunk aggregates are then merged strictly in chunk order. Because every
//! sample draws from its own `(seed, index)` stream, the result is
//! bit-identical for any thread count.

use rayon::prelude::*;

use crate::stats::Mergeable;

/// Samples per work item.
pub const CHUNK: u64 = 2048;

/// Runs `step` for every sample index and merges the per-chunk aggregates in
/// index order. When several samples fail, the error of the lowest failing
/// chunk is returned.
pub fn run_samples<A, E, I, F>(total: u64, init: I, step: F) -> Result<A, E>
where
    A: Mergeable + Send,
    E: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64) -> Result<(), E> + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<Result<A, E>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let end = ((c + 1) * CHUNK).min(total);
            for i in c * CHUNK..end {
                step(&mut acc, i)?;
            }
            Ok(acc)
        })
        .collect();
    let mut out = init();
    for part in parts {
        out.merge(part?);
    }
    Ok(out)
}

/// Runs `f` on a dedicated pool with `threads` workers (0 = rayon default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}
