//! Deterministic chunked work distribution. Work is split into fixed-size
//! chunks, each with its own random stream, and results are returned in
//! chunk order, so the outcome does not depend on the worker count.

use crate::error::Result;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

static THREADS: AtomicUsize = AtomicUsize::new(0);

/// Cap the number of worker threads (0 restores the default: all cores).
pub fn set_threads(n: usize) {
    THREADS.store(n, Ordering::Relaxed);
}

pub fn threads() -> usize {
    match THREADS.load(Ordering::Relaxed) {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
}

/// Samples per chunk used by the Monte Carlo estimators.
pub const CHUNK: usize = 8192;

/// Run `f(chunk_index, chunk_len)` over `ceil(n / chunk)` chunks.
pub fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, usize) -> Result<T> + Sync,
{
    let chunks = n.div_ceil(chunk);
    let len = |i: usize| chunk.min(n - i * chunk);
    let workers = threads().min(chunks).max(1);
    if workers == 1 {
        return (0..chunks).map(|i| f(i, len(i))).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..chunks).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= chunks {
                    break;
                }
                let r = f(i, len(i));
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every chunk ran"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_workers() {
        let run = || map_chunks(100, 7, |i, n| Ok((i, n))).unwrap();
        set_threads(1);
        let a = run();
        set_threads(4);
        let b = run();
        set_threads(0);
        assert_eq!(a, b);
        assert_eq!(a.len(), 15);
        assert_eq!(a.iter().map(|x| x.1).sum::<usize>(), 100);
    }
}
