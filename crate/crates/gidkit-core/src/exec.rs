//! Execution strategy for the enumeration kernels.
//!
//! The heavy loops in this crate (joint-distribution enumeration, linear
//! system assembly) are embarrassingly parallel over row indices. With the
//! default `parallel` feature they run on rayon; without it, or inside
//! [`force_sequential`], they run as plain sequential loops. Both paths
//! produce results in identical index order, so outputs never depend on the
//! strategy — only wall-clock time does.

use std::cell::Cell;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Run `f` with parallel execution disabled on this thread.
///
/// Useful for benchmarking the sequential path in a build that has the
/// `parallel` feature enabled, and for keeping nested parallelism out of
/// code that is already running inside a rayon task.
pub fn force_sequential<T>(f: impl FnOnce() -> T) -> T {
    FORCE_SEQUENTIAL.with(|flag| {
        let prev = flag.replace(true);
        let out = f();
        flag.set(prev);
        out
    })
}

/// True when the current thread is inside a [`force_sequential`] scope.
pub fn sequential_forced() -> bool {
    FORCE_SEQUENTIAL.with(Cell::get)
}

/// Map `f` over `0..len`, collecting results in index order.
///
/// Dispatches to rayon when the `parallel` feature is on and the caller has
/// not forced sequential execution. The flag is read once, on the calling
/// thread, before any dispatch — worker threads never consult it.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !sequential_forced() {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    (0..len).map(f).collect()
}
