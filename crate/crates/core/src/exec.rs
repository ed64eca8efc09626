//! Data-parallel helpers with a sequential fallback.
//!
//! All hot loops (grid sweeps, path ensembles) go through these functions.
//! With the `parallel` feature (default) they dispatch to rayon; without it
//! they run sequentially. Results are written by index, so the output is
//! bit-identical regardless of thread count or schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fill `out[i] = f(i)` for every index.
pub fn fill_indexed<T: Send, F: Fn(usize) -> T + Sync>(out: &mut [T], f: F) {
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, slot)| *slot = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = f(i);
        }
    }
}

/// Collect `f(0..n)` preserving index order.
pub fn map_collect<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential variants, always available; used by the benches to compare
/// against the parallel path within a single build.
pub mod seq {
    pub fn fill_indexed<T, F: Fn(usize) -> T>(out: &mut [T], f: F) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = f(i);
        }
    }

    pub fn map_collect<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
        (0..n).map(f).collect()
    }
}
