//! Thin indirection over rayon so every element loop has a sequential
//! fallback when the `parallel` feature is disabled.

/// Maps `f` over `0..n`, in parallel when the feature is enabled.
///
/// The output order is the index order either way, so callers stay
/// deterministic regardless of thread count.
#[cfg(feature = "parallel")]
pub fn map_indexed<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    (0..n).map(f).collect()
}

/// Sequential twin of [`map_indexed`]; kept callable with the feature on so
/// the benches can compare both code paths in one build.
pub fn map_indexed_serial<U>(n: usize, f: impl Fn(usize) -> U) -> Vec<U> {
    (0..n).map(f).collect()
}

/// Zips `out[i] = f(i)` over a mutable slice, in parallel when enabled.
#[cfg(feature = "parallel")]
pub fn fill_indexed<U: Send>(out: &mut [U], f: impl Fn(usize) -> U + Sync + Send) {
    use rayon::prelude::*;
    out.par_iter_mut()
        .enumerate()
        .for_each(|(i, slot)| *slot = f(i));
}

#[cfg(not(feature = "parallel"))]
pub fn fill_indexed<U>(out: &mut [U], f: impl Fn(usize) -> U) {
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}
