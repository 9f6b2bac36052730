//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the [`Exec::Parallel`] mode fans work
//! out over the rayon global pool. Without the feature every mode runs
//! sequentially, so call sites never need `cfg` guards. Output order always
//! matches input order, which keeps seeded experiments reproducible regardless
//! of the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode for the data-parallel loops in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Use rayon when compiled with the `parallel` feature.
    #[default]
    Parallel,
    /// Plain iterator, single thread.
    Sequential,
}

impl Exec {
    /// True when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Map `f` over `0..n`, preserving order.
pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Map `f` over a slice, preserving order.
pub fn map_slice<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Fill `out[i] = f(i)` in place.
pub fn fill_indexed<R, F>(exec: Exec, out: &mut [R], f: F)
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_iter_mut().enumerate().for_each(|(i, slot)| *slot = f(i));
        return;
    }
    let _ = exec;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_keep_order() {
        let a = map_range(Exec::Parallel, 1000, |i| i * i);
        let b = map_range(Exec::Sequential, 1000, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(a[31], 961);

        let xs: Vec<u64> = (0..257).collect();
        let s = map_slice(Exec::Parallel, &xs, |x| x + 1);
        assert_eq!(s.last(), Some(&257));

        let mut out = vec![0usize; 64];
        fill_indexed(Exec::Parallel, &mut out, |i| 2 * i);
        assert_eq!(out[63], 126);
    }
}
