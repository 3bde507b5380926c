//! Index-parallel map: item i always uses stream i, so results do not
//! depend on the thread count.

/// `f(0..count)` collected in index order, on `threads` workers.
#[cfg(feature = "parallel")]
pub fn collect_indexed<T, F>(count: u64, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if threads <= 1 {
        return (0..count).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
        Err(_) => (0..count).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn collect_indexed<T, F>(count: u64, _threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Fallible variant; the first error in index order wins.
pub fn try_collect_indexed<T, E, F>(count: u64, threads: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    collect_indexed(count, threads, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept() {
        let v = collect_indexed(100, 3, |i| i * i);
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        assert_eq!(collect_indexed(100, 1, |i| i * i), v);
    }
}
