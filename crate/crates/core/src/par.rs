//! Data-parallel map over trial indices. With the `parallel` feature the
//! work runs on rayon, capped by the `BM_LAB_THREADS` environment variable;
//! without it everything runs on the calling thread. Output order always
//! follows the index.

pub const THREADS_ENV: &str = "BM_LAB_THREADS";

/// Thread cap from `BM_LAB_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
}

#[cfg(feature = "parallel")]
fn pool() -> &'static rayon::ThreadPool {
    use std::sync::OnceLock;
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_cap() {
            b = b.num_threads(n);
        }
        b.build().expect("thread pool")
    })
}

/// Sequential map, used as the reference in benches and tests.
pub fn map_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_par<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    pool().install(|| (0..n).into_par_iter().map(f).collect())
}

/// map_par when built with `parallel`, map_seq otherwise.
pub fn map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        map_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_seq(n, f)
    }
}

/// Number of worker threads `map` will use.
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        pool().current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_by_index() {
        let v = map(1000, |i| i * i);
        assert_eq!(v, map_seq(1000, |i| i * i));
        assert!(threads() >= 1);
    }
}
