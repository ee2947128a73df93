//! Trial execution: rayon when the `parallel` feature is on, a plain loop
//! otherwise. Results always come back in index order.

/// How a batch of independent trials is executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to [`Execution::Sequential`] without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// `(0..count).map(f)` collected in order.
    pub fn map_indexed<T, F>(self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..count).into_par_iter().map(f).collect()
            }
            _ => (0..count).map(f).collect(),
        }
    }
}

/// Caps the global rayon pool; a no-op without the `parallel` feature.
/// Returns false when the pool was already initialized.
pub fn configure_threads(threads: Option<usize>) -> bool {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads.filter(|&n| n > 0) {
            return rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok();
        }
        true
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        true
    }
}

/// Reads `NCFA_THREADS`.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("NCFA_THREADS").ok().and_then(|v| v.trim().parse().ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let seq = Execution::Sequential.map_indexed(100, |i| i * i);
        let par = Execution::Parallel.map_indexed(100, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
