//! Data-parallel execution with a sequential fallback.
//!
//! Batch workloads (Monte Carlo chunks, scan grids, random-instance suites)
//! go through [`Execution::map`]. Results always come back in index order, so
//! any reduction performed by the caller over the returned vector is
//! independent of how the work was scheduled.
//!
//! Without the `parallel` feature, [`Execution::Parallel`] runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `true` when this mode actually fans out over a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0), …, f(n-1)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Like [`Execution::map`] over the items of a slice.
    pub fn map_slice<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        self.map(items.len(), |i| f(&items[i]))
    }
}
