//! Ordered parallel evaluation of independent circuit tasks.
//!
//! Results are positionally aligned with the input tasks, and every task is a
//! pure function of read-only inputs, so the output is bit-identical for any
//! worker count. Reductions over the results are left to the caller, who must
//! perform them in index order.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

/// Environment variable consulted by [`Executor::from_env`].
pub const WORKERS_ENV: &str = "QFILTER_WORKERS";

pub struct Executor {
    workers: usize,
    pool: Option<ThreadPool>,
}

impl Executor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        let pool = if workers == 1 {
            None
        } else {
            let pool = ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("qfilter-worker-{i}"))
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            Some(pool)
        };
        Ok(Executor { workers, pool })
    }

    /// Runs every task on the calling thread.
    pub fn sequential() -> Self {
        Executor {
            workers: 1,
            pool: None,
        }
    }

    /// Worker count from [`WORKERS_ENV`], defaulting to 1 when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(WORKERS_ENV) {
            Ok(v) => {
                let n = v.trim().parse().map_err(|_| {
                    Error::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer"))
                })?;
                Executor::new(n)
            }
            Err(_) => Ok(Executor::sequential()),
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Applies `f` to every task and returns the results in task order.
    ///
    /// If any task fails the batch fails with [`Error::Task`] naming the lowest
    /// failing index.
    pub fn map_batch<T, R, F>(&self, tasks: &[T], f: F) -> Result<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> Result<R> + Sync,
    {
        let wrap = |(index, task): (usize, &T)| {
            f(task).map_err(|e| Error::Task {
                index,
                source: Box::new(e),
            })
        };
        match &self.pool {
            None => tasks.iter().enumerate().map(wrap).collect(),
            Some(pool) => {
                let results: Vec<Result<R>> =
                    pool.install(|| tasks.par_iter().enumerate().map(wrap).collect());
                // Collecting every result first keeps the reported index
                // independent of scheduling.
                results.into_iter().collect()
            }
        }
    }
}

impl Default for Executor {
    fn default() -> Self {
        Executor::sequential()
    }
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("workers", &self.workers).finish()
    }
}
