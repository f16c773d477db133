//! Execution back end for the data-parallel loops (edge tests, crossing
//! generation, per-branch work) and the cooperative stop signal.
//!
//! Every parallel loop goes through [`Executor::try_map`], which preserves
//! index order, so results never depend on the number of workers. Without
//! the `parallel` feature only the sequential executor exists.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Default)]
pub struct Executor {
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("workers", &self.workers())
            .finish()
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Self::default()
    }

    /// A pool of `workers` threads. With the `parallel` feature disabled this
    /// silently degrades to the sequential executor.
    pub fn with_workers(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::invalid("Executor", "worker count must be at least 1"));
        }
        #[cfg(feature = "parallel")]
        {
            if workers == 1 {
                return Ok(Self::sequential());
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::invalid("Executor", e.to_string()))?;
            Ok(Self {
                pool: Some(Arc::new(pool)),
            })
        }
        #[cfg(not(feature = "parallel"))]
        Ok(Self::sequential())
    }

    pub fn workers(&self) -> usize {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.current_num_threads();
        }
        1
    }

    pub fn is_parallel(&self) -> bool {
        self.workers() > 1
    }

    /// Applies `f` to `0..len` and collects the results in index order.
    pub fn try_map<R, E, F>(&self, len: usize, f: F) -> std::result::Result<Vec<R>, E>
    where
        R: Send,
        E: Send,
        F: Fn(usize) -> std::result::Result<R, E> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| (0..len).into_par_iter().map(&f).collect());
        }
        (0..len).map(f).collect()
    }

    pub fn map<R, F>(&self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        let out: std::result::Result<Vec<R>, std::convert::Infallible> =
            self.try_map(len, |i| Ok(f(i)));
        match out {
            Ok(v) => v,
            Err(never) => match never {},
        }
    }
}

/// Cooperative cancellation: a wall-clock deadline plus a manual flag.
#[derive(Clone, Debug, Default)]
pub struct StopSignal {
    deadline: Option<Instant>,
    flag: Arc<AtomicBool>,
}

impl StopSignal {
    pub fn never() -> Self {
        Self::default()
    }

    pub fn with_timeout(timeout: Duration) -> Self {
        Self {
            deadline: Instant::now().checked_add(timeout),
            flag: Arc::default(),
        }
    }

    pub fn cancel(&self) {
        self.flag.store(true, Ordering::Relaxed);
    }

    pub fn is_stopped(&self) -> bool {
        if self.flag.load(Ordering::Relaxed) {
            return true;
        }
        match self.deadline {
            Some(d) if Instant::now() >= d => {
                self.flag.store(true, Ordering::Relaxed);
                true
            }
            _ => false,
        }
    }
}
