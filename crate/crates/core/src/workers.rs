//! Order-preserving parallel map over independent path computations.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Runs batches either inline (one worker) or on a dedicated rayon pool.
///
/// Output order always matches input order, so results do not depend on
/// the worker count.
pub struct Workers {
    pool: Option<ThreadPool>,
}

impl Workers {
    pub fn new(count: usize) -> Self {
        let pool = if count > 1 {
            ThreadPoolBuilder::new().num_threads(count).build().ok()
        } else {
            None
        };
        Self { pool }
    }

    pub fn single() -> Self {
        Self { pool: None }
    }

    pub fn count(&self) -> usize {
        self.pool.as_ref().map_or(1, ThreadPool::current_num_threads)
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match &self.pool {
            None => items.iter().map(f).collect(),
            Some(pool) => pool.install(|| items.par_iter().map(f).collect()),
        }
    }
}

impl std::fmt::Debug for Workers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Workers({})", self.count())
    }
}
