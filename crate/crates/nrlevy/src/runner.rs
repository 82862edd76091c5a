//! Replica execution on a dedicated rayon pool.

use nrlevy_core::diagnostics::ReplicaRunner;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::CliError;

/// Runs replicas on a fixed number of worker threads. Results come back in
/// replica order, so reductions downstream are independent of scheduling.
#[derive(Debug)]
pub struct PoolRunner {
    pool: ThreadPool,
}

impl PoolRunner {
    pub fn new(threads: usize) -> Result<Self, CliError> {
        let pool = ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl ReplicaRunner for PoolRunner {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}
