//! Data-parallel execution with a sequential fallback.
//!
//! Every parallel loop in the crate goes through [`Executor`]. With the
//! `parallel` feature disabled, or with a single worker, the same closures run
//! in order on the calling thread. The work partitioning never depends on the
//! worker count, so results are bit-identical across worker counts.

use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub struct Executor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("workers", &self.workers).finish()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::sequential()
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Executor {
            workers: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// An executor backed by a private pool of `workers` threads.
    ///
    /// `workers == 1` is the sequential executor. Requesting more than one
    /// worker without the `parallel` feature is an error.
    pub fn with_workers(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if workers == 1 {
            return Ok(Self::sequential());
        }
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(Executor { workers, pool: Some(pool) })
        }
        #[cfg(not(feature = "parallel"))]
        {
            Err(Error::Config(format!(
                "{workers} workers requested but this build has no `parallel` feature"
            )))
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        self.workers > 1
    }

    /// Order-preserving map.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }

    /// Run `f(chunk_index, chunk)` over consecutive `chunk`-sized pieces of `data`.
    pub fn for_each_chunk_mut<T, F>(&self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        assert!(chunk > 0);
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            pool.install(|| {
                data.par_chunks_mut(chunk)
                    .enumerate()
                    .for_each(|(i, c)| f(i, c))
            });
            return;
        }
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    /// Element-wise update of three mutable slices driven by a read-only one,
    /// chunked. Used by the optimizer.
    pub fn zip_chunks_mut<F>(
        &self,
        a: &mut [f64],
        b: &mut [f64],
        c: &mut [f64],
        d: &[f64],
        chunk: usize,
        f: F,
    ) where
        F: Fn(&mut [f64], &mut [f64], &mut [f64], &[f64]) + Sync + Send,
    {
        assert!(a.len() == b.len() && b.len() == c.len() && c.len() == d.len());
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            pool.install(|| {
                a.par_chunks_mut(chunk)
                    .zip(b.par_chunks_mut(chunk))
                    .zip(c.par_chunks_mut(chunk))
                    .zip(d.par_chunks(chunk))
                    .for_each(|(((a, b), c), d)| f(a, b, c, d))
            });
            return;
        }
        a.chunks_mut(chunk)
            .zip(b.chunks_mut(chunk))
            .zip(c.chunks_mut(chunk))
            .zip(d.chunks(chunk))
            .for_each(|(((a, b), c), d)| f(a, b, c, d));
    }
}
