//! Execution strategy for the data-parallel loops in the crate.
//!
//! Every batch operation (per-sentence gradients, feature encoding, test-set
//! evaluation, experiment grids) goes through [`Exec::map`]. With the
//! `parallel` feature the work is spread over the rayon pool; without it, or
//! with [`Exec::Sequential`], it runs in order on the calling thread. Results
//! are always returned in input order so reductions stay deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// True when work will actually be distributed across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Like [`Exec::map`] with the element index.
    pub fn map_indexed<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items
                .par_iter()
                .enumerate()
                .map(|(i, t)| f(i, t))
                .collect(),
            _ => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        }
    }

    /// Fallible map; returns the first error in input order.
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}
