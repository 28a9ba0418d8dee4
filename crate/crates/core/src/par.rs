//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the heavy loops run on the rayon
//! global pool; without it everything runs on the calling thread. Every
//! helper returns results in input order, so output is bitwise identical
//! regardless of which execution mode is selected.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Scheduling choice for data-parallel loops.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Execution {
    /// Applies `f` to consecutive chunks of `data`.
    pub fn for_each_chunk<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(&mut [T]) + Send + Sync,
    {
        match self {
            Execution::Sequential => data.chunks_mut(chunk).for_each(f),
            #[cfg(feature = "parallel")]
            Execution::Parallel => data.par_chunks_mut(chunk).for_each(f),
        }
    }

    /// Maps `f` over `0..n`, collecting in index order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Send + Sync,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }

    /// Maps `f` over a slice, collecting in input order.
    pub fn map_slice<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Send + Sync,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_range_keeps_order() {
        let out = Execution::default().map_range(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn chunked_matches_sequential() {
        let mut a: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let mut b = a.clone();
        Execution::Sequential.for_each_chunk(&mut a, 8, |c| c.reverse());
        Execution::default().for_each_chunk(&mut b, 8, |c| c.reverse());
        assert_eq!(a, b);
    }
}
