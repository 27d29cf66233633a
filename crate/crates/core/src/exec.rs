//! Order-preserving map over independent work items, data-parallel when the
//! `parallel` feature is enabled.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    /// Parallel above a small size threshold when the feature is on.
    #[default]
    Auto,
    Sequential,
    /// Falls back to sequential without the `parallel` feature.
    Parallel,
}

const AUTO_THRESHOLD: usize = 16;

impl Execution {
    pub fn is_parallel_for(self, len: usize) -> bool {
        cfg!(feature = "parallel")
            && match self {
                Execution::Auto => len >= AUTO_THRESHOLD,
                Execution::Sequential => false,
                Execution::Parallel => true,
            }
    }
}

/// `items.iter().map(f).collect()`, with output in input order either way.
pub fn map<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel_for(items.len()) {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Like [`map`] for fallible work; returns the first error in input order.
pub fn try_map<T, R, E, F>(items: &[T], exec: Execution, f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map(items, exec, f).into_iter().collect()
}
