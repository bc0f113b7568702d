use rayon::prelude::*;

use crate::error::Result;

/// Runs `f` for every path index and returns the results in index order.
pub(crate) fn map_paths<T, F>(paths: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..paths as u64).into_par_iter().map(f).collect()
}
