//! Row-chunked parallel map with deterministic output order.

use rayon::prelude::*;

use crate::error::Result;
use crate::tensor::Tensor;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "PRO_OOD_THREADS";

const CHUNK_ROWS: usize = 256;

/// Worker count requested through [`THREADS_ENV`], if set and valid.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Sizes the global rayon pool from [`THREADS_ENV`]. A no-op when the
/// variable is unset or the pool is already initialized.
pub fn init_global_pool() {
    if let Some(n) = threads_from_env() {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Applies `f` to consecutive row blocks of `x` and concatenates the results
/// in row order. `f` must treat rows independently.
pub fn map_row_chunks<T, F>(x: &Tensor, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Tensor) -> Result<Vec<T>> + Sync,
{
    let rows = x.rows();
    if rows <= CHUNK_ROWS {
        return f(x);
    }
    let starts: Vec<usize> = (0..rows).step_by(CHUNK_ROWS).collect();
    let parts: Vec<Result<Vec<T>>> = starts
        .par_iter()
        .map(|&s| {
            let idx: Vec<usize> = (s..(s + CHUNK_ROWS).min(rows)).collect();
            f(&x.select_rows(&idx)?)
        })
        .collect();
    let mut out = Vec::with_capacity(rows);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}
