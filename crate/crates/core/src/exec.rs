//! Sequential / data-parallel map with deterministic ordered output.
//!
//! Sweeps and grid checks are pure per-item evaluations, so the two modes
//! produce bit-identical vectors; `Parallel` only changes wall time. With
//! the `parallel` feature disabled the type collapses to the sequential
//! path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for ExecMode {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        ExecMode::Parallel
    }
    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        ExecMode::Sequential
    }
}

/// Maps `f` over `items`, preserving input order in the output.
pub fn map_collect<T, U, F>(mode: ExecMode, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match mode {
        ExecMode::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => items.par_iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_order_matches_input() {
        let items: Vec<u64> = (0..257).collect();
        let seq = map_collect(ExecMode::Sequential, &items, |&x| x * x);
        assert_eq!(seq, items.iter().map(|&x| x * x).collect::<Vec<_>>());
        #[cfg(feature = "parallel")]
        {
            let par = map_collect(ExecMode::Parallel, &items, |&x| x * x);
            assert_eq!(par, seq);
        }
    }
}
