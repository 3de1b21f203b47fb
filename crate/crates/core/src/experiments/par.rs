use serde::{Deserialize, Serialize};

/// How independent cells (runs, seeds, grid points) are scheduled.
///
/// Results are always returned in input order, so both strategies produce
/// identical output. Without the `parallel` feature everything runs sequentially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }
}

/// Runs `f` inside a pool with `threads` workers (global pool when `None`).
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> crate::Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::EsnError::InvalidParameter(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: Option<usize>, f: impl FnOnce() -> R + Send) -> crate::Result<R> {
    Ok(f())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..200).collect();
        let f = |x: &u64| x * x + 1;
        assert_eq!(Execution::Parallel.map(&items, f), Execution::Sequential.map(&items, f));
    }

    #[test]
    fn thread_pool_runs() {
        assert_eq!(with_threads(Some(2), || Execution::Parallel.map(&[1, 2, 3], |x| x * 2)).unwrap(), vec![2, 4, 6]);
    }
}
