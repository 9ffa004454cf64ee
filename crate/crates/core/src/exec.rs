//! Order-preserving data-parallel maps. With the `parallel` feature the work
//! runs on the rayon pool; without it, on the calling thread. Both produce
//! identical output.

use crate::error::Result;

#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    seq_map(items, f)
}

pub fn seq_map<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// `par_map` over a fallible function; the first error in item order wins.
pub fn try_par_map<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    par_map(items, f).into_iter().collect()
}

pub fn try_seq_map<T, U, F: Fn(&T) -> Result<U>>(items: &[T], f: F) -> Result<Vec<U>> {
    items.iter().map(f).collect()
}
