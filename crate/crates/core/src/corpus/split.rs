use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::stream;

/// Index-level k-fold split with a held-out test portion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub test: Vec<usize>,
    /// The validation indices of each fold; training is the complement
    /// within the non-test portion.
    pub folds: Vec<Vec<usize>>,
}

impl Split {
    /// `(train, validation)` index lists of fold `i`.
    pub fn fold(&self, i: usize) -> (Vec<usize>, Vec<usize>) {
        let train = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        (train, self.folds[i].clone())
    }

    /// All non-test indices.
    pub fn train_all(&self) -> Vec<usize> {
        self.folds.iter().flatten().copied().collect()
    }
}

pub fn kfold_split(n: usize, k: usize, test_size: usize, seed: u64) -> Result<Split> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if n < k + test_size {
        return Err(Error::invalid(format!(
            "corpus of {n} examples is too small for {k} folds plus {test_size} test examples"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(seed, "split"));
    let test = idx[..test_size].to_vec();
    let rest = &idx[test_size..];
    let (q, r) = (rest.len() / k, rest.len() % k);
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for i in 0..k {
        let size = q + usize::from(i < r);
        folds.push(rest[at..at + size].to_vec());
        at += size;
    }
    Ok(Split { test, folds })
}
