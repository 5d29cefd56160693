use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled k-fold partition. Test folds are disjoint, cover every index and
/// differ in size by at most one. `k = 1` trains and tests on the full set.
pub fn kfold_split(n_samples: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k == 0 {
        return Err(HarnessError::input("k_folds must be at least 1"));
    }
    if k > n_samples {
        return Err(HarnessError::input(format!("k_folds = {k} exceeds {n_samples} samples")));
    }
    if k == 1 {
        let all: Vec<usize> = (0..n_samples).collect();
        return Ok(vec![Fold { train: all.clone(), test: all }]);
    }
    let mut idx: Vec<usize> = (0..n_samples).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n_samples / k, n_samples % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut test = idx[start..start + len].to_vec();
        let mut train: Vec<usize> = idx[..start].iter().chain(&idx[start + len..]).copied().collect();
        test.sort_unstable();
        train.sort_unstable();
        folds.push(Fold { train, test });
        start += len;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_by_five() {
        let folds = kfold_split(10, 5, 1).unwrap();
        let mut seen = vec![0; 10];
        for f in &folds {
            assert_eq!(f.test.len(), 2);
            assert_eq!(f.train.len(), 8);
            f.test.iter().for_each(|&i| seen[i] += 1);
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(folds, kfold_split(10, 5, 1).unwrap());
    }

    #[test]
    fn degenerate_and_errors() {
        let one = kfold_split(4, 1, 0).unwrap();
        assert_eq!(one[0].train, one[0].test);
        assert!(kfold_split(3, 4, 0).is_err());
        assert!(kfold_split(3, 0, 0).is_err());
    }
}
