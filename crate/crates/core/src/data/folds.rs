use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::rng::{derive_seed, rng_from_seed};

/// Repeated k-fold partition of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n: usize,
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    /// `assignment[repeat][point]` is the fold holding `point` in that repeat.
    pub assignment: Vec<Vec<usize>>,
}

/// Shuffles `0..n` once per repeat and deals positions round-robin into `k`
/// folds, so fold sizes differ by at most one.
pub fn make_folds(n: usize, k: usize, repeats: usize, seed: u64) -> Result<FoldPlan, DataError> {
    if k < 2 || k > n {
        return Err(DataError::InvalidFolds { n, k });
    }
    let assignment = (0..repeats)
        .map(|r| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng_from_seed(derive_seed(seed, &[r as u64])));
            let mut fold_of = vec![0; n];
            for (pos, &point) in perm.iter().enumerate() {
                fold_of[point] = pos % k;
            }
            fold_of
        })
        .collect();
    Ok(FoldPlan { n, k, repeats, seed, assignment })
}

impl FoldPlan {
    /// Points in `(repeat, fold)`, ascending.
    pub fn fold(&self, repeat: usize, fold: usize) -> Vec<usize> {
        self.assignment[repeat]
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f == fold).then_some(i))
            .collect()
    }

    /// Points outside `(repeat, fold)`, ascending.
    pub fn complement(&self, repeat: usize, fold: usize) -> Vec<usize> {
        self.assignment[repeat]
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| (f != fold).then_some(i))
            .collect()
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.repeats).flat_map(move |r| (0..self.k).map(move |f| (r, f)))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# fold-plan v1\n");
        let _ = writeln!(out, "n={} k={} repeats={} seed={}", self.n, self.k, self.repeats, self.seed);
        for (r, f) in self.cells() {
            let list: Vec<String> = self.fold(r, f).iter().map(usize::to_string).collect();
            let _ = writeln!(out, "repeat={r} fold={f}: {}", list.join(" "));
        }
        out
    }
}
