use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Train/validation/test proportions.
pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.48, 0.32, 0.20);

/// Node index lists for each split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for (name, idx) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in idx {
                if i >= n {
                    return Err(Error::structural(format!("{name} split holds node {i} of {n}")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::structural(format!("node {i} appears in two splits")));
                }
            }
        }
        Ok(())
    }

    /// Boolean membership vectors `(train, val, test)`.
    pub fn masks(&self, n: usize) -> (Vec<bool>, Vec<bool>, Vec<bool>) {
        let mask = |idx: &[usize]| {
            let mut m = vec![false; n];
            idx.iter().for_each(|&i| m[i] = true);
            m
        };
        (mask(&self.train), mask(&self.val), mask(&self.test))
    }
}

/// Random split with the given fractions. The test split takes every
/// remaining node when the fractions sum to one.
///
/// Stratification orders nodes by `(rank within class + u) / class size`
/// with `u` uniform, so every prefix of the ordering carries each class in
/// proportion. Classes with fewer than three members make that impossible
/// and the split falls back to a plain shuffle.
pub fn make_splits(
    labels: &[usize],
    fractions: (f64, f64, f64),
    seed: u64,
    stratified: bool,
) -> Result<Splits> {
    let (ftr, fva, fte) = fractions;
    if [ftr, fva, fte].iter().any(|f| !(0.0..=1.0).contains(f)) || ftr + fva + fte > 1.0 + 1e-9 {
        return Err(Error::parameter(format!(
            "split fractions {fractions:?} must be in [0, 1] and sum to at most 1"
        )));
    }
    let n = labels.len();
    let mut rng = seed::rng(seed);

    let mut stratify = stratified;
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &y) in labels.iter().enumerate() {
        members[y].push(i);
    }
    if stratify && members.iter().any(|m| !m.is_empty() && m.len() < 3) {
        log::warn!("a class has fewer than 3 members; using an unstratified split");
        stratify = false;
    }

    let order: Vec<usize> = if stratify {
        let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(n);
        for m in members.iter_mut() {
            m.shuffle(&mut rng);
            let size = m.len() as f64;
            for (rank, &i) in m.iter().enumerate() {
                keyed.push(((rank as f64 + rng.random::<f64>()) / size, i));
            }
        }
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, i)| i).collect()
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all
    };

    let count = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
    let n_train = count(ftr);
    let n_val = count(fva);
    let n_test = if ftr + fva + fte >= 1.0 - 1e-9 { n - n_train - n_val } else { count(fte) };
    let take = |from: usize, len: usize| {
        let mut v = order[from..from + len].to_vec();
        v.sort_unstable();
        v
    };
    Ok(Splits { train: take(0, n_train), val: take(n_train, n_val), test: take(n_train + n_val, n_test) })
}
