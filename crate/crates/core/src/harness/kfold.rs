use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::hdcore::hash64;

/// One cross-validation partition, as sorted sample indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold: each class is shuffled, classes are laid end to end,
/// and position `i` goes to fold `i mod k`. Fold sizes differ by at most
/// one and every class is spread as evenly as its size allows.
pub fn kfold_split(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>, HarnessError> {
    if k < 2 {
        return Err(HarnessError::InvalidConfig(format!("k = {k}; need at least 2 folds")));
    }
    if labels.len() < k {
        return Err(HarnessError::TooFewSamples { samples: labels.len(), folds: k });
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(hash64(seed, "kfold"));
    let mut order = Vec::with_capacity(labels.len());
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        order.extend(members);
    }
    let mut assign = vec![0usize; labels.len()];
    for (pos, &i) in order.iter().enumerate() {
        assign[i] = pos % k;
    }
    Ok((0..k)
        .map(|f| Fold {
            train: (0..labels.len()).filter(|&i| assign[i] != f).collect(),
            validation: (0..labels.len()).filter(|&i| assign[i] == f).collect(),
        })
        .collect())
}
