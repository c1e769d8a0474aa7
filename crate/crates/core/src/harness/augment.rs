use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{HarnessError, Sample};
use crate::hdcore::hash64;

/// Indices that bring every class up to the largest class size: all
/// original indices in order, then duplicates drawn uniformly with
/// replacement, class by class.
pub fn oversample_indices(labels: &[usize], num_classes: usize, seed: u64) -> Result<Vec<usize>, HarnessError> {
    let mut members = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        members
            .get_mut(l)
            .ok_or_else(|| HarnessError::InvalidConfig(format!("label {l} >= {num_classes} classes")))?
            .push(i);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(HarnessError::EmptyClass(empty.to_string()));
    }
    let largest = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(hash64(seed, "oversample"));
    let mut out: Vec<usize> = (0..labels.len()).collect();
    for class in &members {
        for _ in class.len()..largest {
            out.push(*class.choose(&mut rng).expect("class is non-empty"));
        }
    }
    Ok(out)
}

/// Oversamples `train` so each intent matches the most frequent one.
/// Originals are kept, in order, ahead of the added duplicates.
pub fn augment_oversample(train: &[Sample], seed: u64) -> Result<Vec<Sample>, HarnessError> {
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for s in train {
        ids.entry(&s.intent).or_insert(0);
    }
    for (i, v) in ids.values_mut().enumerate() {
        *v = i;
    }
    let labels: Vec<usize> = train.iter().map(|s| ids[s.intent.as_str()]).collect();
    Ok(oversample_indices(&labels, ids.len(), seed)?.into_iter().map(|i| train[i].clone()).collect())
}
