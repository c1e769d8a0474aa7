//! Hamming-space baselines on binary HD vectors: nearest centroid and
//! k-nearest neighbours.

use thiserror::Error;

use crate::hdcore::{hamming, BitVector};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("class {0} has no training samples")]
    EmptyClass(usize),
    #[error("training set is empty")]
    EmptyTrain,
    #[error("vector dimension {found} does not match {expected}")]
    DimMismatch { expected: usize, found: usize },
    #[error("k = {k} must be odd and in 1..={train}")]
    InvalidK { k: usize, train: usize },
}

/// One majority-vote centroid per class.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    pub d: usize,
    pub centroids: Vec<BitVector>,
}

/// Classes are `0..=max label`; each needs at least one member. Bits tie
/// to `+1`.
pub fn fit_centroid(train: &[(BitVector, usize)]) -> Result<CentroidModel, BaselineError> {
    let Some(first) = train.first() else {
        return Err(BaselineError::EmptyTrain);
    };
    let d = first.0.dim();
    let classes = train.iter().map(|(_, l)| l + 1).max().unwrap_or(0);
    let mut sums = vec![vec![0i64; d]; classes];
    let mut counts = vec![0usize; classes];
    for (v, label) in train {
        if v.dim() != d {
            return Err(BaselineError::DimMismatch { expected: d, found: v.dim() });
        }
        counts[*label] += 1;
        let acc = &mut sums[*label];
        for (i, a) in acc.iter_mut().enumerate() {
            *a += if v.bit(i) { 1 } else { -1 };
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(BaselineError::EmptyClass(empty));
    }
    let centroids = sums.iter().map(|s| BitVector::from_signs(d, s.iter().map(|&x| x >= 0))).collect();
    Ok(CentroidModel { d, centroids })
}

/// Nearest centroid by Hamming distance; lowest class index on ties.
pub fn predict_centroid(model: &CentroidModel, x: &BitVector) -> Result<usize, BaselineError> {
    if x.dim() != model.d {
        return Err(BaselineError::DimMismatch { expected: model.d, found: x.dim() });
    }
    let mut best = (u32::MAX, 0);
    for (c, centroid) in model.centroids.iter().enumerate() {
        let h = hamming(x, centroid).expect("dimensions checked");
        if h < best.0 {
            best = (h, c);
        }
    }
    Ok(best.1)
}

/// Majority label among the `k` nearest training vectors. Distance ties
/// keep training order; label ties go to the lowest class index.
pub fn knn_predict(train: &[(BitVector, usize)], x: &BitVector, k: usize) -> Result<usize, BaselineError> {
    if train.is_empty() {
        return Err(BaselineError::EmptyTrain);
    }
    if k == 0 || k.is_multiple_of(2) || k > train.len() {
        return Err(BaselineError::InvalidK { k, train: train.len() });
    }
    let mut dists = Vec::with_capacity(train.len());
    for (i, (v, label)) in train.iter().enumerate() {
        if v.dim() != x.dim() {
            return Err(BaselineError::DimMismatch { expected: x.dim(), found: v.dim() });
        }
        dists.push((hamming(x, v).expect("dimensions checked"), i, *label));
    }
    // (distance, index) keys are unique, so the selection is deterministic.
    dists.select_nth_unstable_by_key(k - 1, |&(h, i, _)| (h, i));
    let classes = train.iter().map(|(_, l)| l + 1).max().unwrap_or(0);
    let mut votes = vec![0usize; classes];
    for &(_, _, label) in &dists[..k] {
        votes[label] += 1;
    }
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    Ok(best)
}
