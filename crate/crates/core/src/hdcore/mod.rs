//! Hyperdimensional embedding of n-gram statistics.
//!
//! Tokens map to pseudo-random bipolar vectors through a virtual item
//! memory. An n-gram is the binding of its tokens' vectors, each rotated by
//! its 1-based position, and a document is the frequency-weighted bundle of
//! its n-grams, optionally binarized with `sign` (`sign(0) = +1`) or scaled
//! to unit length.

mod bits;
mod memory;

use thiserror::Error;

pub use bits::{dot, hamming, pack, unpack, BitVector};
pub use memory::{hash64, ItemMemory};

use crate::vectorizer::NgramStats;
use crate::textprep::Token;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HdError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("cannot embed empty n-gram statistics")]
    EmptyStats,
    #[error("accumulator is all zero and cannot be normalized")]
    ZeroVector,
    #[error("invalid bipolar vector: {0}")]
    InvalidVector(String),
    #[error("corrupt bit vector: {0}")]
    Corrupt(String),
}

/// Vector over {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BipolarVector(Vec<i8>);

impl BipolarVector {
    pub fn new(values: Vec<i8>) -> Result<Self, HdError> {
        if values.is_empty() {
            return Err(HdError::InvalidVector("empty".into()));
        }
        if let Some(bad) = values.iter().find(|&&x| x != 1 && x != -1) {
            return Err(HdError::InvalidVector(format!("component {bad}")));
        }
        Ok(BipolarVector(values))
    }

    pub(crate) fn from_values_unchecked(values: Vec<i8>) -> Self {
        BipolarVector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn dot(&self, other: &Self) -> Result<i64, HdError> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(&a, &b)| (a * b) as i64).sum())
    }

    pub fn cosine(&self, other: &Self) -> Result<f64, HdError> {
        Ok(self.dot(other)? as f64 / self.dim() as f64)
    }
}

/// Integer bundle of bipolar vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccumVector(Vec<i64>);

impl AccumVector {
    pub fn zeros(d: usize) -> Self {
        AccumVector(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    /// Adds `weight * v`.
    pub fn add_scaled(&mut self, v: &BipolarVector, weight: i64) -> Result<(), HdError> {
        check_dims(self.dim(), v.dim())?;
        for (a, &x) in self.0.iter_mut().zip(&v.0) {
            *a += weight * x as i64;
        }
        Ok(())
    }

    /// Componentwise sign with `sign(0) = +1`.
    pub fn sign(&self) -> BipolarVector {
        BipolarVector(self.0.iter().map(|&x| if x >= 0 { 1 } else { -1 }).collect())
    }

    pub fn normalize(&self) -> Result<RealVector, HdError> {
        let norm = self.0.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(HdError::ZeroVector);
        }
        Ok(RealVector(self.0.iter().map(|&x| (x as f64 / norm) as f32).collect()))
    }
}

/// Real-valued HD vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector(Vec<f32>);

impl RealVector {
    pub fn new(values: Vec<f32>) -> Self {
        RealVector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &Self) -> Result<f64, HdError> {
        check_dims(self.dim(), other.dim())?;
        let dot: f64 = self.0.iter().zip(&other.0).map(|(&a, &b)| a as f64 * b as f64).sum();
        Ok(dot / (self.norm() * other.norm()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMode {
    Binary,
    Real,
}

/// Document embedding, binary or real depending on [`EmbedMode`].
#[derive(Debug, Clone, PartialEq)]
pub enum HdVector {
    Binary(BitVector),
    Real(RealVector),
}

impl HdVector {
    pub fn dim(&self) -> usize {
        match self {
            HdVector::Binary(b) => b.dim(),
            HdVector::Real(r) => r.dim(),
        }
    }

    /// Components as floats; binary vectors become ±1.
    pub fn to_f32(&self) -> Vec<f32> {
        match self {
            HdVector::Binary(b) => b.to_f32(),
            HdVector::Real(r) => r.values().to_vec(),
        }
    }

    pub fn as_binary(&self) -> Option<&BitVector> {
        match self {
            HdVector::Binary(b) => Some(b),
            HdVector::Real(_) => None,
        }
    }
}

fn check_dims(a: usize, b: usize) -> Result<(), HdError> {
    if a == b {
        Ok(())
    } else {
        Err(HdError::DimMismatch { left: a, right: b })
    }
}

/// Cyclic rotation: `out[(i + j) mod d] = v[i]`.
pub fn permute(v: &BipolarVector, j: usize) -> BipolarVector {
    let mut out = v.0.clone();
    let d = out.len();
    out.rotate_right(j % d);
    BipolarVector(out)
}

/// Position-wise product.
pub fn bind(a: &BipolarVector, b: &BipolarVector) -> Result<BipolarVector, HdError> {
    check_dims(a.dim(), b.dim())?;
    Ok(BipolarVector(a.0.iter().zip(&b.0).map(|(&x, &y)| x * y).collect()))
}

/// Binding of the gram's token vectors, the token at 1-based position `j`
/// rotated by `j`.
pub fn ngram_hv(mem: &ItemMemory, gram: &[Token]) -> BipolarVector {
    assert!(!gram.is_empty(), "n-gram must contain at least one token");
    let d = mem.dim();
    let mut out = vec![1i8; d];
    for (pos, token) in gram.iter().enumerate() {
        let h = mem.token_hv(token);
        let shift = (pos + 1) % d;
        for (i, &x) in h.values().iter().enumerate() {
            let k = if i + shift >= d { i + shift - d } else { i + shift };
            out[k] *= x;
        }
    }
    BipolarVector(out)
}

/// Frequency-weighted bundle of all n-gram vectors.
pub fn bundle_stats(mem: &ItemMemory, stats: &NgramStats) -> Result<AccumVector, HdError> {
    if stats.is_empty() {
        return Err(HdError::EmptyStats);
    }
    let mut acc = AccumVector::zeros(mem.dim());
    for (gram, f) in stats.iter() {
        acc.add_scaled(&ngram_hv(mem, gram), f as i64)?;
    }
    Ok(acc)
}

pub fn embed_stats(mem: &ItemMemory, stats: &NgramStats, mode: EmbedMode) -> Result<HdVector, HdError> {
    let acc = bundle_stats(mem, stats)?;
    Ok(match mode {
        EmbedMode::Binary => HdVector::Binary(pack(&acc.sign())),
        EmbedMode::Real => HdVector::Real(acc.normalize()?),
    })
}
