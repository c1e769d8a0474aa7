//! Fully binarized text classification.
//!
//! The pipeline runs text preprocessing and subword tokenization
//! ([`textprep`]), n-gram counting ([`vectorizer`]), hyperdimensional
//! embedding of the counts into bipolar or bit-packed vectors ([`hdcore`]),
//! and a binarized 1D convolutional classifier trained with a
//! straight-through estimator ([`bnn`]). Trained models export to a
//! bit-packed format evaluated with XNOR/popcount arithmetic ([`packrt`]).
//! [`baselines`] holds Hamming-space nearest-centroid and kNN classifiers and
//! [`harness`] ties everything together for cross-validated experiments.

pub mod baselines;
pub mod bnn;
pub mod hdcore;
pub mod harness;
pub mod packrt;
pub mod textprep;
pub mod vectorizer;

mod bytes;
mod error;

pub use error::{Error, Result};
