use thiserror::Error;

use crate::baselines::BaselineError;
use crate::bnn::BnnError;
use crate::harness::HarnessError;
use crate::hdcore::HdError;
use crate::packrt::PackError;
use crate::textprep::TextError;
use crate::vectorizer::VectorizerError;

/// Crate-wide error, wrapping the error type of each stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Vectorizer(#[from] VectorizerError),
    #[error(transparent)]
    Hd(#[from] HdError),
    #[error(transparent)]
    Bnn(#[from] BnnError),
    #[error(transparent)]
    Pack(#[from] PackError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
