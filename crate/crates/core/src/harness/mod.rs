//! Corpora, augmentation, cross-validation, metrics and experiment runs.

mod augment;
mod config;
mod corpus;
mod experiment;
pub mod json;
mod kfold;
mod metrics;
mod pipeline;

use thiserror::Error;

pub use augment::{augment_oversample, oversample_indices};
pub use config::{mode_name, ClassifierKind, ExperimentConfig, FeatureKind, TokenizerKind, ALLOWED_DIMS};
pub use corpus::{load_corpus, parse_benchmark_json, parse_tsv, Corpus, CorpusFormat, Sample, Split};
pub use experiment::{featurize_corpus, fit_classifier, run_experiment, Report, Trained};
pub use kfold::{kfold_split, Fold};
pub use metrics::{f1_metrics, ClassMetrics, F1Report};
pub use pipeline::{document_stats, Featurizer, Tokenizer, EMPTY_DOC_TOKEN};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown corpus format {0:?}")]
    UnknownFormat(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("class {0} has no samples")]
    EmptyClass(String),
    #[error("{samples} samples cannot fill {folds} folds")]
    TooFewSamples { samples: usize, folds: usize },
    #[error("{preds} predictions for {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Text(#[from] crate::textprep::TextError),
    #[error(transparent)]
    Vectorizer(#[from] crate::vectorizer::VectorizerError),
    #[error(transparent)]
    Hd(#[from] crate::hdcore::HdError),
    #[error(transparent)]
    Bnn(#[from] crate::bnn::BnnError),
    #[error(transparent)]
    Baseline(#[from] crate::baselines::BaselineError),
    #[error(transparent)]
    Pack(#[from] crate::packrt::PackError),
}
