use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use super::json::Json;
use super::{CorpusFormat, HarnessError};
use crate::bnn::TrainConfig;
use crate::hdcore::EmbedMode;
use crate::textprep::PrepConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenizerKind {
    Word,
    SemHash,
    Bpe,
    Char,
    /// Stopword removal followed by BPE.
    SentencePiece,
    WordPiece,
}

impl TokenizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenizerKind::Word => "word",
            TokenizerKind::SemHash => "semhash",
            TokenizerKind::Bpe => "bpe",
            TokenizerKind::Char => "char",
            TokenizerKind::SentencePiece => "sp",
            TokenizerKind::WordPiece => "wordpiece",
        }
    }

    /// Word-level tokenizers drop stopwords unless told otherwise.
    pub fn removes_stopwords_by_default(self) -> bool {
        matches!(self, TokenizerKind::Word | TokenizerKind::SentencePiece)
    }
}

impl FromStr for TokenizerKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "word" => TokenizerKind::Word,
            "semhash" => TokenizerKind::SemHash,
            "bpe" => TokenizerKind::Bpe,
            "char" => TokenizerKind::Char,
            "sp" | "sentencepiece" => TokenizerKind::SentencePiece,
            "wordpiece" => TokenizerKind::WordPiece,
            other => return Err(HarnessError::InvalidConfig(format!("unknown tokenizer {other:?}"))),
        })
    }
}

/// What the classifier sees for each document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// HD embedding of the n-gram statistics.
    Hd,
    /// One bit per training-vocabulary n-gram: `+1` iff it occurs.
    Counts,
}

impl FromStr for FeatureKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hd" => Ok(FeatureKind::Hd),
            "counts" => Ok(FeatureKind::Counts),
            other => Err(HarnessError::InvalidConfig(format!("unknown features {other:?}"))),
        }
    }
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Hd => "hd",
            FeatureKind::Counts => "counts",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    /// Binarized Text-LeNet.
    Bnn,
    /// Real-valued Text-LeNet with ReLU.
    TextLenet,
    Centroid,
    Knn,
}

impl FromStr for ClassifierKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "bnn" => ClassifierKind::Bnn,
            "text-lenet" => ClassifierKind::TextLenet,
            "centroid" => ClassifierKind::Centroid,
            "knn" => ClassifierKind::Knn,
            other => return Err(HarnessError::InvalidConfig(format!("unknown classifier {other:?}"))),
        })
    }
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Bnn => "bnn",
            ClassifierKind::TextLenet => "text-lenet",
            ClassifierKind::Centroid => "centroid",
            ClassifierKind::Knn => "knn",
        }
    }
}

pub const ALLOWED_DIMS: [usize; 5] = [512, 1024, 4096, 8192, 16384];

/// Everything one experiment needs. Parsed from flat `key = value` text;
/// `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub corpus: Option<PathBuf>,
    pub corpus_format: Option<CorpusFormat>,
    pub tokenizer: TokenizerKind,
    pub semhash_n: usize,
    pub bpe_vocab: usize,
    pub wordpiece_vocab: Option<PathBuf>,
    /// `None` picks the tokenizer's default.
    pub remove_stopwords: Option<bool>,
    pub lowercase: bool,
    /// Order of the token n-grams that get embedded.
    pub ngram: usize,
    pub dim: usize,
    pub embed_mode: EmbedMode,
    pub features: FeatureKind,
    pub hd_seed: u64,
    pub classifier: ClassifierKind,
    pub knn_k: usize,
    pub train: TrainConfig,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Also run k-fold cross-validation on the training split.
    pub cross_validate: bool,
    /// Oversample minority classes before training.
    pub augment: bool,
    pub report: Option<PathBuf>,
    pub export: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus: None,
            corpus_format: None,
            tokenizer: TokenizerKind::SemHash,
            semhash_n: 3,
            bpe_vocab: 1000,
            wordpiece_vocab: None,
            remove_stopwords: None,
            lowercase: false,
            ngram: 1,
            dim: 512,
            embed_mode: EmbedMode::Binary,
            features: FeatureKind::Hd,
            hd_seed: 0,
            classifier: ClassifierKind::Bnn,
            knn_k: 3,
            train: TrainConfig::default(),
            folds: 5,
            repeats: 5,
            seed: 0,
            cross_validate: false,
            augment: true,
            report: None,
            export: None,
            checkpoint: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value.parse().map_err(|_| HarnessError::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

fn parse_mode(value: &str) -> Result<EmbedMode, HarnessError> {
    match value {
        "binary" => Ok(EmbedMode::Binary),
        "real" => Ok(EmbedMode::Real),
        other => Err(HarnessError::InvalidConfig(format!("embed_mode: unknown mode {other:?}"))),
    }
}

pub fn mode_name(mode: EmbedMode) -> &'static str {
    match mode {
        EmbedMode::Binary => "binary",
        EmbedMode::Real => "real",
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::InvalidConfig(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(key.trim(), value.trim().trim_matches('"'))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field by its config key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let path = || (!value.is_empty()).then(|| PathBuf::from(value));
        match key {
            "corpus" => self.corpus = path(),
            "corpus_format" => self.corpus_format = Some(value.parse()?),
            "tokenizer" => self.tokenizer = value.parse()?,
            "semhash_n" => self.semhash_n = parse_value(key, value)?,
            "bpe_vocab" => self.bpe_vocab = parse_value(key, value)?,
            "wordpiece_vocab" => self.wordpiece_vocab = path(),
            "remove_stopwords" => self.remove_stopwords = Some(parse_value(key, value)?),
            "lowercase" => self.lowercase = parse_value(key, value)?,
            "ngram" => self.ngram = parse_value(key, value)?,
            "dim" => self.dim = parse_value(key, value)?,
            "embed_mode" => self.embed_mode = parse_mode(value)?,
            "features" => self.features = value.parse()?,
            "hd_seed" => self.hd_seed = parse_value(key, value)?,
            "classifier" => self.classifier = value.parse()?,
            "knn_k" => self.knn_k = parse_value(key, value)?,
            "learning_rate" => self.train.learning_rate = parse_value(key, value)?,
            "rms_decay" => self.train.rms_decay = parse_value(key, value)?,
            "rms_epsilon" => self.train.rms_epsilon = parse_value(key, value)?,
            "batch_size" => self.train.batch_size = parse_value(key, value)?,
            "epochs" => self.train.epochs = parse_value(key, value)?,
            "clip_value" => self.train.clip_value = parse_value(key, value)?,
            "folds" => self.folds = parse_value(key, value)?,
            "repeats" => self.repeats = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "cross_validate" => self.cross_validate = parse_value(key, value)?,
            "augment" => self.augment = parse_value(key, value)?,
            "report" => self.report = path(),
            "export" => self.export = path(),
            "checkpoint" => self.checkpoint = path(),
            other => return Err(HarnessError::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidConfig(m.to_string()));
        if self.features == FeatureKind::Hd && !ALLOWED_DIMS.contains(&self.dim) {
            return bad(&format!("dim {} not in {ALLOWED_DIMS:?}", self.dim));
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        if self.semhash_n == 0 || self.ngram == 0 {
            return bad("n-gram orders must be positive");
        }
        if self.knn_k == 0 || self.knn_k.is_multiple_of(2) {
            return bad("knn_k must be a positive odd number");
        }
        if self.tokenizer == TokenizerKind::WordPiece && self.wordpiece_vocab.is_none() {
            return bad("wordpiece tokenizer needs wordpiece_vocab");
        }
        let binary_only = matches!(self.classifier, ClassifierKind::Bnn | ClassifierKind::Centroid | ClassifierKind::Knn);
        if binary_only && self.features == FeatureKind::Hd && self.embed_mode != EmbedMode::Binary {
            return bad("bnn, centroid and knn need binary embeddings");
        }
        self.train.validate().map_err(|e| HarnessError::InvalidConfig(e.to_string()))
    }

    fn entries(&self) -> BTreeMap<&'static str, String> {
        let opt = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let t = &self.train;
        BTreeMap::from([
            ("corpus", opt(&self.corpus)),
            ("corpus_format", self.corpus_format.map(|f| f.as_str().to_string()).unwrap_or_default()),
            ("tokenizer", self.tokenizer.as_str().to_string()),
            ("semhash_n", self.semhash_n.to_string()),
            ("bpe_vocab", self.bpe_vocab.to_string()),
            ("wordpiece_vocab", opt(&self.wordpiece_vocab)),
            ("remove_stopwords", self.remove_stopwords.map(|b| b.to_string()).unwrap_or_default()),
            ("lowercase", self.lowercase.to_string()),
            ("ngram", self.ngram.to_string()),
            ("dim", self.dim.to_string()),
            ("embed_mode", mode_name(self.embed_mode).to_string()),
            ("features", self.features.as_str().to_string()),
            ("hd_seed", self.hd_seed.to_string()),
            ("classifier", self.classifier.as_str().to_string()),
            ("knn_k", self.knn_k.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("rms_decay", t.rms_decay.to_string()),
            ("rms_epsilon", t.rms_epsilon.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("epochs", t.epochs.to_string()),
            ("clip_value", t.clip_value.to_string()),
            ("folds", self.folds.to_string()),
            ("repeats", self.repeats.to_string()),
            ("seed", self.seed.to_string()),
            ("cross_validate", self.cross_validate.to_string()),
            ("augment", self.augment.to_string()),
            ("report", opt(&self.report)),
            ("export", opt(&self.export)),
            ("checkpoint", opt(&self.checkpoint)),
        ])
    }

    /// Config text that parses back to an equal config.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Like the text form, but with the stopword default resolved.
    pub fn to_json(&self) -> Json {
        let mut entries = self.entries();
        entries.insert("remove_stopwords", self.stopwords().to_string());
        Json::obj(entries.into_iter().map(|(k, v)| (k, Json::Str(v))))
    }

    pub fn stopwords(&self) -> bool {
        self.remove_stopwords.unwrap_or_else(|| self.tokenizer.removes_stopwords_by_default())
    }

    pub fn prep_config(&self) -> PrepConfig {
        let base = if self.stopwords() { PrepConfig::with_stopwords() } else { PrepConfig::default() };
        PrepConfig { lowercase: self.lowercase, ..base }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let cfg = ExperimentConfig::parse(
            "# chatbot run\ncorpus = data/chatbot.json\ntokenizer = semhash\ndim = 1024\nepochs = 2 # quick\nlearning_rate = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.dim, 1024);
        assert_eq!(cfg.train.epochs, 2);
        assert_eq!(cfg.corpus, Some(PathBuf::from("data/chatbot.json")));
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for text in ["dim = 500", "folds = 1", "colour = red", "epochs = many", "tokenizer = wordpiece", "knn_k = 2"] {
            assert!(matches!(ExperimentConfig::parse(text), Err(HarnessError::InvalidConfig(_))), "{text}");
        }
    }
}
