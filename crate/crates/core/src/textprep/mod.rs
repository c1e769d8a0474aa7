//! Text preprocessing and tokenizers.
//!
//! Every tokenizer here is a pure function of its input text and its
//! configuration or trained model. End-of-word markers are spelled
//! [`EOW`] both in memory and in files.

mod bpe;
mod preprocess;
mod stopwords;
mod tokenize;
mod wordpiece;

use std::fmt;

use thiserror::Error;

pub use bpe::{tokenize_bpe, train_bpe, BpeModel};
pub use preprocess::{is_control, preprocess, PrepConfig};
pub use stopwords::{default_stoplist, load_stoplist};
pub use tokenize::{tokenize_char, tokenize_semhash, tokenize_word, split_words};
pub use wordpiece::{tokenize_wordpiece, WordPieceVocab};

/// End-of-word marker appended to the last symbol of a word.
pub const EOW: &str = "</w>";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("n-gram order must be at least 1")]
    InvalidN,
    #[error("corpus contains no words")]
    EmptyCorpus,
    #[error("vocab size {requested} is smaller than the {initial} initial symbols")]
    VocabTooSmall { requested: usize, initial: usize },
    #[error("vocabulary is missing special token {0}")]
    MissingSpecialToken(String),
    #[error("malformed model file: {0}")]
    BadModelFile(String),
}

/// A single normalized subword unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token(String);

impl Token {
    /// Builds a token, returning `None` for empty text or text carrying
    /// control characters.
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        if text.is_empty() || text.chars().any(is_control) {
            None
        } else {
            Some(Token(text))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

pub type TokenStream = Vec<Token>;

/// Convenience for tests and callers holding plain strings.
pub fn token_texts(stream: &[Token]) -> Vec<&str> {
    stream.iter().map(Token::as_str).collect()
}
