//! Sparse n-gram frequency statistics over token streams.

use std::collections::BTreeMap;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::textprep::Token;

/// Separator between the tokens of an n-gram key in the JSON form.
pub const TUPLE_SEP: char = '\u{241F}';

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VectorizerError {
    #[error("n-gram order must be at least 1")]
    InvalidN,
    #[error("malformed n-gram stats JSON: {0}")]
    Json(String),
}

/// Map from n-gram to its frequency in one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramStats {
    n: usize,
    counts: BTreeMap<Vec<Token>, u64>,
}

impl NgramStats {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &BTreeMap<Vec<Token>, u64> {
        &self.counts
    }

    /// Number of distinct n-grams.
    pub fn total(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Sum of all frequencies.
    pub fn frequency_sum(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Token], u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn to_json(&self) -> Value {
        let counts: Map<String, Value> = self
            .counts
            .iter()
            .map(|(k, &v)| {
                let key = k
                    .iter()
                    .map(Token::as_str)
                    .collect::<Vec<_>>()
                    .join(&TUPLE_SEP.to_string());
                (key, Value::from(v))
            })
            .collect();
        serde_json::json!({ "n": self.n, "counts": counts })
    }

    pub fn from_json(value: &Value) -> Result<Self, VectorizerError> {
        let bad = |m: &str| VectorizerError::Json(m.to_string());
        let n = value
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing integer field `n`"))? as usize;
        if n == 0 {
            return Err(VectorizerError::InvalidN);
        }
        let obj = value
            .get("counts")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("missing object field `counts`"))?;
        let mut counts = BTreeMap::new();
        for (k, v) in obj {
            let f = v.as_u64().filter(|&f| f >= 1).ok_or_else(|| bad("frequency must be >= 1"))?;
            let gram: Option<Vec<Token>> = k.split(TUPLE_SEP).map(Token::new).collect();
            let gram = gram.ok_or_else(|| bad("invalid token in key"))?;
            if gram.len() != n {
                return Err(bad("key arity differs from n"));
            }
            counts.insert(gram, f);
        }
        Ok(NgramStats { n, counts })
    }
}

/// Counts every contiguous window of `n` tokens.
pub fn ngram_stats(tokens: &[Token], n: usize) -> Result<NgramStats, VectorizerError> {
    if n == 0 {
        return Err(VectorizerError::InvalidN);
    }
    let mut counts = BTreeMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w.to_vec()).or_insert(0u64) += 1;
    }
    Ok(NgramStats { n, counts })
}
