use std::collections::BTreeMap;

use super::config::{ExperimentConfig, FeatureKind, TokenizerKind};
use super::HarnessError;
use crate::hdcore::{embed_stats, BitVector, EmbedMode, HdVector, ItemMemory};
use crate::textprep::{
    preprocess, tokenize_bpe, tokenize_char, tokenize_semhash, tokenize_wordpiece, tokenize_word,
    train_bpe, BpeModel, PrepConfig, Token, TokenStream, WordPieceVocab,
};
use crate::vectorizer::{ngram_stats, NgramStats};

/// Stands in for documents that yield no n-grams.
pub const EMPTY_DOC_TOKEN: &str = "<empty>";

/// Preprocessing plus one tokenizer, fitted where the method learns a
/// vocabulary.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    pub kind: TokenizerKind,
    pub prep: PrepConfig,
    pub semhash_n: usize,
    pub bpe: Option<BpeModel>,
    pub wordpiece: Option<WordPieceVocab>,
}

impl Tokenizer {
    /// BPE and SentencePiece learn merges from `train_texts`; WordPiece
    /// needs `wordpiece`.
    pub fn fit<S: AsRef<str>>(
        kind: TokenizerKind,
        prep: PrepConfig,
        semhash_n: usize,
        bpe_vocab: usize,
        wordpiece: Option<WordPieceVocab>,
        train_texts: &[S],
    ) -> Result<Self, HarnessError> {
        let bpe = match kind {
            TokenizerKind::Bpe | TokenizerKind::SentencePiece => {
                let texts: Vec<String> = train_texts.iter().map(|t| preprocess(t.as_ref(), &prep)).collect();
                Some(train_bpe(&texts, bpe_vocab)?)
            }
            _ => None,
        };
        if kind == TokenizerKind::WordPiece && wordpiece.is_none() {
            return Err(HarnessError::InvalidConfig("wordpiece tokenizer needs a vocabulary".into()));
        }
        Ok(Tokenizer { kind, prep, semhash_n, bpe, wordpiece })
    }

    pub fn from_config<S: AsRef<str>>(cfg: &ExperimentConfig, train_texts: &[S]) -> Result<Self, HarnessError> {
        let wordpiece = match &cfg.wordpiece_vocab {
            Some(p) => Some(WordPieceVocab::load(p)??),
            None => None,
        };
        Tokenizer::fit(cfg.tokenizer, cfg.prep_config(), cfg.semhash_n, cfg.bpe_vocab, wordpiece, train_texts)
    }

    pub fn tokenize(&self, text: &str) -> Result<TokenStream, HarnessError> {
        let text = preprocess(text, &self.prep);
        Ok(match self.kind {
            TokenizerKind::Word => tokenize_word(&text),
            TokenizerKind::SemHash => tokenize_semhash(&text, self.semhash_n)?,
            TokenizerKind::Char => tokenize_char(&text),
            TokenizerKind::Bpe | TokenizerKind::SentencePiece => {
                tokenize_bpe(self.bpe.as_ref().expect("fitted in Tokenizer::fit"), &text)
            }
            TokenizerKind::WordPiece => {
                tokenize_wordpiece(self.wordpiece.as_ref().expect("checked in Tokenizer::fit"), &text)
            }
        })
    }
}

/// N-gram statistics of one document; empty documents map to a single
/// sentinel unigram so every document has an embedding.
pub fn document_stats(tokens: &[Token], n: usize) -> Result<NgramStats, HarnessError> {
    let stats = ngram_stats(tokens, n)?;
    if !stats.is_empty() {
        return Ok(stats);
    }
    let sentinel = Token::new(EMPTY_DOC_TOKEN).expect("sentinel is a valid token");
    Ok(ngram_stats(&[sentinel], 1)?)
}

/// Turns documents into classifier inputs.
#[derive(Debug, Clone)]
pub enum Featurizer {
    Hd { memory: ItemMemory, mode: EmbedMode },
    /// Presence bits over a fixed n-gram vocabulary.
    Counts { vocab: BTreeMap<Vec<Token>, usize> },
}

impl Featurizer {
    /// `train_stats` supplies the vocabulary for count features.
    pub fn new(cfg: &ExperimentConfig, train_stats: &[&NgramStats]) -> Self {
        match cfg.features {
            FeatureKind::Hd => Featurizer::Hd { memory: ItemMemory::new(cfg.dim, cfg.hd_seed), mode: cfg.embed_mode },
            FeatureKind::Counts => {
                let mut vocab = BTreeMap::new();
                for s in train_stats {
                    for (gram, _) in s.iter() {
                        vocab.entry(gram.to_vec()).or_insert(0);
                    }
                }
                for (i, v) in vocab.values_mut().enumerate() {
                    *v = i;
                }
                Featurizer::Counts { vocab }
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Featurizer::Hd { memory, .. } => memory.dim(),
            Featurizer::Counts { vocab } => vocab.len(),
        }
    }

    pub fn features(&self, stats: &NgramStats) -> Result<HdVector, HarnessError> {
        Ok(match self {
            Featurizer::Hd { memory, mode } => embed_stats(memory, stats, *mode)?,
            Featurizer::Counts { vocab } => {
                let mut bits = BitVector::zeros(vocab.len());
                for (gram, _) in stats.iter() {
                    if let Some(&i) = vocab.get(gram) {
                        bits.set(i, true);
                    }
                }
                HdVector::Binary(bits)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gets_sentinel() {
        let s = document_stats(&[], 2).unwrap();
        assert_eq!(s.total(), 1);
    }

    #[test]
    fn counts_features_mark_presence() {
        let tok = |t: &str| Token::new(t).unwrap();
        let train = ngram_stats(&[tok("a"), tok("b"), tok("a")], 1).unwrap();
        let cfg = ExperimentConfig { features: FeatureKind::Counts, ..Default::default() };
        let f = Featurizer::new(&cfg, &[&train]);
        assert_eq!(f.dim(), 2);
        let doc = ngram_stats(&[tok("b"), tok("zzz")], 1).unwrap();
        let HdVector::Binary(bits) = f.features(&doc).unwrap() else { panic!("binary expected") };
        assert!(!bits.bit(0) && bits.bit(1));
    }

    #[test]
    fn sentencepiece_drops_stopwords() {
        let texts = ["the cat sat on the mat", "a cat and the hat"];
        let t = Tokenizer::fit(TokenizerKind::SentencePiece, PrepConfig::with_stopwords(), 3, 40, None, &texts).unwrap();
        let toks: Vec<String> = t.tokenize("the cat").unwrap().into_iter().map(Token::into_string).collect();
        assert!(toks.concat().starts_with("cat"), "{toks:?}");
    }
}
