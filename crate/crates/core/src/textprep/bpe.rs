use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use super::tokenize::word_symbols;
use super::{TextError, Token, TokenStream, EOW};

/// A trained byte-pair encoding model.
#[derive(Debug, Clone)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    vocab: BTreeSet<String>,
    vocab_size: usize,
    ranks: HashMap<(String, String), usize>,
}

impl PartialEq for BpeModel {
    fn eq(&self, other: &Self) -> bool {
        self.merges == other.merges && self.vocab_size == other.vocab_size
    }
}

impl BpeModel {
    fn from_parts(merges: Vec<(String, String)>, vocab: BTreeSet<String>, vocab_size: usize) -> Self {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        BpeModel { merges, vocab, vocab_size, ranks }
    }

    /// Merge rules in acquisition order.
    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    /// The dictionary size the model was trained for.
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn eow_marker(&self) -> &'static str {
        EOW
    }

    /// Text form: `bpe v1 <vocab_size>` then one `<left> <right>` per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("bpe v1 {}\n", self.vocab_size);
        for (l, r) in &self.merges {
            let _ = writeln!(out, "{l} {r}");
        }
        out
    }

    /// Parses [`BpeModel::to_text`] output. The vocab of a loaded model is
    /// every symbol mentioned by a merge, plus every merge output.
    pub fn from_text(text: &str) -> Result<Self, TextError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| TextError::BadModelFile("missing header".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let vocab_size = match parts.as_slice() {
            ["bpe", "v1", n] => n
                .parse::<usize>()
                .map_err(|_| TextError::BadModelFile(format!("bad vocab size {n:?}")))?,
            _ => return Err(TextError::BadModelFile(format!("bad header {header:?}"))),
        };
        let mut merges = Vec::new();
        let mut vocab = BTreeSet::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(' ');
            match (it.next(), it.next(), it.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    vocab.insert(l.to_string());
                    vocab.insert(r.to_string());
                    vocab.insert(format!("{l}{r}"));
                    merges.push((l.to_string(), r.to_string()));
                }
                _ => {
                    return Err(TextError::BadModelFile(format!(
                        "line {}: expected `<left> <right>`",
                        i + 2
                    )))
                }
            }
        }
        Ok(Self::from_parts(merges, vocab, vocab_size))
    }
}

type Pair = (u32, u32);

struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn id(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }
}

fn add_pairs(
    symbols: &[u32],
    freq: i64,
    word: usize,
    counts: &mut HashMap<Pair, i64>,
    index: &mut HashMap<Pair, BTreeSet<usize>>,
) {
    for w in symbols.windows(2) {
        let p = (w[0], w[1]);
        *counts.entry(p).or_insert(0) += freq;
        if freq > 0 {
            index.entry(p).or_default().insert(word);
        }
    }
}

/// Learns merges over the whitespace-separated words of `corpus` until the
/// vocabulary holds `vocab_size` symbols or no adjacent pair occurs at
/// least twice. Count ties go to the lexicographically smallest merged
/// string, then the smallest left symbol.
pub fn train_bpe<S: AsRef<str>>(corpus: &[S], vocab_size: usize) -> Result<BpeModel, TextError> {
    let mut word_freq: BTreeMap<&str, i64> = BTreeMap::new();
    for doc in corpus {
        for w in doc.as_ref().split_whitespace() {
            *word_freq.entry(w).or_insert(0) += 1;
        }
    }
    if word_freq.is_empty() {
        return Err(TextError::EmptyCorpus);
    }

    let mut interner = Interner { ids: HashMap::new(), names: Vec::new() };
    let mut words: Vec<(Vec<u32>, i64)> = word_freq
        .iter()
        .map(|(w, &f)| {
            let syms = word_symbols(w).iter().map(|s| interner.id(s)).collect();
            (syms, f)
        })
        .collect();
    let mut vocab: BTreeSet<String> = interner.names.iter().cloned().collect();
    if vocab_size < vocab.len() {
        return Err(TextError::VocabTooSmall {
            requested: vocab_size,
            initial: vocab.len(),
        });
    }

    let mut counts: HashMap<Pair, i64> = HashMap::new();
    let mut index: HashMap<Pair, BTreeSet<usize>> = HashMap::new();
    for (i, (syms, f)) in words.iter().enumerate() {
        add_pairs(syms, *f, i, &mut counts, &mut index);
    }

    let mut merges = Vec::new();
    while vocab.len() < vocab_size {
        let names = &interner.names;
        let best = counts
            .iter()
            .filter(|(_, &c)| c >= 2)
            .min_by(|(a, ca), (b, cb)| {
                cb.cmp(ca)
                    .then_with(|| {
                        let ma = names[a.0 as usize].chars().chain(names[a.1 as usize].chars());
                        let mb = names[b.0 as usize].chars().chain(names[b.1 as usize].chars());
                        ma.cmp(mb)
                    })
                    .then_with(|| names[a.0 as usize].cmp(&names[b.0 as usize]))
            })
            .map(|(&p, _)| p);
        let Some(pair) = best else { break };

        let left = interner.names[pair.0 as usize].clone();
        let right = interner.names[pair.1 as usize].clone();
        let merged = format!("{left}{right}");
        let new_id = interner.id(&merged);
        vocab.insert(merged);
        merges.push((left, right));

        let affected = index.remove(&pair).unwrap_or_default();
        for wi in affected {
            let (syms, f) = &mut words[wi];
            add_pairs(syms, -*f, wi, &mut counts, &mut index);
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && (syms[i], syms[i + 1]) == pair {
                    out.push(new_id);
                    i += 2;
                } else {
                    out.push(syms[i]);
                    i += 1;
                }
            }
            *syms = out;
            add_pairs(syms, *f, wi, &mut counts, &mut index);
        }
        counts.retain(|_, c| *c > 0);
    }

    Ok(BpeModel::from_parts(merges, vocab, vocab_size))
}

fn encode_word(model: &BpeModel, word: &str) -> Vec<String> {
    let mut syms = word_symbols(word);
    loop {
        let best = syms
            .windows(2)
            .filter_map(|w| model.ranks.get(&(w[0].clone(), w[1].clone())).copied())
            .min();
        let Some(rank) = best else { break };
        let (l, r) = &model.merges[rank];
        let mut out = Vec::with_capacity(syms.len());
        let mut i = 0;
        while i < syms.len() {
            if i + 1 < syms.len() && syms[i] == *l && syms[i + 1] == *r {
                out.push(format!("{l}{r}"));
                i += 2;
            } else {
                out.push(std::mem::take(&mut syms[i]));
                i += 1;
            }
        }
        syms = out;
    }
    syms
}

/// Splits each word into characters (end-of-word marked) and applies the
/// model's merges in rank order. Unknown characters stay single tokens.
pub fn tokenize_bpe(model: &BpeModel, text: &str) -> TokenStream {
    text.split_whitespace()
        .flat_map(|w| encode_word(model, w))
        .filter_map(Token::new)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::token_texts;

    #[test]
    fn first_merge_is_most_frequent_pair() {
        // initial symbols: a, b</w>
        let m = train_bpe(&["aaab aab"], 3).unwrap();
        assert_eq!(m.merges()[0], ("a".to_string(), "a".to_string()));
        assert_eq!(m.merges().len(), 1);
        assert!(m.vocab().contains("aa"));
    }

    #[test]
    fn zero_merges_at_initial_size() {
        let m = train_bpe(&["abc cab"], 5).unwrap();
        // a b c</w> c b</w>: {a, b, c, c</w>, b</w>}
        assert!(m.merges().is_empty());
        assert_eq!(
            token_texts(&tokenize_bpe(&m, "abc")),
            ["a", "b", "c</w>"]
        );
    }

    #[test]
    fn empty_corpus_and_small_vocab() {
        assert_eq!(train_bpe(&[""], 10).unwrap_err(), TextError::EmptyCorpus);
        let empty: [&str; 0] = [];
        assert_eq!(train_bpe(&empty, 10).unwrap_err(), TextError::EmptyCorpus);
        assert!(matches!(
            train_bpe(&["abc"], 1),
            Err(TextError::VocabTooSmall { .. })
        ));
    }

    #[test]
    fn whole_words_when_vocab_is_large() {
        let corpus = vec!["hello how are you"; 4];
        let m = train_bpe(&corpus, 1000).unwrap();
        assert_eq!(
            token_texts(&tokenize_bpe(&m, "hello how are you")),
            ["hello</w>", "how</w>", "are</w>", "you</w>"]
        );
        assert!(m.vocab().len() <= 1000);
        assert!(tokenize_bpe(&m, "").is_empty());
    }

    #[test]
    fn unseen_characters_pass_through() {
        let m = train_bpe(&["hello"; 3], 100).unwrap();
        assert_eq!(
            token_texts(&tokenize_bpe(&m, "xyz")),
            ["x", "y", "z</w>"]
        );
    }

    #[test]
    fn stops_when_no_pair_repeats() {
        let m = train_bpe(&["abcd"], 100).unwrap();
        assert!(m.merges().is_empty());
    }

    #[test]
    fn text_round_trip() {
        let m = train_bpe(&["the cat sat on the mat with the hat"], 30).unwrap();
        let back = BpeModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            tokenize_bpe(&back, "the cat that sat"),
            tokenize_bpe(&m, "the cat that sat")
        );
        assert!(BpeModel::from_text("nope").is_err());
        assert!(BpeModel::from_text("bpe v1 10\na b c\n").is_err());
    }
}
