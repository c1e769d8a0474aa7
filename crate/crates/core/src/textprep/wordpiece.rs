use std::collections::HashMap;
use std::io;
use std::path::Path;

use super::{TextError, Token, TokenStream};

const CONTINUATION: &str = "##";
const MAX_WORD_CHARS: usize = 100;

/// A WordPiece vocabulary: one token per line, line number = token id.
#[derive(Debug, Clone)]
pub struct WordPieceVocab {
    ids: HashMap<String, usize>,
    cls: String,
    sep: String,
    unk: String,
}

fn find_special(ids: &HashMap<String, usize>, name: &str) -> Result<String, TextError> {
    // Exact spelling first, otherwise any casing of it.
    if ids.contains_key(name) {
        return Ok(name.to_string());
    }
    let mut hits: Vec<&String> = ids.keys().filter(|k| k.eq_ignore_ascii_case(name)).collect();
    hits.sort();
    hits.first()
        .map(|s| s.to_string())
        .ok_or_else(|| TextError::MissingSpecialToken(name.to_string()))
}

impl WordPieceVocab {
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut ids = HashMap::new();
        for (i, t) in tokens.into_iter().enumerate() {
            ids.entry(t.into()).or_insert(i);
        }
        Ok(WordPieceVocab {
            cls: find_special(&ids, "[CLS]")?,
            sep: find_special(&ids, "[SEP]")?,
            unk: find_special(&ids, "[UNK]")?,
            ids,
        })
    }

    pub fn parse(text: &str) -> Result<Self, TextError> {
        Self::from_tokens(text.lines().map(|l| l.trim_end_matches('\r')))
    }

    pub fn load(path: impl AsRef<Path>) -> io::Result<Result<Self, TextError>> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn contains(&self, s: &str) -> bool {
        self.ids.contains_key(s)
    }
}

// Whitespace split, then every punctuation character becomes its own word.
fn basic_words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut cur = String::new();
        for c in chunk.chars() {
            if c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace()) {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            } else {
                cur.push(c);
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

fn segment(vocab: &WordPieceVocab, word: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() > MAX_WORD_CHARS {
        out.push(vocab.unk.clone());
        return;
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while start < end {
            let mut piece: String = chars[start..end].iter().collect();
            if start > 0 {
                piece.insert_str(0, CONTINUATION);
            }
            if vocab.contains(&piece) {
                found = Some(piece);
                break;
            }
            end -= 1;
        }
        match found {
            Some(p) => {
                pieces.push(p);
                start = end;
            }
            None => {
                out.push(vocab.unk.clone());
                return;
            }
        }
    }
    out.extend(pieces);
}

/// Greedy longest-prefix WordPiece segmentation framed by the
/// classification and separator tokens.
pub fn tokenize_wordpiece(vocab: &WordPieceVocab, text: &str) -> TokenStream {
    let mut out = vec![vocab.cls.clone()];
    for word in basic_words(text) {
        segment(vocab, &word, &mut out);
    }
    out.push(vocab.sep.clone());
    out.into_iter().filter_map(Token::new).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::token_texts;

    fn vocab() -> WordPieceVocab {
        WordPieceVocab::parse("[pad]\n[unk]\n[cls]\n[sep]\nhello\nhow\nare\nyou\nplay\n##ing\n##s\n!")
            .unwrap()
    }

    #[test]
    fn frames_with_special_tokens() {
        let v = vocab();
        assert_eq!(
            token_texts(&tokenize_wordpiece(&v, "hello how are you")),
            ["[cls]", "hello", "how", "are", "you", "[sep]"]
        );
        assert_eq!(token_texts(&tokenize_wordpiece(&v, "")), ["[cls]", "[sep]"]);
    }

    #[test]
    fn continuation_pieces_and_unknowns() {
        let v = vocab();
        assert_eq!(
            token_texts(&tokenize_wordpiece(&v, "playing plays")),
            ["[cls]", "play", "##ing", "play", "##s", "[sep]"]
        );
        assert_eq!(token_texts(&tokenize_wordpiece(&v, "zzz")), ["[cls]", "[unk]", "[sep]"]);
        assert_eq!(
            token_texts(&tokenize_wordpiece(&v, "hello!")),
            ["[cls]", "hello", "!", "[sep]"]
        );
    }

    #[test]
    fn ids_are_line_numbers() {
        let v = vocab();
        assert_eq!(v.id("[cls]"), Some(2));
        assert_eq!(v.id("hello"), Some(4));
    }

    #[test]
    fn missing_specials() {
        let err = WordPieceVocab::parse("[CLS]\n[SEP]\nhello").unwrap_err();
        assert_eq!(err, TextError::MissingSpecialToken("[UNK]".into()));
        // uppercase spellings are accepted as-is
        let v = WordPieceVocab::parse("[CLS]\n[SEP]\n[UNK]").unwrap();
        assert_eq!(token_texts(&tokenize_wordpiece(&v, "")), ["[CLS]", "[SEP]"]);
    }
}
