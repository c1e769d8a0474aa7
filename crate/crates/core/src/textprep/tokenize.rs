use super::{TextError, Token, TokenStream, EOW};

/// Whitespace split with leading/trailing non-alphanumeric characters
/// stripped; words left empty by stripping are dropped.
pub fn split_words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
}

pub fn tokenize_word(text: &str) -> TokenStream {
    split_words(text)
        .filter_map(Token::new)
        .collect()
}

/// Character n-grams of each `#word#`.
pub fn tokenize_semhash(text: &str, n: usize) -> Result<TokenStream, TextError> {
    if n == 0 {
        return Err(TextError::InvalidN);
    }
    let mut out = Vec::new();
    for word in split_words(text) {
        let padded: Vec<char> = std::iter::once('#')
            .chain(word.chars())
            .chain(std::iter::once('#'))
            .collect();
        if padded.len() < n {
            out.extend(Token::new(padded.iter().collect::<String>()));
            continue;
        }
        for window in padded.windows(n) {
            out.extend(Token::new(window.iter().collect::<String>()));
        }
    }
    Ok(out)
}

/// Characters of each whitespace-separated word, the last one carrying
/// the end-of-word marker.
pub fn tokenize_char(text: &str) -> TokenStream {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        out.extend(word_symbols(word).into_iter().filter_map(Token::new));
    }
    out
}

pub(crate) fn word_symbols(word: &str) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    if let Some(last) = symbols.last_mut() {
        last.push_str(EOW);
    }
    symbols
}
