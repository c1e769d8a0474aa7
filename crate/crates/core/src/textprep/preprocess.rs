use std::collections::HashSet;

use super::stopwords::default_stoplist;

/// Preprocessing switches applied before tokenization.
#[derive(Debug, Clone, PartialEq, Eq)]
#[derive(Default)]
pub struct PrepConfig {
    pub remove_stopwords: bool,
    pub lowercase: bool,
    /// Lowercase entries; matched case-insensitively against whole words.
    pub stoplist: HashSet<String>,
}


impl PrepConfig {
    /// Stopword removal with the bundled English list.
    pub fn with_stopwords() -> Self {
        PrepConfig {
            remove_stopwords: true,
            lowercase: false,
            stoplist: default_stoplist(),
        }
    }
}

/// Unicode general category Cc: U+0000..=U+001F and U+007F..=U+009F.
pub fn is_control(c: char) -> bool {
    matches!(c as u32, 0x00..=0x1F | 0x7F..=0x9F)
}

/// Removes control characters, collapses whitespace runs to one space and
/// trims. Optionally lowercases and drops stopwords.
pub fn preprocess(text: &str, cfg: &PrepConfig) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        // ASCII tab/newline separate words; other controls (incl. U+0085) vanish.
        if is_control(c) && !c.is_ascii_whitespace() {
            continue;
        }
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        if cfg.lowercase {
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    if !cfg.remove_stopwords {
        return out;
    }
    out.split(' ')
        .filter(|w| {
            let bare = w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
            bare.is_empty() || !cfg.stoplist.contains(&bare)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removes_control_characters() {
        let cfg = PrepConfig::default();
        assert_eq!(preprocess("hello\u{0001} how", &cfg), "hello how");
        assert_eq!(preprocess("a\u{0085}b\u{009F}c\u{007F}", &cfg), "abc");
        assert_eq!(preprocess("", &cfg), "");
    }

    #[test]
    fn collapses_and_trims_whitespace() {
        let cfg = PrepConfig::default();
        assert_eq!(preprocess("  a \t\n b  ", &cfg), "a b");
        assert_eq!(preprocess("\u{0001}  \u{0002}", &cfg), "");
    }

    #[test]
    fn stopword_filter() {
        let cfg = PrepConfig {
            remove_stopwords: true,
            lowercase: false,
            stoplist: ["are".to_string()].into_iter().collect(),
        };
        assert_eq!(preprocess("how are you", &cfg), "how you");
        assert_eq!(preprocess("how ARE you?", &cfg), "how you?");
        // whole-word only
        assert_eq!(preprocess("aware", &cfg), "aware");
    }

    #[test]
    fn lowercasing_is_optional() {
        let mut cfg = PrepConfig::default();
        assert_eq!(preprocess("Hello", &cfg), "Hello");
        cfg.lowercase = true;
        assert_eq!(preprocess("Hello", &cfg), "hello");
    }
}
