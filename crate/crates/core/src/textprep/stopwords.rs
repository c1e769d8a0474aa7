use std::collections::HashSet;
use std::io;
use std::path::Path;

const BUNDLED_EN: &str = include_str!("../../data/stopwords_en.txt");

fn parse(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// The bundled English stoplist.
pub fn default_stoplist() -> HashSet<String> {
    parse(BUNDLED_EN)
}

/// Reads a stoplist file: one word per line, `#` starts a comment line.
pub fn load_stoplist(path: impl AsRef<Path>) -> io::Result<HashSet<String>> {
    Ok(parse(&std::fs::read_to_string(path)?))
}

#[cfg(test)]
mod tests {
    #[test]
    fn bundled_list_is_lowercase_and_nonempty() {
        let list = super::default_stoplist();
        assert!(list.len() > 100);
        assert!(list.contains("are"));
        assert!(list.iter().all(|w| w.to_lowercase() == *w));
    }
}
