//! Tokenization and surface-string normalization shared by the linker,
//! the reformulation rules, and the QA model.

/// Question words after which answer-type and relation insertions land.
pub const WH_WORDS: [&str; 8] = ["who", "what", "when", "where", "which", "whom", "whose", "how"];

const ARTICLES: [&str; 3] = ["the", "a", "an"];

pub fn is_terminal_punct(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| matches!(c, '?' | '.' | '!'))
}

pub fn is_article(token: &str) -> bool {
    ARTICLES.iter().any(|a| a.eq_ignore_ascii_case(token))
}

pub fn is_wh_word(token: &str) -> bool {
    let lower = token.to_lowercase();
    WH_WORDS.contains(&lower.as_str())
}

/// Whitespace split, with a trailing run of `?`, `.`, `!` separated into its
/// own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
    if let Some(last) = tokens.pop() {
        let body = last.trim_end_matches(['?', '.', '!']);
        if body.is_empty() || body.len() == last.len() {
            tokens.push(last);
        } else {
            let punct = last[body.len()..].to_owned();
            tokens.push(body.to_owned());
            tokens.push(punct);
        }
    }
    tokens
}

/// Inverse of [`tokenize`] for token sequences it produced.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        let tok = tok.as_ref();
        if i > 0 && !(i == tokens.len() - 1 && is_terminal_punct(tok)) {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Case-folded, whitespace-collapsed lookup key for a token sequence. A
/// leading article is dropped so "the band" and "band" share a key.
pub fn surface_key<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut folded: Vec<String> = tokens
        .iter()
        .map(|t| t.as_ref().to_lowercase())
        .filter(|t| !t.is_empty())
        .collect();
    if folded.len() > 1 && is_article(&folded[0]) {
        folded.remove(0);
    }
    folded.join(" ")
}

/// [`surface_key`] of a raw string.
pub fn normalize(surface: &str) -> String {
    let tokens: Vec<&str> = surface.split_whitespace().collect();
    surface_key(&tokens)
}
