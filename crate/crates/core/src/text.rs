//! Tokenization, normalization, lemmatization and quantity fusion.
//!
//! Every later stage works on [`Token`]s produced here. The functions are
//! pure; a [`LexiconConfig`] carries the per-language word lists.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Dictionary view shared by every number and quantity token.
pub const NUM_CONSTANT: &str = "<NUM>";

const ENGLISH_LEXICON: &str = include_str!("../fixtures/lexicon_en.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Number,
    Quantity,
    Punctuation,
}

/// Byte range into the analyzed input, end exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    pub lemma: String,
    pub span: Span,
    pub kind: TokenKind,
}

impl Token {
    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, TokenKind::Number | TokenKind::Quantity)
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("lexicon entry at {path} is not normalized: {value:?} (expected {expected:?})")]
    NotNormalized {
        path: String,
        value: String,
        expected: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconConfig {
    #[serde(rename = "language")]
    pub language_tag: String,
    #[serde(rename = "lemmas")]
    pub lemma_map: BTreeMap<String, String>,
    #[serde(rename = "units")]
    pub unit_words: BTreeSet<String>,
    #[serde(rename = "connectors")]
    pub connector_words: BTreeSet<String>,
    #[serde(rename = "boundaries")]
    pub boundary_words: BTreeSet<String>,
}

impl LexiconConfig {
    /// Parse a lexicon JSON document and check that every key and word list
    /// entry is already in normalized form.
    pub fn from_json(document: &[u8]) -> Result<Self, LexiconError> {
        let mut de = serde_json::Deserializer::from_slice(document);
        let lexicon: LexiconConfig =
            serde_path_to_error::deserialize(&mut de).map_err(|e| LexiconError::Schema {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        de.end().map_err(|e| LexiconError::Schema {
            path: ".".into(),
            message: e.to_string(),
        })?;
        lexicon.check_normalized()?;
        Ok(lexicon)
    }

    /// The built-in English resource set.
    pub fn english() -> Self {
        Self::from_json(ENGLISH_LEXICON.as_bytes()).expect("bundled lexicon is valid")
    }

    fn check_normalized(&self) -> Result<(), LexiconError> {
        let check = |path: String, value: &str| {
            let expected = normalize(value);
            if expected != value {
                return Err(LexiconError::NotNormalized {
                    path,
                    value: value.to_string(),
                    expected,
                });
            }
            Ok(())
        };
        for (key, lemma) in &self.lemma_map {
            check(format!("lemmas.{key}"), key)?;
            check(format!("lemmas.{key}"), lemma)?;
        }
        for (name, set) in [
            ("units", &self.unit_words),
            ("connectors", &self.connector_words),
            ("boundaries", &self.boundary_words),
        ] {
            for word in set {
                check(format!("{name}[{word}]"), word)?;
            }
        }
        Ok(())
    }

    pub fn is_unit(&self, word: &str) -> bool {
        self.unit_words.contains(word)
    }

    pub fn is_connector(&self, word: &str) -> bool {
        self.connector_words.contains(word)
    }

    pub fn is_boundary(&self, word: &str) -> bool {
        self.boundary_words.contains(word)
    }
}

impl Default for LexiconConfig {
    fn default() -> Self {
        Self::english()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c)
}

fn is_decimal_separator(c: char) -> bool {
    c == '.' || c == ','
}

/// Lowercase, decompose, and drop combining marks.
///
/// Compatibility decomposition is used so styled letters such as `𝔖`, which
/// have no lowercase mapping of their own, fold to their plain form.
pub fn normalize(surface: &str) -> String {
    let stripped: String = surface
        .nfkd()
        .filter(|c| !is_combining_mark(*c))
        .collect::<String>()
        .to_lowercase();
    // Lowercasing can expose new decompositions; a second pass reaches the
    // fixed point.
    stripped.nfkd().filter(|c| !is_combining_mark(*c)).collect()
}

/// Digits with at most one interior decimal separator.
fn is_number_text(s: &str) -> bool {
    let mut separators = 0;
    let bytes = s.as_bytes();
    if bytes.is_empty() || !bytes[0].is_ascii_digit() || !bytes[bytes.len() - 1].is_ascii_digit() {
        return false;
    }
    for &b in bytes {
        if b == b'.' || b == b',' {
            separators += 1;
        } else if !b.is_ascii_digit() {
            return false;
        }
    }
    separators <= 1
}

fn kind_of(normalized: &str) -> TokenKind {
    if is_number_text(normalized) {
        TokenKind::Number
    } else if normalized.chars().any(is_word_char) {
        TokenKind::Word
    } else {
        TokenKind::Punctuation
    }
}

fn make_token(text: &str, start: usize, end: usize) -> Token {
    let surface = &text[start..end];
    let normalized = normalize(surface);
    Token {
        surface: surface.to_string(),
        kind: kind_of(&normalized),
        lemma: normalized.clone(),
        normalized,
        span: Span { start, end },
    }
}

/// Split on whitespace and punctuation. Each punctuation character is its own
/// token; a single `.` or `,` between digits stays inside a number.
/// Lemmas are left equal to the normalized form.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut word_start: Option<usize> = None;
    // number-so-far state for the current word
    let mut all_digits = true;
    let mut seen_separator = false;

    while let Some((i, c)) = chars.next() {
        if is_word_char(c) {
            if word_start.is_none() {
                word_start = Some(i);
                all_digits = true;
                seen_separator = false;
            }
            if !c.is_ascii_digit() {
                all_digits = false;
            }
            continue;
        }

        if is_decimal_separator(c) && all_digits && !seen_separator && word_start.is_some() {
            if let Some(&(_, next)) = chars.peek() {
                if next.is_ascii_digit() {
                    seen_separator = true;
                    continue;
                }
            }
        }

        if let Some(start) = word_start.take() {
            tokens.push(make_token(text, start, i));
        }
        if !c.is_whitespace() {
            tokens.push(make_token(text, i, i + c.len_utf8()));
        }
    }
    if let Some(start) = word_start {
        tokens.push(make_token(text, start, text.len()));
    }
    tokens
}

pub fn lemmatize(normalized: &str, lexicon: &LexiconConfig) -> String {
    lexicon
        .lemma_map
        .get(normalized)
        .cloned()
        .unwrap_or_else(|| normalized.to_string())
}

/// Splits `"8gb"` into `("8", "gb")` when the suffix is a unit word.
fn split_inline_quantity<'a>(normalized: &'a str, lexicon: &LexiconConfig) -> Option<(&'a str, &'a str)> {
    let idx = normalized
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_digit() || is_decimal_separator(*c)))
        .map(|(i, _)| i)?;
    let (digits, unit) = normalized.split_at(idx);
    (is_number_text(digits) && lexicon.is_unit(unit)).then_some((digits, unit))
}

/// Merge each adjacent `(number, unit word)` pair into one quantity token.
///
/// A single word that already reads as digits followed by a unit (`8GB`) is
/// re-kinded as a quantity so both spellings normalize identically. The source
/// text is needed to keep `surface` a faithful slice of the input.
pub fn fuse_quantities(text: &str, tokens: Vec<Token>, lexicon: &LexiconConfig) -> Vec<Token> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut iter = tokens.into_iter().peekable();
    while let Some(mut tok) = iter.next() {
        if tok.kind == TokenKind::Number {
            let pairs = iter
                .peek()
                .map(|next| next.kind == TokenKind::Word && lexicon.is_unit(&next.normalized))
                .unwrap_or(false);
            if pairs {
                let unit = iter.next().expect("peeked");
                let span = Span {
                    start: tok.span.start,
                    end: unit.span.end,
                };
                let normalized = format!("{}{}", tok.normalized, unit.normalized);
                out.push(Token {
                    surface: text[span.start..span.end].to_string(),
                    lemma: normalized.clone(),
                    normalized,
                    span,
                    kind: TokenKind::Quantity,
                });
                continue;
            }
        } else if tok.kind == TokenKind::Word && split_inline_quantity(&tok.normalized, lexicon).is_some() {
            tok.kind = TokenKind::Quantity;
        }
        out.push(tok);
    }
    out
}

/// The form used by the out-of-vocabulary check: every number or quantity
/// collapses to [`NUM_CONSTANT`].
pub fn number_constant_view(token: &Token) -> &str {
    if token.is_numeric() {
        NUM_CONSTANT
    } else {
        &token.lemma
    }
}

/// Full analysis: tokenize, fuse quantities, then fill in word lemmas.
pub fn analyze(text: &str, lexicon: &LexiconConfig) -> Vec<Token> {
    let mut tokens = fuse_quantities(text, tokenize(text), lexicon);
    for tok in &mut tokens {
        if tok.kind == TokenKind::Word {
            tok.lemma = lemmatize(&tok.normalized, lexicon);
        }
    }
    tokens
}
