//! Deterministic text normalization shared by every stage of the pipeline.
//!
//! The processing order for a raw field is fixed:
//! [`clean_text`] → [`segment_sentences`] → [`detect_citation`] (on the
//! cleaned, pre-normalization sentence, so bracketed markers such as `[2]`
//! survive) → [`tokenize`] → [`normalize_numbers`].
//!
//! Everything in here is a pure function.

mod citation;
mod clean;
mod numbers;
mod porter;
mod segment;
mod tokenize;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use citation::detect_citation;
pub use clean::clean_text;
pub use numbers::{is_number_token, normalize_numbers, DIGIT_TOKEN};
pub use porter::{stem, stem_str};
pub use segment::{segment_sentences, ABBREVIATIONS};
pub use tokenize::tokenize;

/// Literal delimiter placed between segments of an assembled source.
pub const SEP_TOKEN: &str = "<sep>";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenError {
    #[error("token is empty")]
    Empty,
    #[error("token {0:?} contains whitespace")]
    Whitespace(String),
}

/// A single lowercase word-level token. Never empty, never contains whitespace.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    pub fn new(surface: impl Into<String>) -> Result<Self, TokenError> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(TokenError::Empty);
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(TokenError::Whitespace(surface));
        }
        Ok(Token(surface))
    }

    /// Caller guarantees the invariants; used by the tokenizer internals.
    pub(crate) fn from_trusted(surface: String) -> Self {
        debug_assert!(!surface.is_empty() && !surface.chars().any(char::is_whitespace));
        Token(surface)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the token is made only of punctuation/symbol characters.
    pub fn is_punctuation(&self) -> bool {
        self.0.chars().all(|c| !c.is_alphanumeric())
    }
}

impl TryFrom<String> for Token {
    type Error = TokenError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Token::new(value)
    }
}

impl From<Token> for String {
    fn from(t: Token) -> String {
        t.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// One sentence of a title, abstract or body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    /// Model-input form: tokenized and number-normalized.
    pub tokens: Vec<Token>,
    /// Display form: the cleaned sentence before `<digit>` replacement.
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub is_citation: bool,
    /// 0-based position within the owning field.
    pub body_index: usize,
}

/// Tokenize and normalize a cleaned string in one step.
pub fn to_tokens(cleaned: &str) -> Vec<Token> {
    normalize_numbers(tokenize(cleaned))
}

/// Clean, segment, flag and tokenize a raw field into sentences.
///
/// Sentences that end up with no tokens are dropped, and `body_index`
/// is assigned after dropping so indices stay dense.
pub fn process_field(raw: &str) -> Vec<Sentence> {
    let cleaned = clean_text(raw);
    segment_sentences(&cleaned)
        .into_iter()
        .filter_map(|text| {
            let tokens = to_tokens(&text);
            if tokens.is_empty() {
                return None;
            }
            let is_citation = detect_citation(&text);
            Some((tokens, text, is_citation))
        })
        .enumerate()
        .map(|(body_index, (tokens, text, is_citation))| Sentence {
            tokens,
            text,
            is_citation,
            body_index,
        })
        .collect()
}

/// Stem a token sequence token-wise.
pub fn stem_all(tokens: &[Token]) -> Vec<String> {
    tokens.iter().map(|t| stem_str(t.as_str())).collect()
}

/// Render tokens back to text with single spaces.
pub fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_str());
    }
    out
}
