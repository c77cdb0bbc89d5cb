use std::sync::LazyLock;

use regex::Regex;

use super::Token;

/// Replacement token for numbers and roman numerals.
pub const DIGIT_TOKEN: &str = "<digit>";

static DECIMAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[0-9]+(?:[.,][0-9]+)*$").unwrap());
// canonical roman numerals 1..=3999
static ROMAN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^m{0,3}(?:cm|cd|d?c{0,3})(?:xc|xl|l?x{0,3})(?:ix|iv|v?i{0,3})$").unwrap()
});

/// Words and unit abbreviations that happen to parse as roman numerals.
const ROMAN_LOOKALIKES: &[&str] = &[
    "cd", "ci", "cm", "cv", "dc", "di", "dl", "li", "mc", "md", "mi", "mix", "ml", "mm",
];

fn is_roman(s: &str) -> bool {
    s.len() >= 2 && ROMAN.is_match(s) && !ROMAN_LOOKALIKES.contains(&s)
}

/// True for decimal numbers (with optional `.`/`,` groups) and roman numerals
/// of length two or more that are not common lookalike words.
pub fn is_number_token(s: &str) -> bool {
    DECIMAL.is_match(s) || is_roman(s)
}

/// Replace numeric tokens by [`DIGIT_TOKEN`]. Length-preserving.
pub fn normalize_numbers(tokens: Vec<Token>) -> Vec<Token> {
    tokens
        .into_iter()
        .map(|t| {
            if is_number_token(t.as_str()) {
                Token::from_trusted(DIGIT_TOKEN.to_string())
            } else {
                t
            }
        })
        .collect()
}
