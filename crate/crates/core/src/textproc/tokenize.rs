use super::{Token, DIGIT_TOKEN, SEP_TOKEN};

/// Split one whitespace-free chunk into word and punctuation tokens.
///
/// Alphanumeric runs form words; every other character is its own token,
/// except a `.` or `,` with a digit on both sides, which stays inside the
/// number (`802.22`, `1,000`).
fn split_chunk(chunk: &str, out: &mut Vec<Token>) {
    if chunk == DIGIT_TOKEN || chunk == SEP_TOKEN {
        out.push(Token::from_trusted(chunk.to_string()));
        return;
    }
    let chars: Vec<char> = chunk.chars().collect();
    let mut word = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        let numeric_separator = matches!(c, '.' | ',')
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())
            && !word.is_empty();
        if numeric_separator {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            out.push(Token::from_trusted(std::mem::take(&mut word)));
        }
        out.push(Token::from_trusted(c.to_string()));
    }
    if !word.is_empty() {
        out.push(Token::from_trusted(word));
    }
}

/// Word-tokenize a cleaned sentence.
pub fn tokenize(sentence: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for chunk in sentence.split_whitespace() {
        split_chunk(chunk, &mut out);
    }
    out
}
