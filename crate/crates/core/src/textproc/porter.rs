//! Porter (1980) suffix-stripping stemmer, steps 1a through 5b.
//!
//! Rule lists are ordered and the first suffix that matches decides the
//! outcome: if its condition fails the word is returned unchanged and no
//! later rule in the same step is tried.

use super::Token;

type Cond = fn(&[u8]) -> bool;

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// Number of VC sequences in `[C](VC)^m[V]`.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let vowel = !is_consonant(w, i);
        if prev_vowel && !vowel {
            m += 1;
        }
        prev_vowel = vowel;
    }
    m
}

fn m_gt0(w: &[u8]) -> bool {
    measure(w) > 0
}

fn m_gt1(w: &[u8]) -> bool {
    measure(w) > 1
}

fn contains_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_consonant(w, i))
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// `*o`: ends consonant-vowel-consonant, last not w, x or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

/// Apply the first rule whose suffix matches.
fn apply_rules(w: Vec<u8>, rules: &[(&str, &str, Option<Cond>)]) -> Vec<u8> {
    for &(suffix, replacement, cond) in rules {
        if w.ends_with(suffix.as_bytes()) {
            let stem = &w[..w.len() - suffix.len()];
            if cond.is_none_or(|c| c(stem)) {
                let mut out = stem.to_vec();
                out.extend_from_slice(replacement.as_bytes());
                return out;
            }
            return w;
        }
    }
    w
}

fn step1a(w: Vec<u8>) -> Vec<u8> {
    apply_rules(
        w,
        &[
            ("sses", "ss", None),
            ("ies", "i", None),
            ("ss", "ss", None),
            ("s", "", None),
        ],
    )
}

fn step1b(w: Vec<u8>) -> Vec<u8> {
    if w.ends_with(b"eed") {
        let stem = &w[..w.len() - 3];
        if measure(stem) > 0 {
            let mut out = stem.to_vec();
            out.extend_from_slice(b"ee");
            return out;
        }
        return w;
    }
    let mut stem = None;
    for suffix in [&b"ed"[..], b"ing"] {
        if w.ends_with(suffix) {
            let candidate = &w[..w.len() - suffix.len()];
            if contains_vowel(candidate) {
                stem = Some(candidate.to_vec());
                break;
            }
        }
    }
    let Some(stem) = stem else {
        return w;
    };
    for (suffix, replacement) in [("at", "ate"), ("bl", "ble"), ("iz", "ize")] {
        if stem.ends_with(suffix.as_bytes()) {
            let mut out = stem[..stem.len() - suffix.len()].to_vec();
            out.extend_from_slice(replacement.as_bytes());
            return out;
        }
    }
    if ends_double_consonant(&stem) {
        if matches!(stem[stem.len() - 1], b'l' | b's' | b'z') {
            return stem;
        }
        return stem[..stem.len() - 1].to_vec();
    }
    if measure(&stem) == 1 && ends_cvc(&stem) {
        let mut out = stem;
        out.push(b'e');
        return out;
    }
    stem
}

fn step1c(w: Vec<u8>) -> Vec<u8> {
    apply_rules(w, &[("y", "i", Some(contains_vowel))])
}

fn step2(w: Vec<u8>) -> Vec<u8> {
    let p = Some(m_gt0 as Cond);
    apply_rules(
        w,
        &[
            ("ational", "ate", p),
            ("tional", "tion", p),
            ("enci", "ence", p),
            ("anci", "ance", p),
            ("izer", "ize", p),
            ("abli", "able", p),
            ("alli", "al", p),
            ("entli", "ent", p),
            ("eli", "e", p),
            ("ousli", "ous", p),
            ("ization", "ize", p),
            ("ation", "ate", p),
            ("ator", "ate", p),
            ("alism", "al", p),
            ("iveness", "ive", p),
            ("fulness", "ful", p),
            ("ousness", "ous", p),
            ("aliti", "al", p),
            ("iviti", "ive", p),
            ("biliti", "ble", p),
        ],
    )
}

fn step3(w: Vec<u8>) -> Vec<u8> {
    let p = Some(m_gt0 as Cond);
    apply_rules(
        w,
        &[
            ("icate", "ic", p),
            ("ative", "", p),
            ("alize", "al", p),
            ("iciti", "ic", p),
            ("ical", "ic", p),
            ("ful", "", p),
            ("ness", "", p),
        ],
    )
}

fn ion_cond(stem: &[u8]) -> bool {
    m_gt1(stem) && matches!(stem.last(), Some(b's' | b't'))
}

fn step4(w: Vec<u8>) -> Vec<u8> {
    let p = Some(m_gt1 as Cond);
    apply_rules(
        w,
        &[
            ("al", "", p),
            ("ance", "", p),
            ("ence", "", p),
            ("er", "", p),
            ("ic", "", p),
            ("able", "", p),
            ("ible", "", p),
            ("ant", "", p),
            ("ement", "", p),
            ("ment", "", p),
            ("ent", "", p),
            ("ion", "", Some(ion_cond)),
            ("ou", "", p),
            ("ism", "", p),
            ("ate", "", p),
            ("iti", "", p),
            ("ous", "", p),
            ("ive", "", p),
            ("ize", "", p),
        ],
    )
}

fn step5a(w: Vec<u8>) -> Vec<u8> {
    if w.ends_with(b"e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            return stem.to_vec();
        }
    }
    w
}

fn step5b(w: Vec<u8>) -> Vec<u8> {
    if w.ends_with(b"ll") && measure(&w[..w.len() - 1]) > 1 {
        return w[..w.len() - 1].to_vec();
    }
    w
}

/// Stem a lowercase word. Anything that is not purely `a-z` is returned as is.
pub fn stem_str(word: &str) -> String {
    if word.is_empty() || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let w = word.as_bytes().to_vec();
    let w = step1a(w);
    let w = step1b(w);
    let w = step1c(w);
    let w = step2(w);
    let w = step3(w);
    let w = step4(w);
    let w = step5a(w);
    let w = step5b(w);
    // only ASCII letters ever reach here
    String::from_utf8(w).expect("ascii")
}

pub fn stem(token: &Token) -> Token {
    let s = stem_str(token.as_str());
    if s.is_empty() {
        // rules never strip a word to nothing, but stay total
        return token.clone();
    }
    Token::from_trusted(s)
}
