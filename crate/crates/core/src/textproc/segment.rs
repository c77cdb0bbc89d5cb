/// Words after which a period never ends a sentence. `et al.` is covered by `al.`.
pub const ABBREVIATIONS: &[&str] = &[
    "fig.", "eq.", "e.g.", "i.e.", "vs.", "dr.", "prof.", "sec.", "no.", "al.",
];

/// Byte ranges `[start, end]` of balanced square-bracket spans.
fn bracket_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut open = Vec::new();
    for (i, c) in text.char_indices() {
        match c {
            '[' => open.push(i),
            ']' => {
                if let Some(start) = open.pop() {
                    spans.push((start, i));
                }
            }
            _ => {}
        }
    }
    spans
}

fn ends_with_abbreviation(chunk: &str) -> bool {
    let word = chunk.rsplit(' ').next().unwrap_or(chunk);
    let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    ABBREVIATIONS.contains(&word)
}

/// Split cleaned text into sentences.
///
/// A boundary follows a run of `.`, `!` or `?` when the next character is
/// whitespace, unless the word before the terminator is a known abbreviation
/// or the terminator sits inside a balanced `[...]` span.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let spans = bracket_spans(text);
    let inside_brackets = |pos: usize| spans.iter().any(|&(s, e)| s < pos && pos < e);

    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let next_ws = match chars.peek() {
            Some(&(_, n)) => n.is_whitespace(),
            None => false,
        };
        if !next_ws || inside_brackets(i) {
            continue;
        }
        let end = i + c.len_utf8();
        let candidate = &text[start..end];
        if c == '.' && ends_with_abbreviation(candidate) {
            continue;
        }
        let trimmed = candidate.trim();
        if !trimmed.is_empty() {
            sentences.push(trimmed.to_string());
        }
        start = end;
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        sentences.push(rest.to_string());
    }
    sentences
}
