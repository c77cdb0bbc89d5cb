use std::sync::LazyLock;

use regex::Regex;

// Literal backslash escapes as they appear in scraped text (`\n`, `\t`, `\r`).
static ESCAPES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\[ntr]").unwrap());
static TAGS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^<>]*>").unwrap());
// scheme:// runs, www. runs, and any leftover token carrying "http"
static URLS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:[a-z][a-z0-9+.\-]*://|www\.)\S*|\S*http\S*").unwrap());
static EMAILS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\S*\w@\w\S*").unwrap());

/// Lowercase and strip markup noise from raw article text.
///
/// Removes literal escape sequences and control characters, HTML tags,
/// URLs and email addresses, then collapses whitespace.
pub fn clean_text(raw: &str) -> String {
    if raw.is_empty() {
        return String::new();
    }
    let lowered = raw.to_lowercase();
    let no_ctrl: String = lowered
        .chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    let s = ESCAPES.replace_all(&no_ctrl, " ");
    let s = TAGS.replace_all(&s, " ");
    let s = URLS.replace_all(&s, " ");
    let s = EMAILS.replace_all(&s, " ");
    // stray angle brackets left over from broken markup
    let s: String = s
        .chars()
        .map(|c| if c == '<' || c == '>' { ' ' } else { c })
        .collect();
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
