use std::sync::LazyLock;

use regex::Regex;

// [2], [12, 13], [4 5], [3-7], [1, 4-6]
static NUMERIC: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\[\s*\d+(?:\s*[-–]\s*\d+)?(?:(?:\s*,\s*|\s+)\d+(?:\s*[-–]\s*\d+)?)*\s*\]").unwrap()
});
// "et al." followed within 40 characters by a parenthesized year
static AUTHOR_YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"et al\..{0,40}?\(\d{4}\)").unwrap());

/// Whether a cleaned sentence cites another work.
pub fn detect_citation(sentence: &str) -> bool {
    NUMERIC.is_match(sentence) || AUTHOR_YEAR.is_match(sentence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_markers() {
        assert!(detect_citation("requirements document [2] states that"));
        assert!(detect_citation("prior work [12, 13] shows"));
        assert!(detect_citation("see [3-7]."));
        assert!(detect_citation("see [1, 4–6]."));
        assert!(detect_citation("see [4 5]."));
    }

    #[test]
    fn non_citations() {
        assert!(!detect_citation("the keep-out region is a region around"));
        assert!(!detect_citation("array index [i] is used"));
        assert!(!detect_citation("an interval [0.5, 1] of values"));
        assert!(!detect_citation("smith et al. showed it"));
        assert!(!detect_citation("in (2019) we"));
    }

    #[test]
    fn author_year() {
        assert!(detect_citation("as shown in smith et al. (2019) results"));
        let far = format!("smith et al. {} (2019)", "x".repeat(45));
        assert!(!detect_citation(&far));
    }

    #[test]
    fn pure_across_threads() {
        let inputs = ["a [1] b", "no cite", "jones et al. (2001)"];
        let expected: Vec<bool> = inputs.iter().map(|s| detect_citation(s)).collect();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                std::thread::spawn(move || {
                    inputs
                        .iter()
                        .map(|s| detect_citation(s))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), expected);
        }
    }
}
