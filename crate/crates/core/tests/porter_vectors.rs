//! Frozen Porter vectors produced by an independent reference implementation
//! of the original rule set.

use kpaug::textproc::stem_str;

#[test]
fn matches_reference_vectors() {
    let data = include_str!("data/porter_vectors.tsv");
    let mut failures = Vec::new();
    let mut n = 0;
    for line in data.lines() {
        let (word, expected) = line.split_once('\t').expect("word<TAB>stem");
        n += 1;
        let got = stem_str(word);
        if got != expected {
            failures.push(format!("{word}: expected {expected}, got {got}"));
        }
    }
    assert!(n > 6000);
    assert!(
        failures.is_empty(),
        "{} mismatches:\n{}",
        failures.len(),
        failures.join("\n")
    );
}
