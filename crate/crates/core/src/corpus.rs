//! Article data model, ingestion, dedup, splitting and dataset statistics.
//!
//! Two on-disk record formats are understood, both one JSON object per line:
//!
//! * **raw**: `{"id", "title", "abstract", "fulltext", "keywords", "references"}`
//!   where `keywords` and `references` are either a list of strings or a single
//!   `;`-separated string. All six fields must be present and non-empty.
//! * **processed**: the output of `kpaug preprocess`: a serialized [`Article`]
//!   plus a `split` field.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::hash::Hasher;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemble::{AssembledSource, Method};
use crate::textproc::{self, clean_text, process_field, stem_all, to_tokens, Sentence, Token};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("empty corpus: {0}")]
    EmptyCorpus(String),
    #[error("empty keyphrase (invalid gold data)")]
    EmptyKeyphrase,
    #[error("unknown article id {0:?}")]
    UnknownArticle(String),
    #[error("article {id}: {reason}")]
    InvalidArticle { id: String, reason: String },
}

/// Input record flavour accepted by [`ingest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Raw,
    Processed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// One scholarly document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub title: Vec<Token>,
    #[serde(rename = "abstract")]
    pub abstract_sentences: Vec<Sentence>,
    pub body: Vec<Sentence>,
    pub keyphrases: Vec<Vec<Token>>,
    #[serde(default)]
    pub raw_title: String,
    #[serde(default)]
    pub raw_abstract: String,
}

impl Article {
    pub fn abstract_tokens(&self) -> Vec<Token> {
        self.abstract_sentences
            .iter()
            .flat_map(|s| s.tokens.iter().cloned())
            .collect()
    }

    /// Title ⊕ abstract as one token sequence; the present/absent scope.
    pub fn title_abstract_tokens(&self) -> Vec<Token> {
        let mut out = self.title.clone();
        out.extend(
            self.abstract_sentences
                .iter()
                .flat_map(|s| s.tokens.iter().cloned()),
        );
        out
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |reason: &str| {
            Err(CorpusError::InvalidArticle {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.id.is_empty() {
            return fail("empty id");
        }
        if self.title.is_empty() {
            return fail("empty title");
        }
        if self.abstract_sentences.is_empty() {
            return fail("empty abstract");
        }
        if self.keyphrases.is_empty() || self.keyphrases.iter().any(Vec::is_empty) {
            return fail("missing or empty keyphrases");
        }
        if self.body.iter().enumerate().any(|(i, s)| s.body_index != i) {
            return fail("body indices are not 0..len in order");
        }
        if self.body.iter().any(|s| s.tokens.is_empty()) {
            return fail("empty body sentence");
        }
        if !self.body.iter().any(|s| s.is_citation) {
            return fail("no citation sentence in body");
        }
        Ok(())
    }

    /// Dedup key: stemmed title tokens joined by spaces.
    pub fn dedup_key(&self) -> String {
        stem_all(&self.title).join(" ")
    }
}

/// An article split into train/val/test. Within each split, articles keep
/// their input file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub train: Vec<Article>,
    pub val: Vec<Article>,
    pub test: Vec<Article>,
    pub split_seed: u64,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn split(&self, split: Split) -> &[Article] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// All articles tagged with their split, train first.
    pub fn iter(&self) -> impl Iterator<Item = (Split, &Article)> {
        self.train
            .iter()
            .map(|a| (Split::Train, a))
            .chain(self.val.iter().map(|a| (Split::Val, a)))
            .chain(self.test.iter().map(|a| (Split::Test, a)))
    }

    pub fn articles(&self) -> impl Iterator<Item = &Article> {
        self.iter().map(|(_, a)| a)
    }

    pub fn by_id(&self) -> HashMap<&str, &Article> {
        self.articles().map(|a| (a.id.as_str(), a)).collect()
    }

    /// Split a flat list deterministically: articles are ranked by a hash of
    /// (seed, id) and the ranking is cut at round(0.8n) and round(0.1n).
    pub fn from_articles(articles: Vec<Article>, split_seed: u64) -> Corpus {
        let n = articles.len();
        let mut ranked: Vec<(u64, usize)> = articles
            .iter()
            .enumerate()
            .map(|(i, a)| (split_key(split_seed, &a.id), i))
            .collect();
        ranked.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then_with(|| articles[a.1].id.cmp(&articles[b.1].id))
        });
        let n_train = (n as f64 * 0.8).round() as usize;
        let n_val = ((n as f64 * 0.1).round() as usize).min(n - n_train);
        let mut assignment = vec![Split::Test; n];
        for (rank, &(_, i)) in ranked.iter().enumerate() {
            assignment[i] = if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
        let mut corpus = Corpus {
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
            split_seed,
        };
        for (article, split) in articles.into_iter().zip(assignment) {
            corpus.push(split, article);
        }
        corpus
    }

    pub fn push(&mut self, split: Split, article: Article) {
        match split {
            Split::Train => self.train.push(article),
            Split::Val => self.val.push(article),
            Split::Test => self.test.push(article),
        }
    }

    /// Write the processed record format, train then val then test.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (split, article) in self.iter() {
            let rec = ProcessedRecordRef { split, article };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn split_key(seed: u64, id: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&seed.to_le_bytes());
    h.write(id.as_bytes());
    h.finish()
}

#[derive(Serialize)]
struct ProcessedRecordRef<'a> {
    split: Split,
    #[serde(flatten)]
    article: &'a Article,
}

/// One line of the processed format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessedRecord {
    pub split: Split,
    #[serde(flatten)]
    pub article: Article,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StringOrList {
    One(String),
    Many(Vec<String>),
}

impl StringOrList {
    pub fn items(&self) -> Vec<&str> {
        let items: Vec<&str> = match self {
            StringOrList::One(s) => s.split(';').collect(),
            StringOrList::Many(v) => v.iter().map(String::as_str).collect(),
        };
        items
            .into_iter()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect()
    }
}

/// One line of the raw interchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: Option<String>,
    pub title: Option<String>,
    #[serde(rename = "abstract")]
    pub abstract_text: Option<String>,
    pub fulltext: Option<String>,
    pub keywords: Option<StringOrList>,
    pub references: Option<StringOrList>,
}

/// Why a raw record did not become an article.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    MissingField(&'static str),
    NoCitations,
}

impl RawRecord {
    /// Run the text pipeline over the record.
    pub fn into_article(self) -> Result<Article, Rejection> {
        fn nonempty(v: Option<String>, name: &'static str) -> Result<String, Rejection> {
            match v {
                Some(s) if !s.trim().is_empty() => Ok(s),
                _ => Err(Rejection::MissingField(name)),
            }
        }
        let id = nonempty(self.id, "id")?.trim().to_string();
        let raw_title = nonempty(self.title, "title")?;
        let raw_abstract = nonempty(self.abstract_text, "abstract")?;
        let fulltext = nonempty(self.fulltext, "fulltext")?;
        let keywords = self.keywords.ok_or(Rejection::MissingField("keywords"))?;
        let references = self
            .references
            .ok_or(Rejection::MissingField("references"))?;
        if references.items().is_empty() {
            return Err(Rejection::MissingField("references"));
        }

        let title = to_tokens(&clean_text(&raw_title));
        if title.is_empty() {
            return Err(Rejection::MissingField("title"));
        }
        let abstract_sentences = process_field(&raw_abstract);
        if abstract_sentences.is_empty() {
            return Err(Rejection::MissingField("abstract"));
        }
        let body = process_field(&fulltext);
        if body.is_empty() {
            return Err(Rejection::MissingField("fulltext"));
        }
        let keyphrases: Vec<Vec<Token>> = keywords
            .items()
            .into_iter()
            .map(|k| to_tokens(&clean_text(k)))
            .filter(|k| !k.is_empty())
            .collect();
        if keyphrases.is_empty() {
            return Err(Rejection::MissingField("keywords"));
        }
        if !body.iter().any(|s| s.is_citation) {
            return Err(Rejection::NoCitations);
        }
        Ok(Article {
            id,
            title,
            abstract_sentences,
            body,
            keyphrases,
            raw_title,
            raw_abstract,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

/// Counters from one ingestion run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestReport {
    pub lines: usize,
    pub record_errors: Vec<RecordError>,
    pub dropped_missing_fields: usize,
    pub dropped_no_citations: usize,
    pub dropped_duplicates: usize,
    pub kept: usize,
}

#[derive(Debug)]
pub struct Ingested {
    pub corpus: Corpus,
    pub report: IngestReport,
}

enum Parsed {
    Article(Option<Split>, Box<Article>),
    Rejected(Rejection),
    Malformed(String),
}

fn parse_line(line: &str, format: RecordFormat) -> Parsed {
    match format {
        RecordFormat::Raw => match serde_json::from_str::<RawRecord>(line) {
            Ok(rec) => match rec.into_article() {
                Ok(a) => Parsed::Article(None, Box::new(a)),
                Err(r) => Parsed::Rejected(r),
            },
            Err(e) => Parsed::Malformed(e.to_string()),
        },
        RecordFormat::Processed => match serde_json::from_str::<ProcessedRecord>(line) {
            Ok(rec) => match rec.article.validate() {
                Ok(()) => Parsed::Article(Some(rec.split), Box::new(rec.article)),
                Err(CorpusError::InvalidArticle { reason, .. }) if reason.contains("citation") => {
                    Parsed::Rejected(Rejection::NoCitations)
                }
                Err(e) => Parsed::Malformed(e.to_string()),
            },
            Err(e) => Parsed::Malformed(e.to_string()),
        },
    }
}

/// Parse and validate one line of the processed format.
pub fn parse_processed(line: &str) -> Result<ProcessedRecord, CorpusError> {
    let rec: ProcessedRecord =
        serde_json::from_str(line).map_err(|e| CorpusError::InvalidArticle {
            id: "?".into(),
            reason: e.to_string(),
        })?;
    rec.article.validate()?;
    Ok(rec)
}

/// Ingest an in-memory record stream; see [`ingest`].
pub fn ingest_str(
    text: &str,
    format: RecordFormat,
    split_seed: u64,
) -> Result<Ingested, CorpusError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut report = IngestReport {
        lines: lines.len(),
        ..Default::default()
    };
    if lines.is_empty() {
        return Err(CorpusError::EmptyCorpus("no records in input".into()));
    }
    let parsed: Vec<(usize, Parsed)> = lines
        .par_iter()
        .map(|&(n, l)| (n, parse_line(l, format)))
        .collect();

    let mut seen_titles = HashSet::new();
    let mut seen_ids = HashSet::new();
    let mut kept: Vec<(Option<Split>, Article)> = Vec::new();
    for (line, p) in parsed {
        match p {
            Parsed::Malformed(message) => {
                warn!("line {line}: malformed record: {message}");
                report.record_errors.push(RecordError { line, message });
            }
            Parsed::Rejected(Rejection::MissingField(_)) => report.dropped_missing_fields += 1,
            Parsed::Rejected(Rejection::NoCitations) => report.dropped_no_citations += 1,
            Parsed::Article(split, article) => {
                if !seen_ids.insert(article.id.clone()) || !seen_titles.insert(article.dedup_key())
                {
                    report.dropped_duplicates += 1;
                    continue;
                }
                kept.push((split, *article));
            }
        }
    }
    report.kept = kept.len();
    if kept.is_empty() {
        return Err(CorpusError::EmptyCorpus(format!(
            "no articles left after filtering ({} missing fields, {} without citations, {} malformed)",
            report.dropped_missing_fields,
            report.dropped_no_citations,
            report.record_errors.len()
        )));
    }
    let corpus = match format {
        RecordFormat::Raw => {
            Corpus::from_articles(kept.into_iter().map(|(_, a)| a).collect(), split_seed)
        }
        RecordFormat::Processed => {
            let mut c = Corpus {
                train: Vec::new(),
                val: Vec::new(),
                test: Vec::new(),
                split_seed,
            };
            for (split, a) in kept {
                c.push(split.unwrap_or(Split::Train), a);
            }
            c
        }
    };
    Ok(Ingested { corpus, report })
}

/// Read a line-delimited record file into a split corpus.
///
/// Malformed lines are reported with their line number and skipped; records
/// missing a required field, records without citation sentences and
/// duplicates (same id, or same stemmed title) are dropped. Raw records are
/// split 80/10/10 under `split_seed`; processed records keep their split.
pub fn ingest(path: &Path, format: RecordFormat, split_seed: u64) -> Result<Ingested, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_str(&text, format, split_seed)
}

/// Contiguous subsequence test on already-stemmed sequences.
pub fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty()
        && needle.len() <= haystack.len()
        && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Whether the stemmed keyphrase occurs contiguously in the stemmed scope.
pub fn is_present(keyphrase: &[Token], scope: &[Token]) -> Result<bool, CorpusError> {
    if keyphrase.is_empty() {
        return Err(CorpusError::EmptyKeyphrase);
    }
    Ok(contains_sequence(&stem_all(scope), &stem_all(keyphrase)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: Split,
    pub papers: usize,
    pub keyphrases: usize,
    pub present: usize,
    pub pct_present: f64,
    pub pct_absent: f64,
    pub avg_keyphrases_per_paper: f64,
}

/// Dataset statistics over all splits, with a per-split breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_papers: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub total_keyphrases: usize,
    pub present_keyphrases: usize,
    pub pct_present: f64,
    pub pct_absent: f64,
    pub avg_keyphrases_per_paper: f64,
    pub per_split: Vec<SplitStats>,
}

fn present_count(article: &Article) -> usize {
    let scope = stem_all(&article.title_abstract_tokens());
    article
        .keyphrases
        .iter()
        .filter(|kp| contains_sequence(&scope, &stem_all(kp)))
        .count()
}

fn ratios(papers: usize, keyphrases: usize, present: usize) -> (f64, f64, f64) {
    if keyphrases == 0 {
        return (0.0, 0.0, 0.0);
    }
    let pct_present = 100.0 * present as f64 / keyphrases as f64;
    let avg = if papers == 0 {
        0.0
    } else {
        keyphrases as f64 / papers as f64
    };
    (pct_present, 100.0 - pct_present, avg)
}

/// Incremental form of [`compute_stats`] for streamed corpora.
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    // (papers, keyphrases, present) per split, in train/val/test order
    counts: [(usize, usize, usize); 3],
}

fn split_slot(split: Split) -> usize {
    match split {
        Split::Train => 0,
        Split::Val => 1,
        Split::Test => 2,
    }
}

impl StatsAccumulator {
    pub fn add(&mut self, split: Split, articles: &[Article]) {
        let (k, p) = articles
            .par_iter()
            .map(|a| (a.keyphrases.len(), present_count(a)))
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let c = &mut self.counts[split_slot(split)];
        c.0 += articles.len();
        c.1 += k;
        c.2 += p;
    }

    pub fn finish(&self) -> Result<CorpusStats, CorpusError> {
        let papers: usize = self.counts.iter().map(|c| c.0).sum();
        if papers == 0 {
            return Err(CorpusError::EmptyCorpus("nothing to count".into()));
        }
        let kps: usize = self.counts.iter().map(|c| c.1).sum();
        let present: usize = self.counts.iter().map(|c| c.2).sum();
        let per_split = [Split::Train, Split::Val, Split::Test]
            .into_iter()
            .map(|split| {
                let (n, k, p) = self.counts[split_slot(split)];
                let (pct_present, pct_absent, avg) = ratios(n, k, p);
                SplitStats {
                    split,
                    papers: n,
                    keyphrases: k,
                    present: p,
                    pct_present,
                    pct_absent,
                    avg_keyphrases_per_paper: avg,
                }
            })
            .collect();
        let (pct_present, pct_absent, avg) = ratios(papers, kps, present);
        Ok(CorpusStats {
            total_papers: papers,
            train_size: self.counts[0].0,
            val_size: self.counts[1].0,
            test_size: self.counts[2].0,
            total_keyphrases: kps,
            present_keyphrases: present,
            pct_present,
            pct_absent,
            avg_keyphrases_per_paper: avg,
            per_split,
        })
    }
}

pub fn compute_stats(corpus: &Corpus) -> Result<CorpusStats, CorpusError> {
    let mut acc = StatsAccumulator::default();
    for split in [Split::Train, Split::Val, Split::Test] {
        acc.add(split, corpus.split(split));
    }
    acc.finish()
}

impl CorpusStats {
    /// Human-readable two-column table.
    pub fn to_table(&self) -> String {
        let rows = [
            ("Total papers in the corpus", self.total_papers.to_string()),
            ("Training set size", self.train_size.to_string()),
            ("Validation set size", self.val_size.to_string()),
            ("Test set size", self.test_size.to_string()),
            (
                "% of present keyphrases",
                format!("{:.1}", self.pct_present),
            ),
            ("% of absent keyphrases", format!("{:.1}", self.pct_absent)),
            (
                "Average keyphrases per paper",
                format!("{:.1}", self.avg_keyphrases_per_paper),
            ),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<30} | {v:>10}\n"));
        }
        out.push('\n');
        out.push_str(&format!(
            "{:<6} | {:>8} | {:>9} | {:>9} | {:>8}\n",
            "split", "papers", "% present", "% absent", "avg kps"
        ));
        for s in &self.per_split {
            out.push_str(&format!(
                "{:<6} | {:>8} | {:>9.1} | {:>9.1} | {:>8.2}\n",
                s.split.to_string(),
                s.papers,
                s.pct_present,
                s.pct_absent,
                s.avg_keyphrases_per_paper
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresenceCounts {
    pub present: usize,
    pub absent: usize,
}

/// Per-method count of gold keyphrases found contiguously (after stemming)
/// in the assembled input text. Delimiter tokens are not part of the text.
pub fn count_keyphrases_in_inputs(
    corpus: &Corpus,
    sources: &[AssembledSource],
) -> Result<BTreeMap<Method, PresenceCounts>, CorpusError> {
    let by_id = corpus.by_id();
    let per_source: Vec<(Method, PresenceCounts)> = sources
        .par_iter()
        .map(|src| {
            let article = by_id
                .get(src.article_id.as_str())
                .ok_or_else(|| CorpusError::UnknownArticle(src.article_id.clone()))?;
            let text: Vec<String> = src
                .segments
                .iter()
                .flat_map(|seg| seg.iter().map(|t| textproc::stem_str(t.as_str())))
                .collect();
            let mut counts = PresenceCounts::default();
            for kp in &article.keyphrases {
                if contains_sequence(&text, &stem_all(kp)) {
                    counts.present += 1;
                } else {
                    counts.absent += 1;
                }
            }
            Ok((src.method, counts))
        })
        .collect::<Result<_, CorpusError>>()?;
    let mut out: BTreeMap<Method, PresenceCounts> = BTreeMap::new();
    for (method, c) in per_source {
        let e = out.entry(method).or_default();
        e.present += c.present;
        e.absent += c.absent;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Token> {
        to_tokens(s)
    }

    const SENSOR_TITLE: &str =
        "performance of power detector sensors of dtv signals in ieee 802.22 wrans";
    const SENSOR_ABSTRACT: &str = "sensing is the most important component in any cognitive radio system. \
        the ieee 802.22 working group (wg) is formulating the first worldwide standard for cognitive radios \
        to operate in the television (tv) bands...";

    #[test]
    fn present_in_title() {
        assert!(is_present(&toks("power detector"), &toks(SENSOR_TITLE)).unwrap());
    }

    #[test]
    fn absent_from_title_and_abstract() {
        let scope = toks(&format!("{SENSOR_TITLE} {SENSOR_ABSTRACT}"));
        assert!(!is_present(&toks("false alarm probability"), &scope).unwrap());
        assert!(is_present(&toks("cognitive radio"), &scope).unwrap());
        assert!(is_present(&toks("ieee 802.22"), &scope).unwrap());
    }

    #[test]
    fn stemming_equivalence() {
        assert!(is_present(&toks("radios"), &toks("radio")).unwrap());
        assert!(!is_present(&toks("radio system"), &toks("system radio")).unwrap());
    }

    #[test]
    fn empty_keyphrase_is_error() {
        assert!(matches!(
            is_present(&[], &toks("a b")),
            Err(CorpusError::EmptyKeyphrase)
        ));
    }

    fn raw(id: &str, title: &str, kws: &str) -> String {
        serde_json::json!({
            "id": id,
            "title": title,
            "abstract": "we study things. results are good.",
            "fulltext": "prior work [1] did this. we do that.",
            "keywords": kws,
            "references": ["ref one"],
        })
        .to_string()
    }

    #[test]
    fn rejects_missing_fields() {
        let line =
            r#"{"id":"a","title":"t","abstract":"x.","fulltext":"y [1].","references":["r"]}"#;
        let rec: RawRecord = serde_json::from_str(line).unwrap();
        assert_eq!(
            rec.into_article().unwrap_err(),
            Rejection::MissingField("keywords")
        );
        let line = r#"{"id":"a","title":"t","abstract":"x.","fulltext":"y.","keywords":"k","references":"r"}"#;
        let rec: RawRecord = serde_json::from_str(line).unwrap();
        assert_eq!(rec.into_article().unwrap_err(), Rejection::NoCitations);
    }

    #[test]
    fn malformed_lines_reported_with_line_number() {
        let text = format!(
            "{}\nnot json\n{}\n",
            raw("a", "alpha", "k"),
            raw("b", "beta", "k")
        );
        let ing = ingest_str(&text, RecordFormat::Raw, 1).unwrap();
        assert_eq!(ing.corpus.len(), 2);
        assert_eq!(ing.report.record_errors.len(), 1);
        assert_eq!(ing.report.record_errors[0].line, 2);
    }

    #[test]
    fn duplicates_by_stemmed_title() {
        let text = format!(
            "{}\n{}\n",
            raw("a", "Radio systems", "k"),
            raw("b", "radio system", "k")
        );
        let ing = ingest_str(&text, RecordFormat::Raw, 1).unwrap();
        assert_eq!(ing.corpus.len(), 1);
        assert_eq!(ing.report.dropped_duplicates, 1);
    }

    #[test]
    fn empty_input_is_fatal() {
        assert!(matches!(
            ingest_str("", RecordFormat::Raw, 0),
            Err(CorpusError::EmptyCorpus(_))
        ));
        assert!(matches!(
            ingest_str("\n\n", RecordFormat::Raw, 0),
            Err(CorpusError::EmptyCorpus(_))
        ));
    }

    #[test]
    fn split_sizes() {
        for n in [1usize, 2, 3, 8, 10, 37, 100] {
            let text: String = (0..n)
                .map(|i| raw(&format!("id{i}"), &format!("title {i}x"), "k") + "\n")
                .collect();
            let c = ingest_str(&text, RecordFormat::Raw, 42).unwrap().corpus;
            assert_eq!(c.len(), n);
            let expect = n as f64;
            assert!((c.train.len() as f64 - 0.8 * expect).abs() <= 1.0, "n={n}");
            assert!((c.val.len() as f64 - 0.1 * expect).abs() <= 1.0, "n={n}");
            assert!((c.test.len() as f64 - 0.1 * expect).abs() <= 1.0, "n={n}");
        }
    }

    #[test]
    fn processed_round_trip_keeps_splits() {
        let text: String = (0..20)
            .map(|i| raw(&format!("id{i}"), &format!("title {i}x"), "k") + "\n")
            .collect();
        let c = ingest_str(&text, RecordFormat::Raw, 3).unwrap().corpus;
        let mut buf = Vec::new();
        c.write_jsonl(&mut buf).unwrap();
        let back = ingest_str(
            std::str::from_utf8(&buf).unwrap(),
            RecordFormat::Processed,
            3,
        )
        .unwrap()
        .corpus;
        assert_eq!(back, c);
    }

    fn article_with(id: &str, title: &str, kps: &[&str]) -> Article {
        let mut a = raw_article(id, title);
        a.keyphrases = kps.iter().map(|k| toks(k)).collect();
        a
    }

    fn raw_article(id: &str, title: &str) -> Article {
        let rec: RawRecord = serde_json::from_str(&raw(id, title, "k")).unwrap();
        rec.into_article().unwrap()
    }

    #[test]
    fn stats_all_present() {
        let corpus = Corpus::from_articles(
            vec![article_with("a", "radio power", &["radio", "power"])],
            0,
        );
        let s = compute_stats(&corpus).unwrap();
        assert_eq!(s.pct_present, 100.0);
        assert_eq!(s.avg_keyphrases_per_paper, 2.0);
    }

    #[test]
    fn stats_half_present() {
        let corpus = Corpus::from_articles(
            vec![
                article_with("a", "radio power", &["radio", "zebra"]),
                article_with("b", "sensing", &["sensing", "giraffe"]),
            ],
            0,
        );
        let s = compute_stats(&corpus).unwrap();
        assert_eq!(s.pct_present, 50.0);
        assert_eq!(s.pct_absent, 50.0);
        assert_eq!(s.avg_keyphrases_per_paper, 2.0);
        assert_eq!(s.per_split.iter().map(|p| p.papers).sum::<usize>(), 2);
        assert!(s.to_table().contains("% of present keyphrases"));
    }

    #[test]
    fn stats_empty_corpus() {
        let c = Corpus::from_articles(vec![], 0);
        assert!(compute_stats(&c).is_err());
    }
}
