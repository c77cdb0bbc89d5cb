//! Retrieval augmentation: a key/value pool of title and abstract sentences
//! from the training split, and exact top-k dot-product search against it.
//!
//! Every pool entry remembers its owning article, and a query never returns
//! entries owned by the query article itself.
//!
//! Text units carry stable ids so precomputed vectors can be matched to them:
//!
//! | unit | id |
//! |------|----|
//! | title of article `A` | `A#title` |
//! | abstract sentence `i` of `A` | `A#abs<i>` |
//! | query (title ⊕ abstract) of `A` | `A#query` |

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::fs;
use std::hash::Hasher;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Article;
use crate::textproc::Token;

#[derive(Debug, Error)]
pub enum RetrieveError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("empty training split: nothing to index")]
    EmptyTrainSplit,
    #[error("dimension mismatch: index has {index}, embedder produces {embedder}")]
    DimMismatch { index: usize, embedder: usize },
    #[error("query embedding failed: {0}")]
    Query(#[from] EmbedError),
    #[error("embedding file {path}: row {row}: {reason}")]
    EmbeddingFile {
        path: String,
        row: usize,
        reason: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("no vector for unit {0:?}")]
    Missing(String),
    #[error("unit {id:?}: vector has {got} dims, expected {expected}")]
    WrongDim {
        id: String,
        got: usize,
        expected: usize,
    },
    #[error("unit {0:?}: non-finite vector component")]
    NonFinite(String),
}

/// A piece of text to embed: a stable id plus its tokens.
#[derive(Debug, Clone, Copy)]
pub struct TextUnit<'a> {
    pub id: &'a str,
    pub tokens: &'a [Token],
}

/// Maps a text unit to a fixed-length vector.
pub trait Embedder: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, unit: TextUnit<'_>) -> Result<Vec<f32>, EmbedError>;
}

pub fn title_unit_id(article_id: &str) -> String {
    format!("{article_id}#title")
}

pub fn abstract_unit_id(article_id: &str, i: usize) -> String {
    format!("{article_id}#abs{i}")
}

pub fn query_unit_id(article_id: &str) -> String {
    format!("{article_id}#query")
}

/// Sentence-level document frequencies of the training pool.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VocabStats {
    pub sentences: usize,
    pub df: HashMap<String, u32>,
}

impl VocabStats {
    /// Count over the same sentences the index is built from: each title and
    /// each abstract sentence of each training article.
    pub fn from_train(train: &[Article]) -> VocabStats {
        let mut stats = VocabStats::default();
        for article in train {
            let units = std::iter::once(article.title.as_slice()).chain(
                article
                    .abstract_sentences
                    .iter()
                    .map(|s| s.tokens.as_slice()),
            );
            for tokens in units {
                stats.add_sentence(tokens);
            }
        }
        stats
    }

    pub fn add_sentence(&mut self, tokens: &[Token]) {
        self.sentences += 1;
        let unique: HashSet<&str> = tokens
            .iter()
            .filter(|t| !t.is_punctuation())
            .map(Token::as_str)
            .collect();
        for w in unique {
            *self.df.entry(w.to_string()).or_default() += 1;
        }
    }

    pub fn idf(&self, word: &str) -> Option<f64> {
        self.df
            .get(word)
            .map(|&df| ((1.0 + self.sentences as f64) / (1.0 + df as f64)).ln() + 1.0)
    }
}

fn feature_hash(token: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(token.as_bytes());
    h.finish()
}

/// Bucket and sign a token hashes to for a given dimensionality.
pub fn feature_slot(token: &str, dim: usize) -> (usize, f64) {
    let h = feature_hash(token);
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    ((h % dim as u64) as usize, sign)
}

pub const MIN_HASH_DIM: usize = 8;

/// Signed feature-hashed TF-IDF bag of words, L2-normalized.
///
/// Only tokens seen in the training pool contribute; a sentence without any
/// such token maps to the zero vector.
pub fn tfidf_embed(
    sentence: &[Token],
    stats: &VocabStats,
    dim: usize,
) -> Result<Vec<f32>, RetrieveError> {
    if dim < MIN_HASH_DIM {
        return Err(RetrieveError::Config(format!(
            "hashing dimension must be at least {MIN_HASH_DIM}, got {dim}"
        )));
    }
    let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
    for t in sentence.iter().filter(|t| !t.is_punctuation()) {
        *tf.entry(t.as_str()).or_default() += 1;
    }
    let mut acc = vec![0.0f64; dim];
    for (word, count) in tf {
        let Some(idf) = stats.idf(word) else { continue };
        let (slot, sign) = feature_slot(word, dim);
        acc[slot] += sign * count as f64 * idf;
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(vec![0.0; dim]);
    }
    Ok(acc.into_iter().map(|v| (v / norm) as f32).collect())
}

/// Default embedder: [`tfidf_embed`] over training-pool statistics.
#[derive(Debug, Clone)]
pub struct TfidfEmbedder {
    stats: VocabStats,
    dim: usize,
}

impl TfidfEmbedder {
    pub fn new(stats: VocabStats, dim: usize) -> Result<Self, RetrieveError> {
        if dim < MIN_HASH_DIM {
            return Err(RetrieveError::Config(format!(
                "hashing dimension must be at least {MIN_HASH_DIM}, got {dim}"
            )));
        }
        Ok(TfidfEmbedder { stats, dim })
    }
}

impl Embedder for TfidfEmbedder {
    fn name(&self) -> &str {
        "tfidf"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, unit: TextUnit<'_>) -> Result<Vec<f32>, EmbedError> {
        // dim was validated at construction
        Ok(tfidf_embed(unit.tokens, &self.stats, self.dim).expect("valid dim"))
    }
}

/// Precomputed vectors keyed by text-unit id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingMap {
    pub dim: usize,
    pub vectors: BTreeMap<String, Vec<f32>>,
}

impl EmbeddingMap {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Write in the import format: `dim=<d>` then `id<TAB>v1 v2 ...` per row.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "dim={}", self.dim)?;
        for (id, v) in &self.vectors {
            let row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{id}\t{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Parse the vector import format. `origin` names the source in errors.
pub fn parse_embeddings(text: &str, origin: &str) -> Result<EmbeddingMap, RetrieveError> {
    let err = |row: usize, reason: String| RetrieveError::EmbeddingFile {
        path: origin.to_string(),
        row,
        reason,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((hrow, header)) = lines.next() else {
        warn!("{origin}: empty embedding file");
        return Ok(EmbeddingMap::default());
    };
    let dim: usize = header
        .trim()
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| {
            err(
                hrow + 1,
                format!("expected header `dim=<d>`, found {header:?}"),
            )
        })?;
    let mut vectors = BTreeMap::new();
    for (i, line) in lines {
        let row = i + 1;
        let (id, values) = line
            .split_once('\t')
            .ok_or_else(|| err(row, "expected `<id><TAB><values>`".into()))?;
        let v: Vec<f32> = values
            .split_whitespace()
            .map(|s| {
                s.parse::<f32>()
                    .map_err(|e| err(row, format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<_, _>>()?;
        if v.len() != dim {
            return Err(err(row, format!("{} values, header says {dim}", v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(err(row, "non-finite value".into()));
        }
        if vectors.insert(id.to_string(), v).is_some() {
            return Err(err(row, format!("duplicate id {id:?}")));
        }
    }
    Ok(EmbeddingMap { dim, vectors })
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMap, RetrieveError> {
    let text = fs::read_to_string(path).map_err(|source| RetrieveError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_embeddings(&text, &path.display().to_string())
}

/// Embedder backed by an [`EmbeddingMap`]; looks units up by id.
#[derive(Debug, Clone)]
pub struct FileEmbedder {
    map: EmbeddingMap,
}

impl FileEmbedder {
    pub fn new(map: EmbeddingMap) -> Self {
        FileEmbedder { map }
    }
}

impl Embedder for FileEmbedder {
    fn name(&self) -> &str {
        "file"
    }

    fn dim(&self) -> usize {
        self.map.dim
    }

    fn embed(&self, unit: TextUnit<'_>) -> Result<Vec<f32>, EmbedError> {
        self.map
            .vectors
            .get(unit.id)
            .cloned()
            .ok_or_else(|| EmbedError::Missing(unit.id.to_string()))
    }
}

/// The value side of one index row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub sentence_id: String,
    pub owner: String,
    pub tokens: Vec<Token>,
}

/// Row-major f32 key matrix plus the sentences the rows stand for.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingIndex {
    dim: usize,
    keys: Vec<f32>,
    entries: Vec<IndexEntry>,
}

impl EmbeddingIndex {
    pub fn new(dim: usize) -> Self {
        EmbeddingIndex {
            dim,
            keys: Vec::new(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, key: &[f32], entry: IndexEntry) -> Result<(), EmbedError> {
        if key.len() != self.dim {
            return Err(EmbedError::WrongDim {
                id: entry.sentence_id,
                got: key.len(),
                expected: self.dim,
            });
        }
        if key.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite(entry.sentence_id));
        }
        self.keys.extend_from_slice(key);
        self.entries.push(entry);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn key(&self, i: usize) -> &[f32] {
        &self.keys[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entry(&self, i: usize) -> &IndexEntry {
        &self.entries[i]
    }

    /// Bytes held by the key matrix.
    pub fn key_bytes(&self) -> usize {
        self.keys.len() * std::mem::size_of::<f32>()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IndexReport {
    pub entries: usize,
    pub skipped: usize,
}

/// Embed every title and abstract sentence of the training split.
///
/// Units the embedder fails on are skipped with a warning and counted.
pub fn build_index(
    train: &[Article],
    embedder: &dyn Embedder,
) -> Result<(EmbeddingIndex, IndexReport), RetrieveError> {
    if train.is_empty() {
        return Err(RetrieveError::EmptyTrainSplit);
    }
    let dim = embedder.dim();
    if dim == 0 {
        return Err(RetrieveError::Config("embedder has dimension 0".into()));
    }
    let mut units: Vec<(String, &Article, &[Token])> = Vec::new();
    for a in train {
        units.push((title_unit_id(&a.id), a, &a.title));
        for (i, s) in a.abstract_sentences.iter().enumerate() {
            units.push((abstract_unit_id(&a.id, i), a, &s.tokens));
        }
    }
    let embedded: Vec<Result<Vec<f32>, EmbedError>> = units
        .par_iter()
        .map(|(id, _, tokens)| embedder.embed(TextUnit { id, tokens }))
        .collect();

    let mut index = EmbeddingIndex::new(dim);
    let mut report = IndexReport::default();
    for ((id, article, tokens), key) in units.into_iter().zip(embedded) {
        let entry = IndexEntry {
            sentence_id: id,
            owner: article.id.clone(),
            tokens: tokens.to_vec(),
        };
        if let Err(e) = key.and_then(|k| index.push(&k, entry)) {
            warn!("skipping pool sentence: {e}");
            report.skipped += 1;
        }
    }
    report.entries = index.len();
    Ok((index, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    /// Row of the index this hit came from.
    pub position: usize,
    pub sentence_id: String,
    pub owner: String,
    pub tokens: Vec<Token>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query_id: String,
    pub hits: Vec<Hit>,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    position: usize,
}

// Greater = better: higher score, then earlier position.
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.position.cmp(&self.position))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

const SCAN_CHUNK: usize = 4096;

// Left fold from +0.0, so an all-zero product never yields -0.0 (which
// total_cmp would rank below +0.0).
fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (&x, &y)| acc + x as f64 * y as f64)
}

fn top_k_in_chunk(
    index: &EmbeddingIndex,
    query: &[f32],
    exclude_owner: &str,
    range: std::ops::Range<usize>,
    k: usize,
) -> Vec<Candidate> {
    let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::with_capacity(k + 1);
    for position in range {
        if index.entries[position].owner == exclude_owner {
            continue;
        }
        let cand = Candidate {
            score: dot(index.key(position), query),
            position,
        };
        if heap.len() < k {
            heap.push(Reverse(cand));
        } else if heap.peek().is_some_and(|Reverse(worst)| cand > *worst) {
            heap.pop();
            heap.push(Reverse(cand));
        }
    }
    heap.into_iter().map(|Reverse(c)| c).collect()
}

/// Exact top-k by dot product over all rows not owned by `exclude_owner`.
/// Ties go to the earlier row.
pub fn search(
    index: &EmbeddingIndex,
    query: &[f32],
    exclude_owner: &str,
    k: usize,
) -> Result<Vec<Hit>, RetrieveError> {
    if k == 0 {
        return Err(RetrieveError::Config("k must be at least 1".into()));
    }
    if query.len() != index.dim {
        return Err(RetrieveError::DimMismatch {
            index: index.dim,
            embedder: query.len(),
        });
    }
    let n = index.len();
    let chunks: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(SCAN_CHUNK)
        .map(|s| s..(s + SCAN_CHUNK).min(n))
        .collect();
    let mut merged: Vec<Candidate> = chunks
        .into_par_iter()
        .flat_map_iter(|r| top_k_in_chunk(index, query, exclude_owner, r, k))
        .collect();
    merged.sort_by(|a, b| b.cmp(a));
    merged.truncate(k);
    Ok(merged
        .into_iter()
        .map(|c| {
            let e = &index.entries[c.position];
            Hit {
                position: c.position,
                sentence_id: e.sentence_id.clone(),
                owner: e.owner.clone(),
                tokens: e.tokens.clone(),
                score: c.score,
            }
        })
        .collect())
}

/// Embed the article's title ⊕ abstract as one query and return the `k`
/// most similar pool sentences owned by other articles.
pub fn retrieve(
    index: &EmbeddingIndex,
    article: &Article,
    k: usize,
    embedder: &dyn Embedder,
) -> Result<RetrievalResult, RetrieveError> {
    if embedder.dim() != index.dim {
        return Err(RetrieveError::DimMismatch {
            index: index.dim,
            embedder: embedder.dim(),
        });
    }
    let query_id = query_unit_id(&article.id);
    let tokens = article.title_abstract_tokens();
    let q = embedder.embed(TextUnit {
        id: &query_id,
        tokens: &tokens,
    })?;
    if q.len() != index.dim {
        return Err(EmbedError::WrongDim {
            id: query_id,
            got: q.len(),
            expected: index.dim,
        }
        .into());
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(EmbedError::NonFinite(query_id).into());
    }
    let hits = search(index, &q, &article.id, k)?;
    if hits.is_empty() {
        warn!(
            "{}: no pool sentences left after excluding its own",
            article.id
        );
    }
    Ok(RetrievalResult {
        query_id: article.id.clone(),
        hits,
    })
}
