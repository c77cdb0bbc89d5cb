//! Build model-ready source texts: `title <sep> abstract <sep> s_1 <sep> ... s_k`.
//!
//! The number of appended sentences is not fixed. Candidates are visited in
//! their method order and appended whole, each costing its length plus one
//! delimiter token, for as long as the total stays within `max_len`. The first
//! candidate that would overflow ends assembly.

use std::fmt;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Article;
use crate::retrieve::RetrievalResult;
use crate::textproc::{join_tokens, Sentence, Token, SEP_TOKEN};

pub const DEFAULT_MAX_LEN: usize = 800;

#[derive(Debug, Error, PartialEq)]
pub enum AssembleError {
    #[error("method {0} needs {1}, none supplied")]
    MissingAuxiliary(Method, &'static str),
    #[error("max_len must be at least 2, got {0}")]
    InvalidMaxLen(usize),
    #[error("article {article}: summary refers to body sentence {index}, body has {len}")]
    SummaryOutOfRange {
        article: String,
        index: usize,
        len: usize,
    },
    #[error("retrieval result for {got:?} supplied for article {expected:?}")]
    RetrievalMismatch { expected: String, got: String },
}

/// Which sentences get appended to title and abstract.
#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Title and abstract only.
    Ta,
    /// Random body sentences, in body order.
    Random,
    /// Random citation sentences, in body order.
    Citations,
    /// Random non-citation sentences, in body order.
    Noncitations,
    /// Extractive summary sentences, in rank order.
    Summary,
    /// Retrieved sentences from other articles, in similarity order.
    Retaug,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ta,
        Method::Random,
        Method::Citations,
        Method::Noncitations,
        Method::Summary,
        Method::Retaug,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ta => "ta",
            Method::Random => "random",
            Method::Citations => "citations",
            Method::Noncitations => "noncitations",
            Method::Summary => "summary",
            Method::Retaug => "retaug",
        }
    }

    pub fn samples(self) -> bool {
        matches!(
            self,
            Method::Random | Method::Citations | Method::Noncitations
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Order in which accepted summary sentences are appended.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SummaryOrder {
    #[default]
    Rank,
    Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssembleOptions {
    pub max_len: usize,
    pub rng_seed: u64,
    pub summary_order: SummaryOrder,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            max_len: DEFAULT_MAX_LEN,
            rng_seed: 0,
            summary_order: SummaryOrder::Rank,
        }
    }
}

/// Extra input some methods need.
#[derive(Debug, Clone, Copy)]
pub enum Auxiliary<'a> {
    None,
    /// Body positions ranked by centrality, most central first.
    Summary(&'a [usize]),
    Retrieval(&'a RetrievalResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledSource {
    pub article_id: String,
    pub method: Method,
    /// Title, abstract, then one segment per appended sentence.
    pub segments: Vec<Vec<Token>>,
    /// Tokens across all segments plus one per delimiter.
    pub token_count: usize,
    /// Base seed, for the sampling methods.
    pub rng_seed: Option<u64>,
    /// Body indices of appended sentences (empty for retrieval).
    pub body_indices: Vec<usize>,
}

impl AssembledSource {
    pub fn render(&self) -> String {
        self.segments
            .iter()
            .map(|s| join_tokens(s))
            .collect::<Vec<_>>()
            .join(&format!(" {SEP_TOKEN} "))
    }

    pub fn appended(&self) -> &[Vec<Token>] {
        &self.segments[2.min(self.segments.len())..]
    }
}

/// One line of assembled output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledRecord {
    pub id: String,
    pub method: Method,
    pub source: String,
    /// Gold keyphrases joined by `;`.
    pub keyphrases: String,
}

impl AssembledRecord {
    pub fn new(source: &AssembledSource, article: &Article) -> Self {
        AssembledRecord {
            id: source.article_id.clone(),
            method: source.method,
            source: source.render(),
            keyphrases: article
                .keyphrases
                .iter()
                .map(|k| join_tokens(k))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }
}

/// Per-article RNG derived from the base seed and the article id, so the
/// sample does not depend on processing order.
pub fn article_rng(seed: u64, article_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(article_id.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Title and abstract within budget. The abstract is cut token-wise first;
/// a title that alone overflows is cut as well.
fn base_segments(article: &Article, max_len: usize) -> (Vec<Token>, Vec<Token>) {
    let mut title = article.title.clone();
    let mut abs = article.abstract_tokens();
    if title.len() + 1 + abs.len() > max_len {
        if title.len() + 1 > max_len {
            title.truncate(max_len - 1);
            abs.clear();
        } else {
            abs.truncate(max_len - 1 - title.len());
        }
    }
    (title, abs)
}

fn take_within_budget<'a, I>(
    candidates: I,
    used: &mut usize,
    max_len: usize,
) -> Vec<(Option<usize>, &'a [Token])>
where
    I: IntoIterator<Item = (Option<usize>, &'a [Token])>,
{
    let mut out = Vec::new();
    for (idx, tokens) in candidates {
        let cost = tokens.len() + 1;
        if *used + cost > max_len {
            break;
        }
        *used += cost;
        out.push((idx, tokens));
    }
    out
}

/// Assemble one source text for `article` under `method`.
pub fn assemble(
    article: &Article,
    method: Method,
    opts: &AssembleOptions,
    aux: Auxiliary<'_>,
) -> Result<AssembledSource, AssembleError> {
    if opts.max_len < 2 {
        return Err(AssembleError::InvalidMaxLen(opts.max_len));
    }
    let (title, abs) = base_segments(article, opts.max_len);
    let mut used = title.len() + 1 + abs.len();

    let body_candidates = |keep: fn(&Sentence) -> bool| -> Vec<&Sentence> {
        let mut pool: Vec<&Sentence> = article.body.iter().filter(|s| keep(s)).collect();
        pool.shuffle(&mut article_rng(opts.rng_seed, &article.id));
        pool
    };

    let accepted: Vec<(Option<usize>, &[Token])> = match method {
        Method::Ta => Vec::new(),
        Method::Random | Method::Citations | Method::Noncitations => {
            let pool = match method {
                Method::Random => body_candidates(|_| true),
                Method::Citations => body_candidates(|s| s.is_citation),
                _ => body_candidates(|s| !s.is_citation),
            };
            if pool.is_empty() {
                warn!(
                    "{}: empty {method} pool, falling back to title+abstract",
                    article.id
                );
            }
            let mut got = take_within_budget(
                pool.into_iter()
                    .map(|s| (Some(s.body_index), s.tokens.as_slice())),
                &mut used,
                opts.max_len,
            );
            got.sort_by_key(|(i, _)| *i);
            got
        }
        Method::Summary => {
            let Auxiliary::Summary(ranked) = aux else {
                return Err(AssembleError::MissingAuxiliary(method, "a ranked summary"));
            };
            if let Some(&bad) = ranked.iter().find(|&&i| i >= article.body.len()) {
                return Err(AssembleError::SummaryOutOfRange {
                    article: article.id.clone(),
                    index: bad,
                    len: article.body.len(),
                });
            }
            if ranked.is_empty() {
                warn!(
                    "{}: empty summary, falling back to title+abstract",
                    article.id
                );
            }
            let mut got = take_within_budget(
                ranked.iter().map(|&i| {
                    (
                        Some(article.body[i].body_index),
                        article.body[i].tokens.as_slice(),
                    )
                }),
                &mut used,
                opts.max_len,
            );
            if opts.summary_order == SummaryOrder::Document {
                got.sort_by_key(|(i, _)| *i);
            }
            got
        }
        Method::Retaug => {
            let Auxiliary::Retrieval(result) = aux else {
                return Err(AssembleError::MissingAuxiliary(
                    method,
                    "a retrieval result",
                ));
            };
            if result.query_id != article.id {
                return Err(AssembleError::RetrievalMismatch {
                    expected: article.id.clone(),
                    got: result.query_id.clone(),
                });
            }
            if result.hits.is_empty() {
                warn!(
                    "{}: no retrieved sentences, falling back to title+abstract",
                    article.id
                );
            }
            take_within_budget(
                result.hits.iter().map(|h| (None, h.tokens.as_slice())),
                &mut used,
                opts.max_len,
            )
        }
    };

    let body_indices = accepted.iter().filter_map(|(i, _)| *i).collect();
    let mut segments = vec![title, abs];
    segments.extend(accepted.into_iter().map(|(_, t)| t.to_vec()));
    Ok(AssembledSource {
        article_id: article.id.clone(),
        method,
        token_count: used,
        segments,
        rng_seed: method.samples().then_some(opts.rng_seed),
        body_indices,
    })
}
