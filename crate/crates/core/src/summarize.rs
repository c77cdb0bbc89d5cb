//! Unsupervised extractive summarization by directed degree centrality over a
//! TF-IDF sentence graph (PacSum, TF-IDF variant).
//!
//! For a document of `N` sentences:
//!
//! ```text
//! IDF[w]     = ln(N - df(w) + 0.5) - ln(df(w) + 0.5)      df = #sentences containing w
//! sim(i, i)  = 1
//! sim(i, j)  = Σ_{w ∈ s_i ∩ s_j} (TF[i][w] · TF[j][w] · IDF[w])²
//! τ          = min(sim) + β · (max(sim) - min(sim))        over the whole matrix
//! FS(i)      = -Σ_{j<i} (sim(i, j) - τ)                   over edges passing the guard
//! BS(i)      =  Σ_{j>i} (sim(i, j) - τ)                   over edges passing the guard
//! centrality = λ1 · FS + λ2 · BS
//! ```
//!
//! Words are the normalized tokens of each sentence with pure-punctuation
//! tokens dropped. Summation over words runs in lexical order and over `j`
//! in index order, so results are bit-reproducible.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textproc::Sentence;

#[derive(Debug, Error, PartialEq)]
pub enum SummarizeError {
    #[error("nothing to summarize: empty body")]
    EmptyBody,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Which edges count toward FS/BS.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EdgeGuard {
    /// Keep an edge when its thresholded weight is positive (`sim > τ` before
    /// subtracting τ). This is the behaviour of the original method.
    #[default]
    Positive,
    /// Compare the already-thresholded weight against τ again
    /// (`sim - τ > τ`), a literal reading of the pseudocode.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacSumParams {
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub guard: EdgeGuard,
}

impl Default for PacSumParams {
    fn default() -> Self {
        PacSumParams {
            beta: 0.0,
            lambda1: 0.0,
            lambda2: 1.0,
            guard: EdgeGuard::Positive,
        }
    }
}

impl PacSumParams {
    fn validate(&self) -> Result<(), SummarizeError> {
        for (name, v) in [
            ("beta", self.beta),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ] {
            if !v.is_finite() {
                return Err(SummarizeError::InvalidParameter(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// The fully evaluated sentence graph of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceGraph {
    pub n: usize,
    /// Sorted vocabulary; word ids index into it.
    pub vocab: Vec<String>,
    /// Per sentence, `(word id, count)` sorted by word id.
    pub tf: Vec<Vec<(u32, u32)>>,
    /// IDF by word id.
    pub idf: Vec<f64>,
    /// Row-major `n × n` similarity before τ is subtracted.
    pub sim: Vec<f64>,
    pub tau: f64,
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
    pub centrality: Vec<f64>,
}

impl SentenceGraph {
    pub fn sim(&self, i: usize, j: usize) -> f64 {
        self.sim[i * self.n + j]
    }

    pub fn normalized_sim(&self, i: usize, j: usize) -> f64 {
        self.sim(i, j) - self.tau
    }

    pub fn idf_of(&self, word: &str) -> Option<f64> {
        self.word_id(word).map(|id| self.idf[id])
    }

    pub fn tf_of(&self, sentence: usize, word: &str) -> u32 {
        let Some(id) = self.word_id(word) else {
            return 0;
        };
        let row = &self.tf[sentence];
        row.binary_search_by_key(&(id as u32), |&(w, _)| w)
            .map(|p| row[p].1)
            .unwrap_or(0)
    }

    fn word_id(&self, word: &str) -> Option<usize> {
        self.vocab.binary_search_by(|w| w.as_str().cmp(word)).ok()
    }
}

fn words(sentence: &Sentence) -> impl Iterator<Item = &str> {
    sentence
        .tokens
        .iter()
        .filter(|t| !t.is_punctuation())
        .map(|t| t.as_str())
}

/// Evaluate the graph: IDF, TF, similarity, threshold, FS/BS and centrality.
pub fn build_graph(
    body: &[Sentence],
    params: &PacSumParams,
) -> Result<SentenceGraph, SummarizeError> {
    if body.is_empty() {
        return Err(SummarizeError::EmptyBody);
    }
    params.validate()?;
    let n = body.len();

    let vocab: Vec<String> = body
        .iter()
        .flat_map(words)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let id_of = |w: &str| vocab.binary_search_by(|v| v.as_str().cmp(w)).unwrap() as u32;

    let tf: Vec<Vec<(u32, u32)>> = body
        .iter()
        .map(|s| {
            let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
            for w in words(s) {
                *counts.entry(id_of(w)).or_default() += 1;
            }
            counts.into_iter().collect()
        })
        .collect();

    let mut df = vec![0u32; vocab.len()];
    for row in &tf {
        for &(w, _) in row {
            df[w as usize] += 1;
        }
    }
    let nf = n as f64;
    let idf: Vec<f64> = df
        .iter()
        .map(|&c| {
            let c = c as f64;
            (nf - c + 0.5).ln() - (c + 0.5).ln()
        })
        .collect();

    let mut sim = vec![0.0f64; n * n];
    for i in 0..n {
        sim[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let v = pair_similarity(&tf[i], &tf[j], &idf);
            sim[i * n + j] = v;
            sim[j * n + i] = v;
        }
    }

    let (lo, hi) = sim
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let tau = lo + params.beta * (hi - lo);

    let keep = |raw: f64| match params.guard {
        EdgeGuard::Positive => raw > tau,
        EdgeGuard::Literal => raw - tau > tau,
    };
    let mut forward = vec![0.0; n];
    let mut backward = vec![0.0; n];
    for i in 0..n {
        let row = &sim[i * n..(i + 1) * n];
        let mut fs = 0.0;
        for &raw in &row[..i] {
            if keep(raw) {
                fs -= raw - tau;
            }
        }
        let mut bs = 0.0;
        for &raw in &row[i + 1..] {
            if keep(raw) {
                bs += raw - tau;
            }
        }
        forward[i] = fs;
        backward[i] = bs;
    }
    let centrality = forward
        .iter()
        .zip(&backward)
        .map(|(fs, bs)| params.lambda1 * fs + params.lambda2 * bs)
        .collect();

    Ok(SentenceGraph {
        n,
        vocab,
        tf,
        idf,
        sim,
        tau,
        forward,
        backward,
        centrality,
    })
}

/// Σ over shared words of (tf_a · tf_b · idf)², merging two sorted rows.
fn pair_similarity(a: &[(u32, u32)], b: &[(u32, u32)], idf: &[f64]) -> f64 {
    let (mut x, mut y) = (0, 0);
    let mut total = 0.0;
    while x < a.len() && y < b.len() {
        let (wa, ca) = a[x];
        let (wb, cb) = b[y];
        match wa.cmp(&wb) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                let term = ca as f64 * cb as f64 * idf[wa as usize];
                total += term * term;
                x += 1;
                y += 1;
            }
        }
    }
    total
}

/// Positions into `body`, by descending centrality; ties go to the lower
/// `body_index`.
pub fn rank(body: &[Sentence], params: &PacSumParams) -> Result<Vec<usize>, SummarizeError> {
    let graph = build_graph(body, params)?;
    Ok(rank_graph(&graph, body))
}

pub fn rank_graph(graph: &SentenceGraph, body: &[Sentence]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..graph.n).collect();
    order.sort_by(|&a, &b| {
        graph.centrality[b]
            .total_cmp(&graph.centrality[a])
            .then_with(|| body[a].body_index.cmp(&body[b].body_index))
    });
    order
}

/// The `min(k, N)` most central sentences, most central first.
pub fn summarize<'a>(
    body: &'a [Sentence],
    k: usize,
    params: &PacSumParams,
) -> Result<Vec<&'a Sentence>, SummarizeError> {
    let order = rank(body, params)?;
    Ok(order.into_iter().take(k).map(|i| &body[i]).collect())
}
