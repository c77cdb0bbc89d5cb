//! Exact-match keyphrase evaluation: macro-averaged precision, recall and F1
//! at @5 and @M, reported separately for present and absent keyphrases.
//!
//! Gold and predicted keyphrases are compared as Porter-stemmed token
//! sequences. Predictions are deduplicated after stemming (first occurrence
//! wins), routed to present/absent by the title ⊕ abstract scope, and only
//! then cut or padded for @5.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{contains_sequence, Article, StringOrList};
use crate::textproc::{clean_text, stem_all, to_tokens, Token};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction for unknown article id {0:?}")]
    UnknownArticle(String),
    #[error("duplicate prediction for article id {0:?}")]
    DuplicatePrediction(String),
    #[error("article {0:?} has no gold keyphrases")]
    NoGold(String),
    #[error("predictions line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
}

/// One model output; order is significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub article_id: String,
    pub keyphrases: Vec<Vec<Token>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum Cutoff {
    #[serde(rename = "@5")]
    #[value(name = "5")]
    At5,
    #[serde(rename = "@M")]
    #[value(name = "m")]
    AtM,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Present,
    Absent,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Present => "present",
            Category::Absent => "absent",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Prf {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScores {
    pub gold: usize,
    pub predicted: usize,
    pub at5: Option<Prf>,
    pub at_m: Option<Prf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScores {
    pub article_id: String,
    /// `None` when the document has no gold keyphrase in that category.
    pub present: Option<CategoryScores>,
    pub absent: Option<CategoryScores>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub at5: Option<Prf>,
    pub at_m: Option<Prf>,
    pub documents: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub present: CategoryReport,
    pub absent: CategoryReport,
    /// Articles that had no prediction record; scored as empty predictions.
    pub missing_predictions: usize,
    pub documents: Vec<DocumentScores>,
}

type Stemmed = Vec<String>;

fn dedup(seqs: impl IntoIterator<Item = Stemmed>) -> Vec<Stemmed> {
    let mut seen = HashSet::new();
    seqs.into_iter()
        .filter(|s| !s.is_empty() && seen.insert(s.clone()))
        .collect()
}

fn score(gold: &[Stemmed], preds: &[Stemmed], cutoffs: &[Cutoff]) -> CategoryScores {
    let gold_set: HashSet<&Stemmed> = gold.iter().collect();
    let matches = |ps: &[Stemmed]| ps.iter().filter(|p| gold_set.contains(p)).count() as f64;
    let g = gold.len() as f64;
    let at_m = cutoffs.contains(&Cutoff::AtM).then(|| {
        let m = matches(preds);
        let p = if preds.is_empty() {
            0.0
        } else {
            m / preds.len() as f64
        };
        Prf::new(p, m / g)
    });
    let at5 = cutoffs.contains(&Cutoff::At5).then(|| {
        // missing slots are dummies that never match
        let m = matches(&preds[..preds.len().min(5)]);
        Prf::new(m / 5.0, m / g)
    });
    CategoryScores {
        gold: gold.len(),
        predicted: preds.len(),
        at5,
        at_m,
    }
}

/// Route predictions by presence in the article's title ⊕ abstract.
/// Order is preserved within each list; empty keyphrases are dropped.
pub fn split_predictions(
    prediction: &Prediction,
    article: &Article,
) -> (Vec<Vec<Token>>, Vec<Vec<Token>>) {
    let scope = stem_all(&article.title_abstract_tokens());
    let mut present = Vec::new();
    let mut absent = Vec::new();
    for kp in prediction.keyphrases.iter().filter(|k| !k.is_empty()) {
        if contains_sequence(&scope, &stem_all(kp)) {
            present.push(kp.clone());
        } else {
            absent.push(kp.clone());
        }
    }
    (present, absent)
}

fn score_document(
    article: &Article,
    predictions: &[Vec<Token>],
    cutoffs: &[Cutoff],
) -> DocumentScores {
    let scope = stem_all(&article.title_abstract_tokens());
    let gold = dedup(article.keyphrases.iter().map(|k| stem_all(k)));
    let preds = dedup(predictions.iter().map(|k| stem_all(k)));
    let (gold_present, gold_absent): (Vec<_>, Vec<_>) =
        gold.into_iter().partition(|k| contains_sequence(&scope, k));
    let (pred_present, pred_absent): (Vec<_>, Vec<_>) = preds
        .into_iter()
        .partition(|k| contains_sequence(&scope, k));
    let cat = |g: &[Stemmed], p: &[Stemmed]| (!g.is_empty()).then(|| score(g, p, cutoffs));
    DocumentScores {
        article_id: article.id.clone(),
        present: cat(&gold_present, &pred_present),
        absent: cat(&gold_absent, &pred_absent),
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn macro_average(
    docs: &[&CategoryScores],
    pick: impl Fn(&CategoryScores) -> Option<Prf>,
) -> Option<Prf> {
    let rows: Vec<Prf> = docs.iter().filter_map(|d| pick(d)).collect();
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    Some(Prf {
        precision: compensated_sum(rows.iter().map(|r| r.precision)) / n,
        recall: compensated_sum(rows.iter().map(|r| r.recall)) / n,
        f1: compensated_sum(rows.iter().map(|r| r.f1)) / n,
    })
}

fn category_report(docs: &[DocumentScores], which: Category) -> CategoryReport {
    let scored: Vec<&CategoryScores> = docs
        .iter()
        .filter_map(|d| match which {
            Category::Present => d.present.as_ref(),
            Category::Absent => d.absent.as_ref(),
        })
        .collect();
    CategoryReport {
        at5: macro_average(&scored, |c| c.at5),
        at_m: macro_average(&scored, |c| c.at_m),
        documents: scored.len(),
        skipped: docs.len() - scored.len(),
    }
}

/// Score `predictions` against the gold keyphrases of `articles`.
///
/// Every prediction must name one of `articles`; articles without a
/// prediction are scored as if the model produced nothing.
pub fn evaluate<'a>(
    articles: impl IntoIterator<Item = &'a Article>,
    predictions: &[Prediction],
    cutoffs: &[Cutoff],
) -> Result<EvalReport, EvalError> {
    let articles: Vec<&Article> = articles.into_iter().collect();
    let ids: HashSet<&str> = articles.iter().map(|a| a.id.as_str()).collect();
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in predictions {
        if !ids.contains(p.article_id.as_str()) {
            return Err(EvalError::UnknownArticle(p.article_id.clone()));
        }
        if by_id.insert(p.article_id.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.article_id.clone()));
        }
    }
    if let Some(a) = articles.iter().find(|a| a.keyphrases.is_empty()) {
        return Err(EvalError::NoGold(a.id.clone()));
    }
    let missing = articles
        .iter()
        .filter(|a| !by_id.contains_key(a.id.as_str()))
        .count();

    let mut documents: Vec<DocumentScores> = articles
        .par_iter()
        .map(|a| {
            let preds = by_id
                .get(a.id.as_str())
                .map(|p| p.keyphrases.as_slice())
                .unwrap_or(&[]);
            score_document(a, preds, cutoffs)
        })
        .collect();
    documents.sort_by(|a, b| a.article_id.cmp(&b.article_id));

    Ok(EvalReport {
        present: category_report(&documents, Category::Present),
        absent: category_report(&documents, Category::Absent),
        missing_predictions: missing,
        documents,
    })
}

impl EvalReport {
    /// Table with columns P@5, R@5, F1@5, P@M, R@M, F1@M.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
        let mut out = format!(
            "{:<8} | {:>6} | {:>6} | {:>6} | {:>6} | {:>6} | {:>6} | {:>5} | {:>7}\n",
            "", "P@5", "R@5", "F1@5", "P@M", "R@M", "F1@M", "docs", "skipped"
        );
        for (name, c) in [("present", &self.present), ("absent", &self.absent)] {
            out.push_str(&format!(
                "{:<8} | {:>6} | {:>6} | {:>6} | {:>6} | {:>6} | {:>6} | {:>5} | {:>7}\n",
                name,
                cell(c.at5.map(|p| p.precision)),
                cell(c.at5.map(|p| p.recall)),
                cell(c.at5.map(|p| p.f1)),
                cell(c.at_m.map(|p| p.precision)),
                cell(c.at_m.map(|p| p.recall)),
                cell(c.at_m.map(|p| p.f1)),
                c.documents,
                c.skipped
            ));
        }
        out
    }
}

#[derive(Debug, Deserialize)]
struct PredictionRecord {
    id: String,
    keyphrases: StringOrList,
}

/// Turn a keyphrase string into tokens the same way gold keyphrases are.
pub fn keyphrase_tokens(raw: &str) -> Vec<Token> {
    to_tokens(&clean_text(raw))
}

/// Parse line-delimited prediction records: `{"id": ..., "keyphrases": "a;b;c"}`.
pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(line).map_err(|e| EvalError::Malformed {
                line: i + 1,
                message: e.to_string(),
            })?;
        out.push(Prediction {
            article_id: rec.id,
            keyphrases: rec
                .keyphrases
                .items()
                .into_iter()
                .map(keyphrase_tokens)
                .filter(|k| !k.is_empty())
                .collect(),
        });
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>, EvalError> {
    let text =
        fs::read_to_string(path).map_err(|e| EvalError::Io(path.display().to_string(), e))?;
    parse_predictions(&text)
}
