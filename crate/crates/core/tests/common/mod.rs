//! Independent oracles and fixture generators shared by integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use kpaug::corpus::Article;
use kpaug::retrieve::{EmbeddingIndex, IndexEntry};
use kpaug::summarize::{EdgeGuard, PacSumParams};
use kpaug::textproc::{Sentence, Token};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn sentence(i: usize, words: &[&str]) -> Sentence {
    Sentence {
        tokens: words.iter().map(|w| Token::new(*w).unwrap()).collect(),
        text: words.join(" "),
        is_citation: false,
        body_index: i,
    }
}

pub fn body(sentences: &[Vec<String>]) -> Vec<Sentence> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| sentence(i, &s.iter().map(String::as_str).collect::<Vec<_>>()))
        .collect()
}

/// Random body: 1..=max_n sentences of 1..=8 tokens over `vocab` words,
/// with occasional punctuation tokens.
pub fn random_body(rng: &mut ChaCha8Rng, max_n: usize, vocab: usize) -> Vec<Vec<String>> {
    let n = rng.random_range(1..=max_n);
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..=8);
            (0..len)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        [",", ".", "(", "-"][rng.random_range(0..4)].to_string()
                    } else {
                        format!("w{}", rng.random_range(0..vocab))
                    }
                })
                .collect()
        })
        .collect()
}

pub fn random_params(rng: &mut ChaCha8Rng) -> PacSumParams {
    if rng.random_bool(0.3) {
        return PacSumParams::default();
    }
    PacSumParams {
        beta: if rng.random_bool(0.5) {
            0.0
        } else {
            rng.random_range(0.0..1.0)
        },
        lambda1: rng.random_range(-1.0..2.0),
        lambda2: rng.random_range(-1.0..2.0),
        guard: if rng.random_bool(0.5) {
            EdgeGuard::Positive
        } else {
            EdgeGuard::Literal
        },
    }
}

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Exact evaluation of the sentence-graph scoring, logarithms aside.
#[derive(Debug)]
pub struct PacSumOracle {
    pub n: usize,
    pub idf: Vec<(String, f64)>,
    pub sim: Vec<Vec<BigRational>>,
    pub tau: BigRational,
    pub fs: Vec<BigRational>,
    pub bs: Vec<BigRational>,
    pub centrality: Vec<BigRational>,
    /// |λ1·FS| + |λ2·BS| per sentence: the scale for comparing centrality.
    pub scale: Vec<f64>,
    pub ranking: Vec<usize>,
}

#[allow(clippy::needless_range_loop)]
pub fn pacsum_oracle(sentences: &[Vec<String>], p: &PacSumParams) -> PacSumOracle {
    let n = sentences.len();
    let words: Vec<Vec<&str>> = sentences
        .iter()
        .map(|s| {
            s.iter()
                .map(String::as_str)
                .filter(|w| w.chars().any(char::is_alphanumeric))
                .collect()
        })
        .collect();
    let vocab: BTreeSet<&str> = words.iter().flatten().copied().collect();
    let tf = |i: usize, w: &str| words[i].iter().filter(|x| **x == w).count() as i64;
    let idf: Vec<(String, f64)> = vocab
        .iter()
        .map(|w| {
            let df = words.iter().filter(|s| s.contains(w)).count() as f64;
            (w.to_string(), (n as f64 - df + 0.5).ln() - (df + 0.5).ln())
        })
        .collect();

    let mut sim = vec![vec![BigRational::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            sim[i][j] = if i == j {
                BigRational::from_integer(BigInt::from(1))
            } else {
                let mut s = BigRational::zero();
                for (w, v) in &idf {
                    let (a, b) = (tf(i, w), tf(j, w));
                    if a > 0 && b > 0 {
                        let t = BigRational::from_integer(BigInt::from(a * b)) * q(*v);
                        s += &t * &t;
                    }
                }
                s
            };
        }
    }
    let all = sim.iter().flatten();
    let lo = all.clone().min().unwrap().clone();
    let hi = all.max().unwrap().clone();
    let tau = &lo + q(p.beta) * (&hi - &lo);

    let kept = |raw: &BigRational| match p.guard {
        EdgeGuard::Positive => raw > &tau,
        EdgeGuard::Literal => raw - &tau > tau,
    };
    let mut fs = Vec::with_capacity(n);
    let mut bs = Vec::with_capacity(n);
    for i in 0..n {
        let mut f = BigRational::zero();
        let mut b = BigRational::zero();
        for j in 0..n {
            if j < i && kept(&sim[i][j]) {
                f -= &sim[i][j] - &tau;
            }
            if j > i && kept(&sim[i][j]) {
                b += &sim[i][j] - &tau;
            }
        }
        fs.push(f);
        bs.push(b);
    }
    let (l1, l2) = (q(p.lambda1), q(p.lambda2));
    let centrality: Vec<BigRational> = (0..n).map(|i| &l1 * &fs[i] + &l2 * &bs[i]).collect();
    let scale = (0..n)
        .map(|i| (&l1 * &fs[i]).abs().to_f64().unwrap() + (&l2 * &bs[i]).abs().to_f64().unwrap())
        .collect();
    let mut ranking: Vec<usize> = (0..n).collect();
    ranking.sort_by(|&a, &b| centrality[b].cmp(&centrality[a]).then(a.cmp(&b)));
    PacSumOracle {
        n,
        idf,
        sim,
        tau,
        fs,
        bs,
        centrality,
        scale,
        ranking,
    }
}

pub const REL_TOL: f64 = 1e-9;

/// |got − want| ≤ tol · max(|want|, scale).
pub fn close(got: f64, want: &BigRational, scale: f64) -> bool {
    let w = want.to_f64().unwrap();
    (got - w).abs() <= REL_TOL * w.abs().max(scale).max(f64::MIN_POSITIVE)
}

/// A ranking agrees with the oracle if every adjacent pair is ordered by
/// exact centrality (lower index first on exact ties), or the two values are
/// indistinguishable at the comparison tolerance. Returns the number of such
/// near-tie swaps.
pub fn ranking_agrees(got: &[usize], o: &PacSumOracle) -> Result<usize, String> {
    let mut sorted = got.to_vec();
    sorted.sort_unstable();
    if sorted != (0..o.n).collect::<Vec<_>>() {
        return Err(format!("not a permutation: {got:?}"));
    }
    let mut near = 0;
    for w in got.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ca, cb) = (&o.centrality[a], &o.centrality[b]);
        if ca > cb || (ca == cb && a < b) {
            continue;
        }
        let diff = (ca - cb).abs().to_f64().unwrap();
        let bound = REL_TOL * (o.scale[a] + o.scale[b]).max(f64::MIN_POSITIVE);
        if diff <= bound {
            near += 1;
            continue;
        }
        return Err(format!(
            "{a} ranked before {b}, oracle {} vs {}",
            ca.to_f64().unwrap(),
            cb.to_f64().unwrap()
        ));
    }
    Ok(near)
}

/// A random index: keys with owner and position, plus the raw key list.
pub struct RandomIndex {
    pub index: EmbeddingIndex,
    pub keys: Vec<Vec<f32>>,
    pub owners: Vec<String>,
}

/// Up to `max_keys` keys of dimension 1..=`max_dim`. Half of the fixtures
/// use a coarse value grid so that score ties are common.
pub fn random_index(rng: &mut ChaCha8Rng, max_keys: usize, max_dim: usize) -> RandomIndex {
    let dim = rng.random_range(1..=max_dim);
    let n = rng.random_range(1..=max_keys);
    let owners_n = rng.random_range(1..=n.div_ceil(3).max(1));
    let coarse = rng.random_bool(0.5);
    let mut index = EmbeddingIndex::new(dim);
    let mut keys = Vec::with_capacity(n);
    let mut owners = Vec::with_capacity(n);
    for i in 0..n {
        let key = random_vector(rng, dim, coarse);
        let owner = format!("a{}", rng.random_range(0..owners_n));
        index
            .push(
                &key,
                IndexEntry {
                    sentence_id: format!("{owner}#s{i}"),
                    owner: owner.clone(),
                    tokens: Vec::new(),
                },
            )
            .unwrap();
        keys.push(key);
        owners.push(owner);
    }
    RandomIndex {
        index,
        keys,
        owners,
    }
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize, coarse: bool) -> Vec<f32> {
    (0..dim)
        .map(|_| {
            if coarse {
                rng.random_range(-2i32..=2) as f32 * 0.5
            } else {
                rng.random_range(-1.0f32..1.0)
            }
        })
        .collect()
}

/// Exhaustive scan: score every non-excluded key, sort by score descending
/// then position ascending, keep k.
pub fn exhaustive_top_k(
    keys: &[Vec<f32>],
    owners: &[String],
    query: &[f32],
    exclude: &str,
    k: usize,
) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        if owners[i] == exclude {
            continue;
        }
        let mut s = 0.0f64;
        for d in 0..key.len() {
            s += key[d] as f64 * query[d] as f64;
        }
        scored.push((i, s));
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimal valid article for retrieval and evaluation tests.
pub fn bare_article(id: &str, title: &[&str]) -> Article {
    let toks = |ws: &[&str]| {
        ws.iter()
            .map(|w| Token::new(*w).unwrap())
            .collect::<Vec<_>>()
    };
    Article {
        id: id.into(),
        title: toks(title),
        abstract_sentences: vec![sentence(0, &["abstract"])],
        body: vec![Sentence {
            is_citation: true,
            ..sentence(0, &["body", "[1]"])
        }],
        keyphrases: vec![toks(&["abstract"])],
        raw_title: title.join(" "),
        raw_abstract: "abstract".into(),
    }
}

/// Compare `build_graph`/`rank_graph` against the oracle on one body.
/// Returns the number of near-tie swaps in the ranking.
pub fn check_pacsum(words: &[Vec<String>], p: &PacSumParams) -> Result<usize, String> {
    use kpaug::summarize::{build_graph, rank_graph};
    let b = body(words);
    let g = build_graph(&b, p).map_err(|e| e.to_string())?;
    let o = pacsum_oracle(words, p);
    let n = o.n;
    if g.n != n {
        return Err(format!("n {} vs {}", g.n, n));
    }
    for (w, v) in &o.idf {
        let got = g.idf_of(w).ok_or(format!("missing idf for {w}"))?;
        if got != *v {
            return Err(format!("idf({w}) {got} vs {v}"));
        }
    }
    if g.vocab.len() != o.idf.len() {
        return Err(format!("vocab size {} vs {}", g.vocab.len(), o.idf.len()));
    }
    let sim_scale = o
        .sim
        .iter()
        .flatten()
        .map(|x| x.to_f64().unwrap().abs())
        .fold(0.0, f64::max);
    for i in 0..n {
        for j in 0..n {
            if !close(g.sim(i, j), &o.sim[i][j], 0.0) {
                return Err(format!(
                    "sim({i},{j}) {} vs {}",
                    g.sim(i, j),
                    o.sim[i][j].to_f64().unwrap()
                ));
            }
        }
    }
    if !close(g.tau, &o.tau, sim_scale) {
        return Err(format!("tau {} vs {}", g.tau, o.tau.to_f64().unwrap()));
    }
    for i in 0..n {
        if !close(g.forward[i], &o.fs[i], 0.0) {
            return Err(format!(
                "FS[{i}] {} vs {}",
                g.forward[i],
                o.fs[i].to_f64().unwrap()
            ));
        }
        if !close(g.backward[i], &o.bs[i], 0.0) {
            return Err(format!(
                "BS[{i}] {} vs {}",
                g.backward[i],
                o.bs[i].to_f64().unwrap()
            ));
        }
        if !close(g.centrality[i], &o.centrality[i], o.scale[i]) {
            return Err(format!(
                "centrality[{i}] {} vs {}",
                g.centrality[i],
                o.centrality[i].to_f64().unwrap()
            ));
        }
    }
    ranking_agrees(&rank_graph(&g, &b), &o)
}

pub fn random_tokens(rng: &mut ChaCha8Rng, len: usize) -> Vec<Token> {
    (0..len)
        .map(|_| Token::new(format!("t{}", rng.random_range(0..200))).unwrap())
        .collect()
}

/// Random article with sentence and title lengths spread across small and
/// large budgets.
pub fn random_article(rng: &mut ChaCha8Rng, id: &str) -> Article {
    let title_len = rng.random_range(1..=40);
    let n_abs = rng.random_range(1..=6);
    let n_body = rng.random_range(1..=60);
    let mut body: Vec<Sentence> = (0..n_body)
        .map(|i| {
            let len = rng.random_range(1..=40);
            Sentence {
                tokens: random_tokens(rng, len),
                text: String::new(),
                is_citation: rng.random_bool(0.3),
                body_index: i,
            }
        })
        .collect();
    let c = rng.random_range(0..n_body);
    body[c].is_citation = true;
    Article {
        id: id.into(),
        title: random_tokens(rng, title_len),
        abstract_sentences: (0..n_abs)
            .map(|i| {
                let len = rng.random_range(1..=60);
                Sentence {
                    tokens: random_tokens(rng, len),
                    text: String::new(),
                    is_citation: false,
                    body_index: i,
                }
            })
            .collect(),
        body,
        keyphrases: vec![random_tokens(rng, 2)],
        raw_title: String::new(),
        raw_abstract: String::new(),
    }
}

pub fn random_retrieval(rng: &mut ChaCha8Rng, id: &str) -> kpaug::retrieve::RetrievalResult {
    let n = rng.random_range(0..=60);
    kpaug::retrieve::RetrievalResult {
        query_id: id.into(),
        hits: (0..n)
            .map(|i| {
                let len = rng.random_range(1..=30);
                kpaug::retrieve::Hit {
                    position: i,
                    sentence_id: format!("other{i}#title"),
                    owner: format!("other{i}"),
                    tokens: random_tokens(rng, len),
                    score: 1.0 - i as f64 / 100.0,
                }
            })
            .collect(),
    }
}

/// Budget, prefix, order and membership invariants of one assembled source.
pub fn check_assembled(
    a: &Article,
    src: &kpaug::assemble::AssembledSource,
    ta: &kpaug::assemble::AssembledSource,
    max_len: usize,
    ranking: &[usize],
    retrieval: &kpaug::retrieve::RetrievalResult,
) -> Result<(), String> {
    use kpaug::assemble::Method;
    let counted: usize =
        src.segments.iter().map(Vec::len).sum::<usize>() + src.segments.len().saturating_sub(1);
    if src.token_count != counted {
        return Err(format!(
            "token_count {} but segments hold {counted}",
            src.token_count
        ));
    }
    if src.token_count > max_len {
        return Err(format!(
            "{}: {} tokens > {max_len}",
            src.method, src.token_count
        ));
    }
    if src.segments.len() < 2 || src.segments[..2] != ta.segments[..] {
        return Err(format!("{}: TA is not a prefix", src.method));
    }
    let appended = &src.segments[2..];
    let m = appended.len();
    let next_overflows = |next: &[Token]| src.token_count + next.len() + 1 > max_len;
    match src.method {
        Method::Ta => {
            if m != 0 {
                return Err("TA appended sentences".into());
            }
        }
        Method::Random | Method::Citations | Method::Noncitations => {
            if src.body_indices.len() != m || src.body_indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!(
                    "{}: body indices not strictly increasing: {:?}",
                    src.method, src.body_indices
                ));
            }
            for (seg, &i) in appended.iter().zip(&src.body_indices) {
                if *seg != a.body[i].tokens {
                    return Err(format!("{}: segment is not body sentence {i}", src.method));
                }
                let ok = match src.method {
                    Method::Citations => a.body[i].is_citation,
                    Method::Noncitations => !a.body[i].is_citation,
                    _ => true,
                };
                if !ok {
                    return Err(format!("{}: sentence {i} outside the pool", src.method));
                }
            }
        }
        Method::Summary => {
            if src.body_indices != ranking[..m] {
                return Err(format!(
                    "summary order {:?} vs ranking prefix {:?}",
                    src.body_indices,
                    &ranking[..m]
                ));
            }
            for (seg, &i) in appended.iter().zip(&src.body_indices) {
                if *seg != a.body[i].tokens {
                    return Err(format!("summary segment is not body sentence {i}"));
                }
            }
            if m < ranking.len() && !next_overflows(&a.body[ranking[m]].tokens) {
                return Err("summary stopped although the next sentence fits".into());
            }
        }
        Method::Retaug => {
            for (seg, hit) in appended.iter().zip(&retrieval.hits) {
                if *seg != hit.tokens {
                    return Err("retrieved sentences out of similarity order".into());
                }
            }
            if m < retrieval.hits.len() && !next_overflows(&retrieval.hits[m].tokens) {
                return Err("retaug stopped although the next sentence fits".into());
            }
        }
    }
    Ok(())
}

/// Run one random query through `retrieve` and compare with the exhaustive scan.
pub fn check_query(ix: &RandomIndex, owner: &str, query: Vec<f32>, k: usize) -> Result<(), String> {
    let article = bare_article(owner, &["t"]);
    let mut vectors = std::collections::BTreeMap::new();
    vectors.insert(kpaug::retrieve::query_unit_id(owner), query.clone());
    let embedder = kpaug::retrieve::FileEmbedder::new(kpaug::retrieve::EmbeddingMap {
        dim: ix.index.dim(),
        vectors,
    });
    let got =
        kpaug::retrieve::retrieve(&ix.index, &article, k, &embedder).map_err(|e| e.to_string())?;
    let want = exhaustive_top_k(&ix.keys, &ix.owners, &query, owner, k);
    let got_pairs: Vec<(usize, f64)> = got.hits.iter().map(|h| (h.position, h.score)).collect();
    if got_pairs != want {
        return Err(format!(
            "k={k} owner={owner}\n got {got_pairs:?}\nwant {want:?}"
        ));
    }
    if let Some(h) = got.hits.iter().find(|h| h.owner == owner) {
        return Err(format!("own sentence {} returned", h.sentence_id));
    }
    for h in &got.hits {
        if h.sentence_id != format!("{}#s{}", ix.owners[h.position], h.position) {
            return Err(format!("hit metadata mismatch at {}", h.position));
        }
    }
    Ok(())
}
