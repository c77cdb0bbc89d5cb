//! Deterministic synthetic article generator.
//!
//! Produces raw records shaped like scholarly full texts: citation markers in
//! both numeric and author-year style, stray markup, URLs, e-mail addresses,
//! numbers and abbreviations. Each article draws eight topic words; five gold
//! keyphrases are built from them so that two are present in the title and
//! abstract, two occur only in the opening body sentences, and one occurs
//! nowhere. The opening sentences share vocabulary with many later ones, so
//! the default centrality ranking places them first.
//!
//! Every vocabulary word is a fixed point of the stemmer.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Article, RawRecord, StringOrList};

pub const TOPIC_WORDS: &[&str] = &[
    "accent",
    "agent",
    "antenna",
    "asset",
    "atom",
    "attack",
    "auction",
    "axiom",
    "bank",
    "batch",
    "beam",
    "block",
    "bloom",
    "bound",
    "buffer",
    "bug",
    "camera",
    "cell",
    "chain",
    "channel",
    "cipher",
    "circuit",
    "class",
    "client",
    "clinic",
    "cluster",
    "contract",
    "credit",
    "crystal",
    "current",
    "cut",
    "detector",
    "dialect",
    "disk",
    "dose",
    "driver",
    "drug",
    "effect",
    "error",
    "fault",
    "field",
    "filter",
    "flash",
    "flow",
    "forest",
    "frame",
    "game",
    "gate",
    "gene",
    "gradient",
    "grammar",
    "graph",
    "hash",
    "heap",
    "index",
    "job",
    "join",
    "kernel",
    "lambda",
    "laser",
    "layer",
    "leader",
    "leaf",
    "ledger",
    "lemma",
    "lexicon",
    "loan",
    "lock",
    "logic",
    "loss",
    "margin",
    "market",
    "matrix",
    "metal",
    "model",
    "monad",
    "motion",
    "network",
    "neuron",
    "node",
    "object",
    "organ",
    "packet",
    "page",
    "parser",
    "path",
    "patient",
    "photon",
    "pixel",
    "planner",
    "player",
    "port",
    "portfolio",
    "power",
    "price",
    "proof",
    "protein",
    "protocol",
    "quark",
    "queue",
    "radio",
    "record",
    "replica",
    "reward",
    "risk",
    "robot",
    "root",
    "router",
    "scan",
    "schema",
    "sensor",
    "server",
    "shard",
    "signal",
    "sketch",
    "socket",
    "sort",
    "sound",
    "spec",
    "spectrum",
    "speech",
    "stack",
    "stem",
    "stock",
    "stream",
    "syntax",
    "tensor",
    "test",
    "thread",
    "token",
    "trade",
    "tree",
    "type",
    "vector",
    "vote",
    "wallet",
    "wave",
    "weight",
    "window",
];

pub const FILLER_WORDS: &[&str] = &[
    "about", "across", "after", "again", "against", "along", "also", "among", "area", "around",
    "begin", "behind", "below", "best", "between", "beyond", "bring", "call", "case", "common",
    "data", "design", "each", "except", "fast", "find", "first", "form", "full", "give", "goal",
    "good", "group", "help", "high", "hold", "input", "keep", "level", "line", "low", "main",
    "make", "method", "might", "move", "near", "need", "new", "number", "open", "order", "our",
    "output", "over", "part", "past", "point", "rate", "real", "result", "role", "run", "seem",
    "set", "show", "slow", "small", "start", "state", "step", "system", "take", "talk", "task",
    "term", "that", "the", "through", "time", "toward", "turn", "under", "until", "upon", "user",
    "view", "we", "within", "without", "work",
];

const AUTHORS: &[&str] = &[
    "smith",
    "chen",
    "garcia",
    "kumar",
    "novak",
    "okafor",
    "lindqvist",
];

/// Opening body sentences that carry the body-only keyphrases.
pub const KEY_SENTENCES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub articles: usize,
    pub min_body: usize,
    pub max_body: usize,
    pub seed: u64,
    /// Mix in records ingestion must drop: no citations, missing keywords,
    /// duplicate titles, and one malformed line.
    pub noise: bool,
}

impl SynthConfig {
    /// Settings of the shipped fixture corpus.
    pub fn fixture() -> Self {
        SynthConfig {
            articles: 230,
            min_body: 120,
            max_body: 180,
            seed: 20_231,
            noise: true,
        }
    }
}

fn rng_for(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn fillers(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n)
        .map(|_| FILLER_WORDS.choose(rng).unwrap().to_string())
        .collect()
}

fn citation_marker(rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..4) {
        0 => format!("[{}]", rng.random_range(1..40)),
        1 => format!(
            "[{}, {}]",
            rng.random_range(1..20),
            rng.random_range(20..40)
        ),
        2 => format!("[{}-{}]", rng.random_range(1..10), rng.random_range(10..20)),
        _ => format!(
            "{} et al. ({})",
            AUTHORS.choose(rng).unwrap(),
            rng.random_range(1990..2023)
        ),
    }
}

fn noise_fragment(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..100);
    match rng.random_range(0..9) {
        0 => "<b>".into(),
        1 => format!("see http://example.org/data/{n}"),
        2 => format!("www.example.com/{n}"),
        3 => format!("author{n}@example.edu"),
        4 => format!("fig. {n}"),
        5 => "e.g. the".into(),
        6 => format!("{}.{} percent", n, rng.random_range(0..10)),
        7 => "phase iv".into(),
        _ => format!("{n},000 items"),
    }
}

/// Capitalise, optionally splice in noise, terminate.
fn finish(rng: &mut ChaCha8Rng, mut words: Vec<String>, noise_p: f64, cite: bool) -> String {
    if rng.random_bool(noise_p) {
        let at = rng.random_range(1..=words.len());
        words.insert(at, noise_fragment(rng));
    }
    if cite {
        let at = rng.random_range(1..=words.len());
        words.insert(at, citation_marker(rng));
    }
    let mut s = words.join(" ");
    if let Some(c) = s.get(0..1) {
        s.replace_range(0..1, &c.to_uppercase());
    }
    s.push('.');
    s
}

struct Plan {
    topic: Vec<&'static str>,
}

impl Plan {
    fn new(rng: &mut ChaCha8Rng) -> Plan {
        let mut topic: Vec<&'static str> = TOPIC_WORDS.choose_multiple(rng, 8).copied().collect();
        topic.shuffle(rng);
        Plan { topic }
    }

    fn keyphrases(&self) -> Vec<String> {
        let t = &self.topic;
        vec![
            format!("{} {}", t[0], t[1]),
            t[2].to_string(),
            format!("{} {}", t[3], t[4]),
            t[5].to_string(),
            format!("{} {}", t[6], t[7]),
        ]
    }

    fn title(&self, rng: &mut ChaCha8Rng) -> String {
        let mut w = fillers(rng, 2);
        w.push(self.topic[0].into());
        w.push(self.topic[1].into());
        w.extend(fillers(rng, 3));
        w.iter()
            .map(|x| {
                let mut c = x.clone();
                c.replace_range(0..1, &x[0..1].to_uppercase());
                c
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn abstract_text(&self, rng: &mut ChaCha8Rng) -> String {
        let mut s1 = fillers(rng, 4);
        s1.push(self.topic[0].into());
        s1.push(self.topic[1].into());
        s1.extend(fillers(rng, 6));
        let mut s2 = fillers(rng, 5);
        s2.push(self.topic[2].into());
        s2.extend(fillers(rng, 5));
        let s3 = fillers(rng, 10);
        [s1, s2, s3]
            .into_iter()
            .map(|w| finish(rng, w, 0.3, false))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn body(&self, rng: &mut ChaCha8Rng, n: usize, citations: bool) -> String {
        let t = &self.topic;
        let mut out = Vec::with_capacity(n);
        for pos in 0..n {
            let words = if pos < KEY_SENTENCES {
                let mut w = fillers(rng, 2);
                w.extend([t[3], t[4]].map(String::from));
                w.extend(fillers(rng, 2));
                w.push(t[5].into());
                w.extend(fillers(rng, 2));
                w.extend([t[0], t[1], t[2]].map(String::from));
                w
            } else if rng.random_bool(0.35) {
                let n = rng.random_range(8..14);
                let mut w = fillers(rng, n);
                let at = rng.random_range(0..w.len());
                w.insert(at, t[rng.random_range(0..6)].into());
                w
            } else {
                let n = rng.random_range(9..16);
                fillers(rng, n)
            };
            let cite = citations && (pos == 1 || rng.random_bool(0.25));
            out.push(finish(rng, words, 0.15, cite));
        }
        out.join(" ")
    }
}

/// The `i`-th raw record of the synthetic corpus.
pub fn raw_record(cfg: &SynthConfig, i: usize) -> RawRecord {
    let mut rng = rng_for(cfg.seed, i);
    let plan = Plan::new(&mut rng);
    let duplicate = cfg.noise && i > 0 && i % 59 == 31;
    let title = if duplicate {
        let mut prev = rng_for(cfg.seed, i - 1);
        Plan::new(&mut prev).title(&mut prev)
    } else {
        plan.title(&mut rng)
    };
    let abstract_text = plan.abstract_text(&mut rng);
    let n = rng.random_range(cfg.min_body..=cfg.max_body.max(cfg.min_body));
    let citations = !(cfg.noise && i % 41 == 17);
    let fulltext = plan.body(&mut rng, n.max(KEY_SENTENCES + 1), citations);
    let keywords =
        (!(cfg.noise && i % 47 == 23)).then(|| StringOrList::One(plan.keyphrases().join(";")));
    let references = (0..rng.random_range(3..12))
        .map(|r| format!("reference {r}"))
        .collect();
    RawRecord {
        id: Some(format!("synth-{i:05}")),
        title: Some(title),
        abstract_text: Some(abstract_text),
        fulltext: Some(fulltext),
        keywords,
        references: Some(StringOrList::Many(references)),
    }
}

/// The whole corpus in the raw line-delimited format.
pub fn raw_jsonl(cfg: &SynthConfig) -> String {
    let mut out = String::new();
    for i in 0..cfg.articles {
        if cfg.noise && i == cfg.articles / 2 {
            out.push_str("{\"id\": \"broken\", \"title\": \n");
        }
        out.push_str(&serde_json::to_string(&raw_record(cfg, i)).expect("raw record serializes"));
        out.push('\n');
    }
    out
}

/// Processed form of the `i`-th record, or `None` if ingestion would drop it.
pub fn article(cfg: &SynthConfig, i: usize) -> Option<Article> {
    raw_record(cfg, i).into_article().ok()
}

/// Lazily generated processed articles.
pub fn articles(cfg: &SynthConfig) -> impl Iterator<Item = Article> + '_ {
    (0..cfg.articles).filter_map(move |i| article(cfg, i))
}
