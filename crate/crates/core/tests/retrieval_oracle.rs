mod common;

use common::{bare_article, check_query, random_index, random_vector, seeded, RandomIndex};
use kpaug::retrieve::{build_index, feature_slot, search, tfidf_embed, RetrieveError, VocabStats};
use kpaug::textproc::Token;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn seeded_100_indices() {
    let mut rng = seeded(99);
    for case in 0..100 {
        let ix = random_index(&mut rng, 1000, 64);
        for _ in 0..5 {
            let owner = ix.owners[rng.random_range(0..ix.owners.len())].clone();
            let coarse = rng.random_bool(0.5);
            let q = random_vector(&mut rng, ix.index.dim(), coarse);
            let k = rng.random_range(1..=60);
            check_query(&ix, &owner, q, k).unwrap_or_else(|e| panic!("case {case}: {e}"));
        }
    }
}

#[test]
fn crosses_chunk_boundaries() {
    // more rows than one scan chunk, all tied, so order is pure position
    let mut rng = seeded(5);
    let dim = 4;
    let mut index = kpaug::retrieve::EmbeddingIndex::new(dim);
    let mut keys = Vec::new();
    let mut owners = Vec::new();
    for i in 0..9000 {
        let key = if i % 3 == 0 {
            vec![0.5; dim]
        } else {
            random_vector(&mut rng, dim, true)
        };
        let owner = format!("a{}", i % 7);
        index
            .push(
                &key,
                kpaug::retrieve::IndexEntry {
                    sentence_id: format!("{owner}#s{i}"),
                    owner: owner.clone(),
                    tokens: vec![],
                },
            )
            .unwrap();
        keys.push(key);
        owners.push(owner);
    }
    let ix = RandomIndex {
        index,
        keys,
        owners,
    };
    for k in [1, 10, 100, 5000] {
        check_query(&ix, "a3", vec![1.0; dim], k).unwrap();
    }
}

#[test]
fn single_non_own_entry_is_forced() {
    let mut index = kpaug::retrieve::EmbeddingIndex::new(2);
    for (i, o) in ["me", "me", "you"].iter().enumerate() {
        index
            .push(
                &[i as f32, 1.0],
                kpaug::retrieve::IndexEntry {
                    sentence_id: format!("{o}{i}"),
                    owner: o.to_string(),
                    tokens: vec![],
                },
            )
            .unwrap();
    }
    for k in [1, 3, 10] {
        let hits = search(&index, &[-1.0, -1.0], "me", k).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].owner, "you");
    }
}

#[test]
fn aligned_orthogonal_key_wins() {
    let mut index = kpaug::retrieve::EmbeddingIndex::new(3);
    for (i, key) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        .iter()
        .enumerate()
    {
        index
            .push(
                key,
                kpaug::retrieve::IndexEntry {
                    sentence_id: format!("s{i}"),
                    owner: format!("o{i}"),
                    tokens: vec![],
                },
            )
            .unwrap();
    }
    let hits = search(&index, &[0.0, 2.0, 0.0], "x", 3).unwrap();
    assert_eq!(hits[0].sentence_id, "s1");
    assert_eq!(hits[0].score, 2.0);
}

#[test]
fn index_counts_title_and_abstract_sentences() {
    let mut a = bare_article("a", &["same", "title"]);
    let mut b = bare_article("b", &["same", "title"]);
    for art in [&mut a, &mut b] {
        art.abstract_sentences = vec![
            common::sentence(0, &["one", "two"]),
            common::sentence(1, &["three"]),
        ];
    }
    let train = vec![a.clone(), b];
    let stats = VocabStats::from_train(&train);
    let emb = kpaug::retrieve::TfidfEmbedder::new(stats, 64).unwrap();
    let (index, report) = build_index(&train, &emb).unwrap();
    assert_eq!(index.len(), 6);
    assert_eq!(report.skipped, 0);
    // identical titles of two owners are two entries
    assert_eq!(index.key(0), index.key(3));
    assert_ne!(index.entry(0).owner, index.entry(3).owner);
    assert!(matches!(
        build_index(&[], &emb),
        Err(RetrieveError::EmptyTrainSplit)
    ));
}

#[test]
fn tfidf_embedder_examples() {
    let toks = |s: &str| {
        s.split_whitespace()
            .map(|w| Token::new(w).unwrap())
            .collect::<Vec<_>>()
    };
    let mut stats = VocabStats::default();
    for s in ["alpha beta", "gamma delta", "alpha gamma"] {
        stats.add_sentence(&toks(s));
    }
    let z = tfidf_embed(&[], &stats, 4096).unwrap();
    assert!(z.iter().all(|&x| x == 0.0));
    let a = tfidf_embed(&toks("alpha beta"), &stats, 4096).unwrap();
    let a2 = tfidf_embed(&toks("alpha beta"), &stats, 4096).unwrap();
    let dot = |x: &[f32], y: &[f32]| {
        x.iter()
            .zip(y)
            .map(|(p, q)| *p as f64 * *q as f64)
            .sum::<f64>()
    };
    assert_eq!(a, a2);
    assert!((dot(&a, &a2) - 1.0).abs() < 1e-6);
    // collision-free disjoint sentences are orthogonal
    let slots: Vec<usize> = ["alpha", "beta", "gamma", "delta"]
        .iter()
        .map(|w| feature_slot(w, 4096).0)
        .collect();
    let mut uniq = slots.clone();
    uniq.sort_unstable();
    uniq.dedup();
    assert_eq!(uniq.len(), 4, "fixture words must not collide");
    let c = tfidf_embed(&toks("gamma delta"), &stats, 4096).unwrap();
    assert_eq!(dot(&a, &c), 0.0);
    assert!(tfidf_embed(&toks("alpha"), &stats, 7).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exhaustive_equivalence(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let ix = random_index(&mut rng, 300, 16);
        let owner = ix.owners[rng.random_range(0..ix.owners.len())].clone();
        let coarse = rng.random_bool(0.5);
        let q = random_vector(&mut rng, ix.index.dim(), coarse);
        let k = rng.random_range(1..=40);
        prop_assert!(check_query(&ix, &owner, q, k).is_ok());
    }

    #[test]
    fn larger_k_extends_prefix(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let ix = random_index(&mut rng, 300, 16);
        let q = random_vector(&mut rng, ix.index.dim(), true);
        let k = rng.random_range(1..=20);
        let small = search(&ix.index, &q, &ix.owners[0], k).unwrap();
        let large = search(&ix.index, &q, &ix.owners[0], k + rng.random_range(1..=20)).unwrap();
        prop_assert_eq!(&large[..small.len()], &small[..]);
    }

    #[test]
    fn thread_count_does_not_matter(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let ix = random_index(&mut rng, 1000, 8);
        let q = random_vector(&mut rng, ix.index.dim(), true);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| search(&ix.index, &q, &ix.owners[0], 25).unwrap());
        let b = many.install(|| search(&ix.index, &q, &ix.owners[0], 25).unwrap());
        prop_assert_eq!(a, b);
    }
}
