use dualskip::harness::{generate_corpus, SynthSpec};
use dualskip::index::{build_index, BuildConfig, InvertedIndex, PartitionStrategy};
use dualskip::retrieval::{
    blockmax_traverse, dths_traverse, exhaustive_topk, overest_traverse, retrieve, Query, RetrievalConfig, SkipMode,
    ViewMode,
};
use dualskip::QueryTerm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus(seed: u64, rho: f64) -> (Vec<dualskip::index::CorpusRecord>, Vec<Query>) {
    let c = generate_corpus(&SynthSpec {
        num_docs: 3_000,
        vocab_size: 800,
        doc_len_mean: 20,
        query_count: 60,
        channel_correlation: rho,
        seed,
        ..SynthSpec::default()
    })
    .unwrap();
    (c.docs, c.queries)
}

fn indexes(docs: &[dualskip::index::CorpusRecord]) -> Vec<InvertedIndex> {
    let mut out = Vec::new();
    for partition in [PartitionStrategy::Fixed, PartitionStrategy::Variable] {
        for block_size in [4, 32, 128] {
            let cfg = BuildConfig {
                partition,
                block_size,
                ..BuildConfig::default()
            };
            out.push(build_index(docs.to_vec(), &cfg).unwrap());
        }
    }
    out
}

#[test]
fn safe_configurations_match_the_oracle() {
    for (seed, rho) in [(1, 0.0), (2, 0.7)] {
        let (docs, queries) = corpus(seed, rho);
        for index in indexes(&docs) {
            for q in &queries {
                for k in [1, 7, 50] {
                    for gamma in [0.0, 0.35, 1.0] {
                        let (oracle, _) = exhaustive_topk(&index, q, k, gamma);
                        for skip in [SkipMode::Single, SkipMode::Dual] {
                            for view in [ViewMode::Independent, ViewMode::Uniform] {
                                let cfg = RetrievalConfig {
                                    skip_mode: skip,
                                    view_mode: view,
                                    ..RetrievalConfig::dths(k, gamma, gamma)
                                };
                                let (got, trace) = dths_traverse(&index, q, &cfg).unwrap();
                                assert_eq!(got, oracle, "query {} k {k} gamma {gamma} {skip:?} {view:?}", q.id);
                                assert_eq!(trace.bound_violations, 0);
                            }
                        }
                        assert_eq!(blockmax_traverse(&index, q, k, gamma, 1.0, false).0, oracle);
                    }
                }
            }
        }
    }
}

#[test]
fn weighted_and_repeated_terms() {
    let (docs, queries) = corpus(3, 0.2);
    let index = build_index(docs, &BuildConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for q in &queries {
        let mut terms: Vec<QueryTerm> = q
            .terms
            .iter()
            .map(|t| QueryTerm::weighted(t.term.clone(), rng.random_range(1..8) as f64 * 0.25))
            .collect();
        terms.push(QueryTerm::new("not-a-term"));
        let wq = Query { id: q.id.clone(), terms };
        for gamma in [0.0, 0.2, 1.0] {
            let (oracle, otrace) = exhaustive_topk(&index, &wq, 20, gamma);
            let (got, trace) = dths_traverse(&index, &wq, &RetrievalConfig::dths(20, gamma, gamma)).unwrap();
            assert_eq!(got, oracle);
            assert_eq!((otrace.unknown_terms, trace.unknown_terms), (1, 1));
        }
    }
}

#[test]
fn counters_are_consistent() {
    let (docs, queries) = corpus(4, 0.0);
    let index = build_index(docs, &BuildConfig::default()).unwrap();
    for q in &queries {
        for cfg in [
            RetrievalConfig::default(),
            RetrievalConfig { view_mode: ViewMode::Uniform, ..RetrievalConfig::dths(10, 0.9, 0.2) },
            RetrievalConfig::blockmax(10, 0.0),
            RetrievalConfig::overest(10, 0.0, 1.5),
            RetrievalConfig::exhaustive(10, 0.2),
        ] {
            let (res, t) = retrieve(&index, q, &cfg).unwrap();
            assert!(t.blocks_loaded <= t.blocks_total);
            assert!(res.len() <= cfg.k);
            assert!(t.docs_evaluated >= res.len() as u64);
            assert_eq!(t.results, res);
            assert!(res.windows(2).all(|w| w[0].score > w[1].score || (w[0].score == w[1].score && w[0].doc < w[1].doc)));
        }
    }
}

#[test]
fn overestimation_at_one_is_safe_and_above_one_skips_more() {
    let (docs, queries) = corpus(5, 0.0);
    let index = build_index(docs, &BuildConfig { block_size: 16, ..BuildConfig::default() }).unwrap();
    let (mut safe, mut aggressive) = (0, 0);
    for q in &queries {
        let (a, ta) = overest_traverse(&index, q, 10, 1.0);
        assert_eq!(a, exhaustive_topk(&index, q, 10, 0.0).0);
        let (_, tb) = overest_traverse(&index, q, 10, 1.7);
        safe += ta.docs_evaluated;
        aggressive += tb.docs_evaluated;
    }
    assert!(aggressive < safe, "{aggressive} vs {safe}");
}

#[test]
fn audit_records_every_decision() {
    let (docs, queries) = corpus(6, 0.0);
    let index = build_index(docs, &BuildConfig { block_size: 8, ..BuildConfig::default() }).unwrap();
    for q in queries.iter().take(20) {
        let cfg = RetrievalConfig { audit: true, ..RetrievalConfig::dths(10, 0.9, 0.2) };
        let (_, t) = dths_traverse(&index, q, &cfg).unwrap();
        let audit = t.audit.unwrap();
        assert_eq!(audit.evaluations.len() as u64, t.docs_evaluated);
        assert_eq!(audit.thresholds.len() as u64, t.docs_evaluated);
        assert_eq!(audit.set_mismatches, 0, "independent view is not audited for set equality");
        for e in &audit.evaluations {
            assert!(e.score.dominated_by(&e.bound));
        }
        for s in &audit.skips {
            assert!(s.first < s.end);
        }
        let uni = RetrievalConfig { view_mode: ViewMode::Uniform, ..cfg };
        let (_, t) = dths_traverse(&index, q, &uni).unwrap();
        assert_eq!(t.audit.unwrap().set_mismatches, 0);
    }
}
