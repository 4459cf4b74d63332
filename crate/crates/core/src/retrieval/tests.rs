use super::*;
use crate::index::{build_index, BuildConfig, CorpusRecord, PartitionStrategy, ScaleChoice};
use std::collections::BTreeMap;

fn rec(id: &str, tf: &[(&str, u32)], impact: &[(&str, f64)]) -> CorpusRecord {
    CorpusRecord {
        id: id.into(),
        tf: tf.iter().map(|&(t, v)| (t.to_string(), v)).collect::<BTreeMap<_, _>>(),
        impact: impact.iter().map(|&(t, v)| (t.to_string(), v)).collect(),
        text: None,
    }
}

fn three_docs() -> InvertedIndex {
    let cfg = BuildConfig {
        scale: ScaleChoice::Fixed { bm25: 100.0, learned: 100.0 },
        block_size: 2,
        partition: PartitionStrategy::Fixed,
        ..BuildConfig::default()
    };
    build_index(
        vec![
            rec("d0", &[("x", 1)], &[("x", 3.0)]),
            rec("d1", &[("x", 4)], &[("x", 1.0)]),
            rec("d2", &[("x", 2)], &[("x", 6.0)]),
        ],
        &cfg,
    )
    .unwrap()
}

fn hand_score(index: &InvertedIndex, doc: &str, beta: f64) -> f64 {
    let (k1, b) = index.bm25_params();
    let stats = index.stats();
    let d = index.doc_names().iter().position(|n| n == doc).unwrap();
    let tf = [1, 4, 2][d];
    let learned = [3.0, 1.0, 6.0][d];
    let wb = crate::scoring::bm25_weight(tf, 3, stats.doc_len[d], stats, k1, b).unwrap();
    // quantized at scale 100
    let wb = (wb * 100.0).round() / 100.0;
    beta * wb + (1.0 - beta) * learned
}

#[test]
fn exhaustive_orders_by_mixed_weight() {
    let idx = three_docs();
    let q = Query::new("q", &["x"]);
    for beta in [0.0, 0.2, 0.5, 1.0] {
        let (res, _) = exhaustive_topk(&idx, &q, 3, beta);
        let mut expected: Vec<(String, f64)> = ["d0", "d1", "d2"]
            .iter()
            .map(|d| (d.to_string(), hand_score(&idx, d, beta)))
            .collect();
        expected.sort_by(|a, b| b.1.total_cmp(&a.1));
        let got: Vec<&str> = res.iter().map(|r| idx.doc_name(r.doc)).collect();
        let want: Vec<&str> = expected.iter().map(|e| e.0.as_str()).collect();
        assert_eq!(got, want, "beta {beta}");
        for (r, e) in res.iter().zip(&expected) {
            assert!((r.score - e.1).abs() < 1e-9);
        }
    }
}

#[test]
fn k_larger_than_matches_returns_all() {
    let idx = three_docs();
    let (res, _) = exhaustive_topk(&idx, &Query::new("q", &["x"]), 50, 0.2);
    assert_eq!(res.len(), 3);
}

#[test]
fn ties_break_on_doc_id() {
    let idx = build_index(
        vec![rec("a", &[], &[("t", 2.0)]), rec("b", &[], &[("t", 2.0)]), rec("c", &[], &[("t", 2.0)])],
        &BuildConfig::default(),
    )
    .unwrap();
    let q = Query::new("q", &["t"]);
    let (res, _) = exhaustive_topk(&idx, &q, 2, 0.0);
    assert_eq!(res.iter().map(|r| r.doc).collect::<Vec<_>>(), vec![0, 1]);
    let (dths, _) = dths_traverse(&idx, &q, &RetrievalConfig::dths(2, 0.0, 0.0)).unwrap();
    assert_eq!(dths, res);
}

#[test]
fn unknown_terms_are_dropped_and_counted() {
    let idx = three_docs();
    let q = Query::new("q", &["nope", "zzz"]);
    let (res, trace) = exhaustive_topk(&idx, &q, 10, 0.2);
    assert!(res.is_empty());
    assert_eq!(trace.unknown_terms, 2);
    let (res, trace) = dths_traverse(&idx, &q, &RetrievalConfig::default()).unwrap();
    assert!(res.is_empty());
    assert_eq!((trace.unknown_terms, trace.docs_evaluated), (2, 0));
}

#[test]
fn one_term_query_matches_oracle() {
    let idx = three_docs();
    let q = Query::new("q", &["x"]);
    for k in 1..=3 {
        let (oracle, _) = exhaustive_topk(&idx, &q, k, 0.2);
        let (got, _) = dths_traverse(&idx, &q, &RetrievalConfig::dths(k, 0.2, 0.2)).unwrap();
        assert_eq!(got, oracle);
        let (got, _) = blockmax_traverse(&idx, &q, k, 0.2, 1.0, false);
        assert_eq!(got, oracle);
    }
}

#[test]
fn skip_decision_examples() {
    // Queues with k = 1 make the threshold equal to the single stored score.
    let mut state = DualQueueState::new(1);
    state.q_s.insert(99, 6.0);
    state.q_f.insert(99, 4.0);
    let st = RetrievalConfig {
        alpha: 1.0,
        beta: 0.0,
        skip_mode: SkipMode::Single,
        ..RetrievalConfig::default()
    };
    // alpha = 1 picks the bm25 channel, beta = 0 the learned one
    assert!(skip_decision(ScorePair::new(5.0, 100.0), &state, &st));
    let dt = RetrievalConfig { skip_mode: SkipMode::Dual, ..st };
    assert!(!skip_decision(ScorePair::new(7.0, 3.0), &state, &st));
    assert!(skip_decision(ScorePair::new(7.0, 3.0), &state, &dt));
    assert!(!skip_decision(ScorePair::new(7.0, 4.5), &state, &dt));
    assert!(!skip_decision(ScorePair::new(6.0, 4.0), &state, &dt), "equality is not a skip");
}

#[test]
fn empty_queues_never_skip_at_unit_factor() {
    let state = DualQueueState::new(10);
    let cfg = RetrievalConfig::default();
    assert!(!skip_decision(ScorePair::new(0.0, 0.0), &state, &cfg));
    let over = RetrievalConfig { f_s: 1.9, f_f: 1.9, ..cfg };
    assert!(!skip_decision(ScorePair::new(0.0, 0.0), &state, &over));
}

#[test]
fn invalid_config_rejected_before_traversal() {
    let idx = three_docs();
    let bad = RetrievalConfig { alpha: 2.0, ..RetrievalConfig::default() };
    assert!(dths_traverse(&idx, &Query::new("q", &["x"]), &bad).is_err());
    assert!(retrieve(&idx, &Query::new("q", &["x"]), &RetrievalConfig { k: 0, ..bad }).is_err());
}

#[test]
fn query_weights_scale_contributions() {
    let idx = build_index(
        vec![rec("a", &[], &[("s", 4.0)]), rec("b", &[], &[("t", 3.0)])],
        &BuildConfig::default(),
    )
    .unwrap();
    let mut q = Query::new("q", &["s", "t"]);
    q.terms[1].query_weight = 2.0;
    let (res, _) = exhaustive_topk(&idx, &q, 2, 0.0);
    assert_eq!(idx.doc_name(res[0].doc), "b");
    let (got, _) = dths_traverse(&idx, &q, &RetrievalConfig::dths(2, 0.0, 0.0)).unwrap();
    assert_eq!(got, res);
}
