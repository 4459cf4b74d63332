use super::{resolve_query, ChannelUnits, Query, QueryTrace, ScoredDoc};
use crate::index::{DocId, InvertedIndex};
use crate::scoring::mix;
use std::collections::HashMap;
use std::time::Instant;

/// Scores every document touched by the query and keeps the best `k` by
/// the beta mix, ordered by (score desc, doc id asc).
pub fn exhaustive_topk(index: &InvertedIndex, query: &Query, k: usize, beta: f64) -> (Vec<ScoredDoc>, QueryTrace) {
    let start = Instant::now();
    let (terms, unknown) = resolve_query(index, query);
    let units = ChannelUnits::new(index);
    let mut acc: HashMap<DocId, (u64, u64)> = HashMap::new();
    let mut trace = QueryTrace {
        unknown_terms: unknown,
        ..QueryTrace::default()
    };
    for t in &terms {
        let list = index.posting_list(t.term_id);
        trace.blocks_total += list.blocks.len() as u64;
        trace.blocks_loaded += list.blocks.len() as u64;
        for r in list.decode_all().expect("posting blocks are validated on build and load") {
            let e = acc.entry(r.doc_id).or_default();
            e.0 += t.weight * u64::from(r.w_bm25);
            e.1 += t.weight * u64::from(r.w_learned);
        }
    }
    trace.docs_evaluated = acc.len() as u64;
    let mut scored: Vec<ScoredDoc> = acc
        .into_iter()
        .map(|(doc, (b, l))| ScoredDoc {
            doc,
            score: mix(units.pair(b, l), beta),
        })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc)));
    scored.truncate(k);
    trace.results = scored.clone();
    trace.elapsed = start.elapsed();
    (scored, trace)
}
