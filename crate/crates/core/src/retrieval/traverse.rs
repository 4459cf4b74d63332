//! Block-max document-at-a-time traversal.
//!
//! Each round sorts the cursors by current doc, picks the pivot from list
//! maxima (every active threshold must be reachable), refines the bound with the
//! block maxima at the pivot, and then either skips past the nearest block
//! boundary without decoding or decodes, scores both channels and inserts.

use super::config::{ConfigError, RetrievalConfig, SkipMode, ViewMode};
use super::cursor::{Cursor, END};
use super::queue::{DualQueueState, TopKQueue};
use super::{resolve_query, Audit, ChannelUnits, Evaluation, Query, QueryTrace, ScoredDoc, SkipEvent, SkipKind};
use crate::index::{DocId, InvertedIndex};
use crate::scoring::{mix, ScorePair};
use std::time::Instant;

/// Which threshold caused a skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipCause {
    /// `Bound(d, alpha) < F_s * Theta_s`
    SkipThreshold,
    /// `Bound(d, beta) < F_f * Theta_f` (dual-threshold mode only)
    FinalThreshold,
}

pub(crate) fn skip_cause(bound: ScorePair, state: &DualQueueState, config: &RetrievalConfig) -> Option<SkipCause> {
    if mix(bound, config.alpha) < config.f_s * state.theta_s() {
        Some(SkipCause::SkipThreshold)
    } else if config.skip_mode == SkipMode::Dual && mix(bound, config.beta) < config.f_f * state.theta_f() {
        Some(SkipCause::FinalThreshold)
    } else {
        None
    }
}

/// Single-threshold: skip iff `Bound(d, alpha) < F_s * Theta_s`.
/// Dual-threshold: also skip iff `Bound(d, beta) < F_f * Theta_f`.
pub fn skip_decision(bound: ScorePair, state: &DualQueueState, config: &RetrievalConfig) -> bool {
    skip_cause(bound, state, config).is_some()
}

trait Pruner {
    fn skip(&self, bound: ScorePair) -> Option<SkipCause>;
    fn offer(&mut self, doc: DocId, scores: ScorePair);
    /// Scaled limits for auditing: (skip side, final side).
    fn limits(&self) -> (f64, f64);
    fn thresholds(&self) -> (f64, f64);
    fn sets_equal(&self) -> bool;
    fn finish(self) -> Vec<ScoredDoc>;
}

struct SingleQueue {
    queue: TopKQueue,
    gamma: f64,
    factor: f64,
}

impl Pruner for SingleQueue {
    fn skip(&self, bound: ScorePair) -> Option<SkipCause> {
        (mix(bound, self.gamma) < self.limit()).then_some(SkipCause::SkipThreshold)
    }
    fn offer(&mut self, doc: DocId, scores: ScorePair) {
        self.queue.push(doc, mix(scores, self.gamma));
    }
    fn limits(&self) -> (f64, f64) {
        (self.limit(), self.limit())
    }
    fn thresholds(&self) -> (f64, f64) {
        let t = self.queue.threshold();
        (t, t)
    }
    fn sets_equal(&self) -> bool {
        true
    }
    fn finish(self) -> Vec<ScoredDoc> {
        ranked_docs(&self.queue)
    }
}

impl SingleQueue {
    fn limit(&self) -> f64 {
        self.factor * self.queue.threshold()
    }
}

struct DualQueue {
    state: DualQueueState,
    config: RetrievalConfig,
}

impl Pruner for DualQueue {
    fn skip(&self, bound: ScorePair) -> Option<SkipCause> {
        skip_cause(bound, &self.state, &self.config)
    }
    fn offer(&mut self, doc: DocId, scores: ScorePair) {
        let c = &self.config;
        self.state.insert(doc, scores, c.alpha, c.beta, c.view_mode);
    }
    fn limits(&self) -> (f64, f64) {
        (self.config.f_s * self.state.theta_s(), self.config.f_f * self.state.theta_f())
    }
    fn thresholds(&self) -> (f64, f64) {
        (self.state.theta_s(), self.state.theta_f())
    }
    fn sets_equal(&self) -> bool {
        self.config.view_mode == ViewMode::Independent || self.state.q_s.doc_ids() == self.state.q_f.doc_ids()
    }
    fn finish(self) -> Vec<ScoredDoc> {
        ranked_docs(&self.state.q_f)
    }
}

fn ranked_docs(q: &TopKQueue) -> Vec<ScoredDoc> {
    q.ranked()
        .into_iter()
        .map(|e| ScoredDoc { doc: e.doc, score: e.score })
        .collect()
}

/// Dual-threshold skipping with hybrid scoring. Returns `q_f` ordered by
/// the beta mix.
pub fn dths_traverse(
    index: &InvertedIndex,
    query: &Query,
    config: &RetrievalConfig,
) -> Result<(Vec<ScoredDoc>, QueryTrace), ConfigError> {
    config.validate()?;
    let pruner = DualQueue {
        state: DualQueueState::new(config.k),
        config: *config,
    };
    Ok(run(index, query, pruner, config.audit))
}

/// Single-queue block-max pruning on the `gamma` mix; skips iff the bound
/// falls below `factor * Theta`. `factor = 1` is rank-safe.
pub fn blockmax_traverse(
    index: &InvertedIndex,
    query: &Query,
    k: usize,
    gamma: f64,
    factor: f64,
    audit: bool,
) -> (Vec<ScoredDoc>, QueryTrace) {
    assert!(k >= 1 && (0.0..=1.0).contains(&gamma) && factor >= 1.0);
    let pruner = SingleQueue {
        queue: TopKQueue::new(k),
        gamma,
        factor,
    };
    run(index, query, pruner, audit)
}

/// Learned-channel block-max pruning with the threshold over-estimated by
/// `factor`.
pub fn overest_traverse(index: &InvertedIndex, query: &Query, k: usize, factor: f64) -> (Vec<ScoredDoc>, QueryTrace) {
    blockmax_traverse(index, query, k, 0.0, factor, false)
}

fn run<P: Pruner>(index: &InvertedIndex, query: &Query, mut pruner: P, audit: bool) -> (Vec<ScoredDoc>, QueryTrace) {
    let start = Instant::now();
    let (terms, unknown) = resolve_query(index, query);
    let units = ChannelUnits::new(index);
    let mut trace = QueryTrace {
        unknown_terms: unknown,
        ..QueryTrace::default()
    };
    let mut log = audit.then(Audit::default);

    let mut cursors: Vec<Cursor> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let list = index.posting_list(t.term_id);
            trace.blocks_total += list.blocks.len() as u64;
            Cursor::new(list, i, t.weight)
        })
        .collect();
    // Cursor positions ordered by (doc, term index); cursors never move in
    // memory, only this permutation does.
    let mut order: Vec<usize> = (0..cursors.len()).collect();
    let key = |c: &Cursor| (u64::from(c.doc) << 32) | c.term_idx as u64;

    loop {
        order.retain(|&i| !cursors[i].done());
        if order.is_empty() {
            break;
        }
        for i in 1..order.len() {
            let moving = order[i];
            let k = key(&cursors[moving]);
            let mut j = i;
            while j > 0 && key(&cursors[order[j - 1]]) > k {
                order[j] = order[j - 1];
                j -= 1;
            }
            order[j] = moving;
        }
        let first_doc = cursors[order[0]].doc;

        // Pivot: first prefix whose list-max bound passes every threshold.
        let (mut acc_b, mut acc_l) = (0u64, 0u64);
        let mut pivot = None;
        for (pos, &ci) in order.iter().enumerate() {
            let c = &cursors[ci];
            let (nb, nl) = (acc_b + c.max_bm25, acc_l + c.max_learned);
            if pruner.skip(units.pair(nb, nl)).is_none() {
                pivot = Some(pos);
                break;
            }
            acc_b = nb;
            acc_l = nl;
        }
        let Some(first_pivot) = pivot else {
            let cause = pruner.skip(units.pair(acc_b, acc_l)).unwrap_or(SkipCause::SkipThreshold);
            if let Some(log) = log.as_mut() {
                let (limit_s, limit_f) = pruner.limits();
                log.skips.push(SkipEvent {
                    first: first_doc,
                    end: END,
                    bound: units.pair(acc_b, acc_l),
                    kind: SkipKind::Exhausted,
                    cause,
                    limit_s,
                    limit_f,
                });
            }
            match cause {
                SkipCause::SkipThreshold => trace.skipped_by_s += 1,
                SkipCause::FinalThreshold => trace.skipped_by_f += 1,
            }
            break;
        };
        let pivot_doc = cursors[order[first_pivot]].doc;
        let prefix_bound = units.pair(acc_b, acc_l);
        let mut p = first_pivot;
        while p + 1 < order.len() && cursors[order[p + 1]].doc == pivot_doc {
            p += 1;
        }
        let pivot_event = |pruner: &P| {
            let (limit_s, limit_f) = pruner.limits();
            SkipEvent {
                first: first_doc,
                end: pivot_doc,
                bound: prefix_bound,
                kind: SkipKind::Pivot,
                cause: pruner.skip(prefix_bound).unwrap_or(SkipCause::SkipThreshold),
                limit_s,
                limit_f,
            }
        };

        // Block-max refinement at the pivot.
        let (mut bb, mut bl) = (0u64, 0u64);
        let mut boundary = END;
        for &ci in &order[..=p] {
            let c = &cursors[ci];
            if let Some(bi) = c.block_for(pivot_doc) {
                let (mb, ml) = c.block_max(bi);
                bb += mb;
                bl += ml;
                boundary = boundary.min(c.block(bi).max_doc_id.saturating_add(1));
            }
        }
        if p + 1 < order.len() {
            boundary = boundary.min(cursors[order[p + 1]].doc);
        }
        let bound = units.pair(bb, bl);

        if let Some(cause) = pruner.skip(bound) {
            match cause {
                SkipCause::SkipThreshold => trace.skipped_by_s += 1,
                SkipCause::FinalThreshold => trace.skipped_by_f += 1,
            }
            if let Some(log) = log.as_mut() {
                if first_doc < pivot_doc {
                    log.skips.push(pivot_event(&pruner));
                }
                let (limit_s, limit_f) = pruner.limits();
                log.skips.push(SkipEvent {
                    first: pivot_doc,
                    end: boundary,
                    bound,
                    kind: SkipKind::Block,
                    cause,
                    limit_s,
                    limit_f,
                });
            }
            for &ci in &order[..=p] {
                cursors[ci].skip_to(boundary);
            }
            continue;
        }

        let aligned = |cursors: &[Cursor]| order[..=p].iter().all(|&ci| cursors[ci].exact && cursors[ci].doc == pivot_doc);
        if !aligned(&cursors) {
            if let Some(log) = log.as_mut() {
                if first_doc < pivot_doc {
                    log.skips.push(pivot_event(&pruner));
                }
            }
            for &ci in &order[..=p] {
                cursors[ci].next_geq(pivot_doc);
            }
            // The bound above still covers the pivot, so a pivot that every
            // prefix cursor lands on is scored without another round.
            if !aligned(&cursors) {
                continue;
            }
        }

        let (mut sb, mut sl) = (0u64, 0u64);
        for &ci in &order[..=p] {
            let c = &cursors[ci];
            let r = c.record();
            sb += c.qw * u64::from(r.w_bm25);
            sl += c.qw * u64::from(r.w_learned);
        }
        if sb > bb || sl > bl {
            trace.bound_violations += 1;
        }
        let scores = units.pair(sb, sl);
        pruner.offer(pivot_doc, scores);
        trace.docs_evaluated += 1;
        if let Some(log) = log.as_mut() {
            log.evaluations.push(Evaluation {
                doc: pivot_doc,
                bound,
                score: scores,
            });
            log.thresholds.push(pruner.thresholds());
            if !pruner.sets_equal() {
                log.set_mismatches += 1;
            }
        }
        for &ci in &order[..=p] {
            cursors[ci].advance();
        }
    }

    trace.blocks_loaded = cursors.iter().map(|c| c.blocks_loaded).sum();
    let results = pruner.finish();
    trace.results = results.clone();
    trace.audit = log;
    trace.elapsed = start.elapsed();
    (results, trace)
}
