//! Document-at-a-time top-k retrieval.
//!
//! Four controllers share one traversal: the exhaustive oracle, rank-safe
//! block-max pruning, block-max pruning with an over-estimated threshold,
//! and dual-threshold skipping with hybrid scoring (DTHS).
//!
//! Channel scores are accumulated as exact integers (fixed-point query
//! weight times quantized posting weight) and converted to reals only when
//! mixed. Every route therefore produces bit-identical scores for the same
//! document, and a score can never exceed a bound built from the same
//! integers.

pub mod config;
pub(crate) mod cursor;
mod exhaustive;
pub mod queue;
mod traverse;

pub use config::{Algorithm, ConfigError, RetrievalConfig, SkipMode, ViewMode};
pub use exhaustive::exhaustive_topk;
pub use queue::{dual_insert, DualQueueState, Ranked, TopKQueue};
pub use traverse::{blockmax_traverse, dths_traverse, overest_traverse, skip_decision, SkipCause};

use crate::index::{DocId, InvertedIndex, TermId};
use crate::scoring::{QueryTerm, ScorePair};
use std::time::Duration;

/// Query weights are fixed point with this many steps per unit.
pub const QUERY_WEIGHT_SCALE: f64 = 1024.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: String,
    pub terms: Vec<QueryTerm>,
}

impl Query {
    pub fn new(id: impl Into<String>, terms: &[&str]) -> Self {
        Self {
            id: id.into(),
            terms: terms.iter().map(|t| QueryTerm::new(*t)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ResolvedTerm {
    pub term_id: TermId,
    pub weight: u64,
}

/// Maps query terms to term ids. Unknown and zero-weight terms are dropped
/// (unknown ones are counted); repeated terms add their weights.
pub(crate) fn resolve_query(index: &InvertedIndex, query: &Query) -> (Vec<ResolvedTerm>, u64) {
    let mut unknown = 0;
    let mut out: Vec<ResolvedTerm> = Vec::with_capacity(query.terms.len());
    for qt in &query.terms {
        let Some(term_id) = index.term_id(&qt.term) else {
            unknown += 1;
            continue;
        };
        let w = (qt.query_weight.max(0.0) * QUERY_WEIGHT_SCALE).round();
        if !(w >= 1.0) {
            continue;
        }
        let weight = w.min(u32::MAX as f64) as u64;
        match out.iter_mut().find(|r| r.term_id == term_id) {
            Some(r) => r.weight += weight,
            None => out.push(ResolvedTerm { term_id, weight }),
        }
    }
    out.sort_by_key(|r| r.term_id);
    (out, unknown)
}

/// Converts integer channel sums to real scores.
#[derive(Debug, Clone, Copy)]
/// Converts exact channel sums to reals. Every scorer goes through this one
/// conversion, so bounds and scores round identically.
pub(crate) struct ChannelUnits {
    bm25: f64,
    learned: f64,
}

impl ChannelUnits {
    pub fn new(index: &InvertedIndex) -> Self {
        let s = index.scales();
        Self {
            bm25: 1.0 / (QUERY_WEIGHT_SCALE * s.bm25),
            learned: 1.0 / (QUERY_WEIGHT_SCALE * s.learned),
        }
    }

    #[inline]
    pub fn pair(&self, bm25: u64, learned: u64) -> ScorePair {
        ScorePair::new(bm25 as f64 * self.bm25, learned as f64 * self.learned)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDoc {
    pub doc: DocId,
    pub score: f64,
}

/// Why a range of documents was passed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipKind {
    /// Cursors jumped forward to the pivot: list maxima too small.
    Pivot,
    /// Block maxima at the pivot too small.
    Block,
    /// No pivot left: the remaining lists together cannot qualify.
    Exhausted,
}

/// One skip, recorded when auditing. Every document in `[first, end)`
/// has channel scores at most `bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipEvent {
    pub first: DocId,
    pub end: DocId,
    pub bound: ScorePair,
    pub kind: SkipKind,
    pub cause: SkipCause,
    /// Scaled thresholds at decision time (F_s * Theta_s, F_f * Theta_f).
    pub limit_s: f64,
    pub limit_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub doc: DocId,
    pub bound: ScorePair,
    pub score: ScorePair,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Audit {
    pub skips: Vec<SkipEvent>,
    pub evaluations: Vec<Evaluation>,
    /// (Theta_s, Theta_f) after each insertion.
    pub thresholds: Vec<(f64, f64)>,
    /// Insertions after which the two queues held different doc sets.
    pub set_mismatches: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryTrace {
    pub blocks_loaded: u64,
    pub blocks_total: u64,
    pub docs_evaluated: u64,
    pub skipped_by_s: u64,
    pub skipped_by_f: u64,
    pub unknown_terms: u64,
    /// Evaluated documents whose score exceeded the bound they were
    /// checked against, in either channel. Always zero for a sound index.
    pub bound_violations: u64,
    pub elapsed: Duration,
    pub results: Vec<ScoredDoc>,
    pub audit: Option<Audit>,
}

/// Runs the configured algorithm.
pub fn retrieve(
    index: &InvertedIndex,
    query: &Query,
    config: &RetrievalConfig,
) -> Result<(Vec<ScoredDoc>, QueryTrace), ConfigError> {
    config.validate()?;
    Ok(match config.algorithm {
        Algorithm::Exhaustive => exhaustive_topk(index, query, config.k, config.beta),
        Algorithm::BlockMax => traverse::blockmax_traverse(index, query, config.k, config.beta, 1.0, config.audit),
        Algorithm::BlockMaxOverest => {
            traverse::blockmax_traverse(index, query, config.k, config.beta, config.f_s, config.audit)
        }
        Algorithm::Dths => dths_traverse(index, query, config)?,
    })
}

#[cfg(test)]
mod tests;
