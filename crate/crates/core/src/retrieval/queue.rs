//! Top-k queues and the two-queue state used by dual-threshold skipping.

use super::config::{RetrievalConfig, ViewMode};
use crate::index::DocId;
use crate::scoring::{mix, ScorePair};
use std::cmp::Ordering;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

/// Queue entry ordered by rank: a greater entry ranks higher
/// (score descending, then doc id ascending).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranked {
    pub score: f64,
    pub doc: DocId,
}

impl Eq for Ranked {}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.doc.cmp(&self.doc))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Bounded top-k min-heap. Each document may be inserted at most once;
/// removals leave tombstones that are dropped when they reach the top.
#[derive(Debug, Clone)]
pub struct TopKQueue {
    capacity: usize,
    heap: BinaryHeap<Reverse<Ranked>>,
    dead: HashSet<(DocId, u64)>,
    theta: f64,
}

impl TopKQueue {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            capacity,
            heap: BinaryHeap::with_capacity(capacity + 1),
            dead: HashSet::new(),
            theta: 0.0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.heap.len() - self.dead.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// k-th largest score once the queue holds k entries, else 0.
    pub fn threshold(&self) -> f64 {
        self.theta
    }

    /// Drops tombstones from the top and recomputes the threshold.
    fn settle(&mut self) {
        if !self.dead.is_empty() {
            while let Some(Reverse(top)) = self.heap.peek() {
                if !self.dead.remove(&(top.doc, top.score.to_bits())) {
                    break;
                }
                self.heap.pop();
            }
        }
        self.theta = if self.len() >= self.capacity {
            self.heap.peek().map_or(0.0, |e| e.0.score)
        } else {
            0.0
        };
    }

    /// Lowest-ranked entry.
    pub fn lowest(&self) -> Option<Ranked> {
        self.heap.peek().map(|e| e.0)
    }

    fn live(&self) -> impl Iterator<Item = Ranked> + '_ {
        self.heap
            .iter()
            .map(|e| e.0)
            .filter(|e| !self.dead.contains(&(e.doc, e.score.to_bits())))
    }

    /// Linear scan; meant for checks, not the hot path.
    pub fn contains(&self, doc: DocId) -> bool {
        self.live().any(|e| e.doc == doc)
    }

    /// Unbounded insert of a document not already present; callers restore
    /// the capacity.
    pub fn insert(&mut self, doc: DocId, score: f64) {
        self.heap.push(Reverse(Ranked { score, doc }));
        self.settle();
    }

    /// Removes an entry with a known score.
    pub fn remove_entry(&mut self, entry: Ranked) {
        if self.heap.peek().is_some_and(|top| top.0 == entry) {
            self.heap.pop();
        } else {
            self.dead.insert((entry.doc, entry.score.to_bits()));
        }
        self.settle();
    }

    /// Removes `doc` by scanning for its score.
    pub fn remove(&mut self, doc: DocId) -> bool {
        let found = self.live().find(|e| e.doc == doc);
        match found {
            Some(e) => {
                self.remove_entry(e);
                true
            }
            None => false,
        }
    }

    /// Inserts and evicts the lowest entry if over capacity.
    pub fn push(&mut self, doc: DocId, score: f64) {
        let candidate = Ranked { score, doc };
        if self.len() >= self.capacity {
            if score < self.theta {
                return;
            }
            if self.lowest().is_some_and(|low| candidate < low) {
                return;
            }
            if self.dead.is_empty() {
                let mut top = self.heap.peek_mut().expect("full queue is non-empty");
                *top = Reverse(candidate);
            } else {
                self.heap.push(Reverse(candidate));
                let low = self.heap.pop().expect("non-empty").0;
                self.dead.remove(&(low.doc, low.score.to_bits()));
            }
        } else {
            self.heap.push(Reverse(candidate));
        }
        self.settle();
    }

    pub fn doc_ids(&self) -> BTreeSet<DocId> {
        self.live().map(|e| e.doc).collect()
    }

    /// Entries best-first.
    pub fn ranked(&self) -> Vec<Ranked> {
        let mut v: Vec<Ranked> = self.live().collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }
}

/// `q_s` ranks by the alpha mix (skip side), `q_f` by the beta mix (final).
#[derive(Debug, Clone)]
pub struct DualQueueState {
    pub q_s: TopKQueue,
    pub q_f: TopKQueue,
    /// Channel scores of queued documents, kept for the uniform view.
    pairs: HashMap<DocId, ScorePair>,
}

impl DualQueueState {
    pub fn new(k: usize) -> Self {
        Self {
            q_s: TopKQueue::new(k),
            q_f: TopKQueue::new(k),
            pairs: HashMap::new(),
        }
    }

    pub fn theta_s(&self) -> f64 {
        self.q_s.threshold()
    }

    pub fn theta_f(&self) -> f64 {
        self.q_f.threshold()
    }

    /// Adds a fully scored document to both queues, then trims each back
    /// to k. With `x` the lowest of `q_s` and `y` the lowest of `q_f`:
    /// `x == y` leaves both queues; otherwise the independent view drops
    /// `x` from `q_s` and `y` from `q_f`, and the uniform view drops `y`
    /// from both.
    pub fn insert(&mut self, doc: DocId, scores: ScorePair, alpha: f64, beta: f64, view: ViewMode) {
        if view == ViewMode::Independent {
            // Without coordination each queue just keeps its own top k,
            // which covers the x == y case as well.
            self.q_s.push(doc, mix(scores, alpha));
            self.q_f.push(doc, mix(scores, beta));
            return;
        }
        self.q_s.insert(doc, mix(scores, alpha));
        self.q_f.insert(doc, mix(scores, beta));
        self.pairs.insert(doc, scores);
        if self.q_f.len() <= self.q_f.capacity() {
            return;
        }
        // Both queues hold the same documents, so both are over capacity.
        let y = self.q_f.lowest().expect("over-capacity queue is non-empty");
        let pair = self.pairs.remove(&y.doc).expect("queued documents have scores");
        self.q_f.remove_entry(y);
        self.q_s.remove_entry(Ranked {
            score: mix(pair, alpha),
            doc: y.doc,
        });
    }
}

/// Free-function form of [`DualQueueState::insert`] driven by a config.
pub fn dual_insert(state: &mut DualQueueState, doc: DocId, scores: ScorePair, config: &RetrievalConfig) {
    state.insert(doc, scores, config.alpha, config.beta, config.view_mode);
}
