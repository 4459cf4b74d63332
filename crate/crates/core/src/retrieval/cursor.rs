//! Block-aware posting cursor.
//!
//! A cursor is either *exact* (positioned on a decoded record) or *lazy*
//! (its `doc` is only a lower bound for the next posting in `block`). Lazy
//! moves never decode, so skipped blocks are never loaded.

use crate::index::codec::decode_trusted;
use crate::index::{DocId, PostingBlock, PostingList, PostingRecord};

pub(crate) const END: DocId = DocId::MAX;

pub(crate) struct Cursor<'a> {
    blocks: &'a [PostingBlock],
    pub term_idx: usize,
    /// Fixed-point query weight.
    pub qw: u64,
    pub max_bm25: u64,
    pub max_learned: u64,
    block: usize,
    loaded: Option<usize>,
    buf: Vec<PostingRecord>,
    pos: usize,
    pub doc: DocId,
    pub exact: bool,
    pub blocks_loaded: u64,
}

impl<'a> Cursor<'a> {
    pub fn new(list: &'a PostingList, term_idx: usize, qw: u64) -> Self {
        Self {
            blocks: &list.blocks,
            term_idx,
            qw,
            max_bm25: qw * u64::from(list.list_max_bm25),
            max_learned: qw * u64::from(list.list_max_learned),
            block: 0,
            loaded: None,
            buf: Vec::new(),
            pos: 0,
            doc: if list.blocks.is_empty() { END } else { 0 },
            exact: false,
            blocks_loaded: 0,
        }
    }

    pub fn done(&self) -> bool {
        self.doc == END
    }

    /// Index of the block that would hold `target`, without moving.
    pub fn block_for(&self, target: DocId) -> Option<usize> {
        if self.block < self.blocks.len() && target <= self.blocks[self.block].max_doc_id {
            return Some(self.block);
        }
        let rest = &self.blocks[self.block..];
        let i = rest.partition_point(|b| b.max_doc_id < target);
        (i < rest.len()).then_some(self.block + i)
    }

    pub fn block(&self, i: usize) -> &'a PostingBlock {
        &self.blocks[i]
    }

    /// Scaled block maxima of block `i`.
    pub fn block_max(&self, i: usize) -> (u64, u64) {
        let b = &self.blocks[i];
        (self.qw * u64::from(b.max_bm25), self.qw * u64::from(b.max_learned))
    }

    /// Moves to the first posting `>= target` without decoding a new block.
    pub fn skip_to(&mut self, target: DocId) {
        if self.done() || target <= self.doc {
            return;
        }
        let Some(bi) = self.block_for(target) else {
            self.doc = END;
            self.exact = false;
            return;
        };
        if self.loaded == Some(bi) {
            self.block = bi;
            let start = if self.exact { self.pos } else { 0 };
            self.pos = gallop(&self.buf, start, target);
            self.doc = self.buf[self.pos].doc_id;
            self.exact = true;
        } else {
            self.block = bi;
            self.doc = target;
            self.exact = false;
        }
    }

    /// Resolves a lazy position by decoding its block.
    pub fn materialize(&mut self) {
        if self.exact || self.done() {
            return;
        }
        if self.loaded != Some(self.block) {
            // blocks are validated on build and load
            decode_trusted(&self.blocks[self.block].payload, &mut self.buf);
            self.loaded = Some(self.block);
            self.blocks_loaded += 1;
            self.pos = 0;
        }
        self.pos = gallop(&self.buf, self.pos, self.doc);
        self.doc = self.buf[self.pos].doc_id;
        self.exact = true;
    }

    pub fn next_geq(&mut self, target: DocId) {
        self.skip_to(target);
        self.materialize();
    }

    pub fn record(&self) -> PostingRecord {
        debug_assert!(self.exact);
        self.buf[self.pos]
    }

    /// Steps past the current posting; crossing into the next block is lazy.
    pub fn advance(&mut self) {
        debug_assert!(self.exact);
        if self.pos + 1 < self.buf.len() {
            self.pos += 1;
            self.doc = self.buf[self.pos].doc_id;
            return;
        }
        let boundary = self.blocks[self.block].max_doc_id;
        self.block += 1;
        self.exact = false;
        self.doc = if self.block >= self.blocks.len() || boundary == END - 1 {
            END
        } else {
            boundary + 1
        };
    }
}

/// First index `>= from` whose doc id is `>= target`; the caller
/// guarantees one exists. Probes 1, 2, 4, ... ahead, then bisects.
#[inline]
fn gallop(buf: &[PostingRecord], from: usize, target: DocId) -> usize {
    let mut lo = from;
    let mut step = 1;
    while lo + step < buf.len() && buf[lo + step].doc_id < target {
        lo += step;
        step *= 2;
    }
    if buf[lo].doc_id >= target {
        return lo;
    }
    let hi = (lo + step).min(buf.len());
    lo + 1 + buf[lo + 1..hi].partition_point(|r| r.doc_id < target)
}
