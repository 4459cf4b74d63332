//! Dual-weight block-max inverted index.
//!
//! Every posting carries two quantized weights, one per score channel, and
//! every block stores the maximum of each channel so both bounds can be
//! computed without decoding.

mod build;
pub mod codec;
mod io;
pub mod partition;

pub use build::{build_index, read_corpus, BuildConfig, BuildError, CorpusRecord, ScaleChoice};
pub use codec::{decode_block, decode_block_into, encode_block, CodecError};
pub use io::{load_index, read_index, save_index, write_index, LoadError, FORMAT_VERSION, MAGIC};
pub use partition::{partition_blocks, PartitionStrategy, VariableParams};

use crate::scoring::{dequantize_weight, CorpusStats};
use std::collections::HashMap;

pub type DocId = u32;
pub type TermId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PostingRecord {
    pub doc_id: DocId,
    pub w_bm25: u16,
    pub w_learned: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostingBlock {
    pub max_doc_id: DocId,
    pub max_bm25: u16,
    pub max_learned: u16,
    pub record_count: u32,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostingList {
    pub term_id: TermId,
    pub blocks: Vec<PostingBlock>,
    pub list_max_bm25: u16,
    pub list_max_learned: u16,
    pub doc_count: u32,
}

impl PostingList {
    pub fn from_records(
        term_id: TermId,
        records: &[PostingRecord],
        strategy: PartitionStrategy,
        target_size: usize,
        params: VariableParams,
    ) -> Self {
        let blocks = partition_blocks(records, strategy, target_size, params);
        Self {
            term_id,
            list_max_bm25: blocks.iter().map(|b| b.max_bm25).max().unwrap_or(0),
            list_max_learned: blocks.iter().map(|b| b.max_learned).max().unwrap_or(0),
            doc_count: records.len() as u32,
            blocks,
        }
    }

    /// Fully decodes the list. Blocks are validated when the index is built
    /// or loaded, so a failure here is an internal error.
    pub fn decode_all(&self) -> Result<Vec<PostingRecord>, CodecError> {
        let mut out = Vec::with_capacity(self.doc_count as usize);
        let mut buf = Vec::new();
        for block in &self.blocks {
            decode_block_into(&block.payload, &mut buf)?;
            out.extend_from_slice(&buf);
        }
        Ok(out)
    }
}

/// Per-channel quantization scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub bm25: f64,
    pub learned: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    pub(crate) terms: Vec<String>,
    pub(crate) term_ids: HashMap<String, TermId>,
    pub(crate) doc_names: Vec<String>,
    pub(crate) lists: Vec<PostingList>,
    pub(crate) stats: CorpusStats,
    pub(crate) scales: Scales,
    pub(crate) k1: f64,
    pub(crate) b: f64,
    pub(crate) block_target: u32,
    pub(crate) partition: PartitionStrategy,
}

impl InvertedIndex {
    pub fn num_docs(&self) -> u32 {
        self.stats.num_docs
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn num_postings(&self) -> u64 {
        self.lists.iter().map(|l| u64::from(l.doc_count)).sum()
    }

    pub fn num_blocks(&self) -> u64 {
        self.lists.iter().map(|l| l.blocks.len() as u64).sum()
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn scales(&self) -> Scales {
        self.scales
    }

    pub fn bm25_params(&self) -> (f64, f64) {
        (self.k1, self.b)
    }

    pub fn block_target(&self) -> u32 {
        self.block_target
    }

    pub fn partition(&self) -> PartitionStrategy {
        self.partition
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.term_ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> impl Iterator<Item = (TermId, &str)> {
        self.terms.iter().enumerate().map(|(i, t)| (i as TermId, t.as_str()))
    }

    pub fn posting_list(&self, id: TermId) -> &PostingList {
        &self.lists[id as usize]
    }

    pub fn doc_name(&self, doc: DocId) -> &str {
        &self.doc_names[doc as usize]
    }

    pub fn doc_names(&self) -> &[String] {
        &self.doc_names
    }

    pub fn dequantize_bm25(&self, q: u16) -> f64 {
        dequantize_weight(q, self.scales.bm25)
    }

    pub fn dequantize_learned(&self, q: u16) -> f64 {
        dequantize_weight(q, self.scales.learned)
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.terms.len() != self.lists.len() {
            return Err("vocabulary and posting lists differ in length".into());
        }
        if self.doc_names.len() != self.stats.num_docs as usize
            || self.stats.doc_len.len() != self.stats.num_docs as usize
        {
            return Err("document table does not match num_docs".into());
        }
        if self.stats.doc_freq.len() != self.terms.len() {
            return Err("document frequencies do not match vocabulary".into());
        }
        let mut buf = Vec::new();
        for (i, list) in self.lists.iter().enumerate() {
            if list.term_id as usize != i {
                return Err(format!("posting list {i} carries term id {}", list.term_id));
            }
            let mut prev: Option<DocId> = None;
            let mut count = 0u32;
            let (mut lb, mut ll) = (0u16, 0u16);
            for block in &list.blocks {
                decode_block_into(&block.payload, &mut buf)
                    .map_err(|e| format!("term {}: {e}", self.terms[i]))?;
                if buf.is_empty() || buf.len() != block.record_count as usize {
                    return Err(format!("term {}: block record count mismatch", self.terms[i]));
                }
                if prev.is_some_and(|p| buf[0].doc_id <= p) {
                    return Err(format!("term {}: blocks out of order", self.terms[i]));
                }
                let (mut mb, mut ml) = (0u16, 0u16);
                for r in &buf {
                    if r.doc_id >= self.stats.num_docs {
                        return Err(format!("term {}: doc id {} out of range", self.terms[i], r.doc_id));
                    }
                    mb = mb.max(r.w_bm25);
                    ml = ml.max(r.w_learned);
                }
                let last = buf[buf.len() - 1].doc_id;
                if mb != block.max_bm25 || ml != block.max_learned || last != block.max_doc_id {
                    return Err(format!("term {}: block summary disagrees with payload", self.terms[i]));
                }
                lb = lb.max(mb);
                ll = ll.max(ml);
                prev = Some(last);
                count += block.record_count;
            }
            if count != list.doc_count || lb != list.list_max_bm25 || ll != list.list_max_learned {
                return Err(format!("term {}: list summary disagrees with blocks", self.terms[i]));
            }
        }
        Ok(())
    }
}
