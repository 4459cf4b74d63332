//! Top-k sparse retrieval over a dual-weight block-max inverted index.
//!
//! Every posting holds a BM25 weight and a learned weight. Dual-threshold
//! skipping bounds candidates with one mix of the two channels and ranks
//! them with another, keeping a top-k queue for each.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod harness;
pub mod index;
pub mod metrics;
pub mod retrieval;
pub mod scoring;

pub use index::{InvertedIndex, PostingBlock, PostingList, PostingRecord};
pub use retrieval::{Query, QueryTrace, RetrievalConfig, ScoredDoc};
pub use scoring::{CorpusStats, MixParams, QueryTerm, ScorePair};
