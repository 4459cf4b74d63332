//! Splitting a posting run into blocks.

use super::{codec, PostingBlock, PostingRecord};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionStrategy {
    Fixed,
    Variable,
}

impl std::str::FromStr for PartitionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(Self::Fixed),
            "variable" => Ok(Self::Variable),
            other => Err(format!("unknown partition strategy '{other}'")),
        }
    }
}

/// Knobs for variable-size blocks. Sizes stay within
/// `[target * (1 - spread), target * (1 + spread)]` except for a list's
/// final block; inside that window a block is closed as soon as taking the
/// next record would push `max - mean` of the learned channel above
/// `slack * list_max_learned`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableParams {
    pub spread: f64,
    pub slack: f64,
}

impl Default for VariableParams {
    fn default() -> Self {
        Self {
            spread: 0.15,
            slack: 0.3,
        }
    }
}

/// Returns block lengths (record counts) for `records`.
pub fn block_sizes(
    records: &[PostingRecord],
    strategy: PartitionStrategy,
    target_size: usize,
    params: VariableParams,
) -> Vec<usize> {
    assert!(target_size >= 1, "target block size must be positive");
    if records.is_empty() {
        return Vec::new();
    }
    match strategy {
        PartitionStrategy::Fixed => records.chunks(target_size).map(<[_]>::len).collect(),
        PartitionStrategy::Variable => variable_sizes(records, target_size, params),
    }
}

fn variable_sizes(records: &[PostingRecord], target: usize, params: VariableParams) -> Vec<usize> {
    let min = ((target as f64) * (1.0 - params.spread)).ceil().max(1.0) as usize;
    let max = (((target as f64) * (1.0 + params.spread)).floor() as usize).max(min);
    let list_max = records.iter().map(|r| r.w_learned).max().unwrap_or(0);
    let slack = params.slack * f64::from(list_max);

    let mut sizes = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let remaining = records.len() - start;
        if remaining <= max {
            sizes.push(remaining);
            break;
        }
        let mut block_max = 0u16;
        let mut sum = 0u64;
        let mut len = 0;
        while len < max {
            let w = records[start + len].w_learned;
            if len >= min {
                let next_max = block_max.max(w);
                let next_mean = (sum + u64::from(w)) as f64 / (len + 1) as f64;
                if f64::from(next_max) - next_mean > slack {
                    break;
                }
            }
            block_max = block_max.max(w);
            sum += u64::from(w);
            len += 1;
        }
        sizes.push(len);
        start += len;
    }
    sizes
}

/// Partitions and encodes a sorted record run.
pub fn partition_blocks(
    records: &[PostingRecord],
    strategy: PartitionStrategy,
    target_size: usize,
    params: VariableParams,
) -> Vec<PostingBlock> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for len in block_sizes(records, strategy, target_size, params) {
        let run = &records[start..start + len];
        start += len;
        blocks.push(PostingBlock {
            max_doc_id: run[run.len() - 1].doc_id,
            max_bm25: run.iter().map(|r| r.w_bm25).max().unwrap_or(0),
            max_learned: run.iter().map(|r| r.w_learned).max().unwrap_or(0),
            record_count: len as u32,
            payload: codec::encode_block(run).expect("records sorted by doc id"),
        });
    }
    blocks
}
