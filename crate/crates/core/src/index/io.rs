//! Index file format.
//!
//! ```text
//! "DSKI" | u32 version | u64 body length | body | u32 CRC32(body)
//! ```
//!
//! The body holds the header (corpus stats, BM25 parameters, scales, block
//! settings), the document table, the vocabulary with document
//! frequencies, then every posting list with its block summaries and
//! payloads. All integers are little-endian.

use super::{InvertedIndex, PartitionStrategy, PostingBlock, PostingList, Scales, TermId};
use crate::scoring::CorpusStats;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"DSKI";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("index file truncated")]
    Truncated,
    #[error("index checksum mismatch")]
    Checksum,
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, v: &[u8]) {
        self.u32(v.len() as u32);
        self.0.extend_from_slice(v);
    }
}

fn encode_body(index: &InvertedIndex) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    let s = &index.stats;
    w.u32(s.num_docs);
    w.f64(s.avg_doc_len);
    w.f64(index.k1);
    w.f64(index.b);
    w.f64(index.scales.bm25);
    w.f64(index.scales.learned);
    w.u32(index.block_target);
    w.u8(match index.partition {
        PartitionStrategy::Fixed => 0,
        PartitionStrategy::Variable => 1,
    });
    for (name, &len) in index.doc_names.iter().zip(&s.doc_len) {
        w.u32(len);
        w.bytes(name.as_bytes());
    }
    w.u32(index.terms.len() as u32);
    for (term, &df) in index.terms.iter().zip(&s.doc_freq) {
        w.bytes(term.as_bytes());
        w.u32(df);
    }
    for list in &index.lists {
        w.u32(list.doc_count);
        w.u16(list.list_max_bm25);
        w.u16(list.list_max_learned);
        w.u32(list.blocks.len() as u32);
        for b in &list.blocks {
            w.u32(b.max_doc_id);
            w.u16(b.max_bm25);
            w.u16(b.max_learned);
            w.u32(b.record_count);
            w.bytes(&b.payload);
        }
    }
    w.0
}

/// Serializes the whole index to `out`.
pub fn write_index<W: Write>(index: &InvertedIndex, mut out: W) -> std::io::Result<()> {
    let body = encode_body(index);
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(body.len() as u64).to_le_bytes())?;
    out.write_all(&body)?;
    out.write_all(&crc32fast::hash(&body).to_le_bytes())?;
    out.flush()
}

pub fn save_index(index: &InvertedIndex, path: impl AsRef<Path>) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_index(index, std::io::BufWriter::new(file))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LoadError> {
        let end = self.pos.checked_add(n).ok_or(LoadError::Truncated)?;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| LoadError::Corrupt("field runs past end of body".into()))?;
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, LoadError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, LoadError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, LoadError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, LoadError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bytes(&mut self) -> Result<&'a [u8], LoadError> {
        let n = self.u32()? as usize;
        self.take(n)
    }
    fn string(&mut self) -> Result<String, LoadError> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| LoadError::Corrupt("invalid utf-8".into()))
    }
}

fn decode_body(body: &[u8]) -> Result<InvertedIndex, LoadError> {
    let mut r = Reader { buf: body, pos: 0 };
    let num_docs = r.u32()?;
    let avg_doc_len = r.f64()?;
    let k1 = r.f64()?;
    let b = r.f64()?;
    let scales = Scales {
        bm25: r.f64()?,
        learned: r.f64()?,
    };
    let block_target = r.u32()?;
    let partition = match r.u8()? {
        0 => PartitionStrategy::Fixed,
        1 => PartitionStrategy::Variable,
        other => return Err(LoadError::Corrupt(format!("unknown partition tag {other}"))),
    };
    // Counts come from an untrusted file, so grow vectors as we go.
    let mut doc_names = Vec::new();
    let mut doc_len = Vec::new();
    for _ in 0..num_docs {
        doc_len.push(r.u32()?);
        doc_names.push(r.string()?);
    }
    let n_terms = r.u32()?;
    let mut terms = Vec::new();
    let mut doc_freq = Vec::new();
    for _ in 0..n_terms {
        terms.push(r.string()?);
        doc_freq.push(r.u32()?);
    }
    let mut lists = Vec::new();
    for term_id in 0..n_terms {
        let doc_count = r.u32()?;
        let list_max_bm25 = r.u16()?;
        let list_max_learned = r.u16()?;
        let n_blocks = r.u32()?;
        let mut blocks = Vec::new();
        for _ in 0..n_blocks {
            blocks.push(PostingBlock {
                max_doc_id: r.u32()?,
                max_bm25: r.u16()?,
                max_learned: r.u16()?,
                record_count: r.u32()?,
                payload: r.bytes()?.to_vec(),
            });
        }
        lists.push(PostingList {
            term_id: term_id as TermId,
            blocks,
            list_max_bm25,
            list_max_learned,
            doc_count,
        });
    }
    if r.pos != body.len() {
        return Err(LoadError::Corrupt("trailing bytes after posting data".into()));
    }
    let term_ids: HashMap<String, TermId> =
        terms.iter().enumerate().map(|(i, t)| (t.clone(), i as TermId)).collect();
    if term_ids.len() != terms.len() {
        return Err(LoadError::Corrupt("duplicate vocabulary entry".into()));
    }
    let index = InvertedIndex {
        terms,
        term_ids,
        doc_names,
        lists,
        stats: CorpusStats {
            num_docs,
            avg_doc_len,
            doc_len,
            doc_freq,
        },
        scales,
        k1,
        b,
        block_target,
        partition,
    };
    index.validate().map_err(LoadError::Corrupt)?;
    Ok(index)
}

pub fn read_index<R: Read>(mut input: R) -> Result<InvertedIndex, LoadError> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    if data.len() < 4 {
        return Err(LoadError::Truncated);
    }
    if &data[..4] != MAGIC {
        return Err(LoadError::BadMagic);
    }
    if data.len() < 16 {
        return Err(LoadError::Truncated);
    }
    let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(LoadError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let body_len = u64::from_le_bytes(data[8..16].try_into().unwrap());
    let expected = 16u64.checked_add(body_len).and_then(|n| n.checked_add(4));
    match expected {
        Some(n) if (data.len() as u64) < n => return Err(LoadError::Truncated),
        Some(n) if (data.len() as u64) > n => {
            return Err(LoadError::Corrupt("trailing bytes after checksum".into()))
        }
        None => return Err(LoadError::Truncated),
        _ => {}
    }
    let body = &data[16..data.len() - 4];
    let stored = u32::from_le_bytes(data[data.len() - 4..].try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(LoadError::Checksum);
    }
    decode_body(body)
}

pub fn load_index(path: impl AsRef<Path>) -> Result<InvertedIndex, LoadError> {
    let file = std::fs::File::open(path)?;
    read_index(std::io::BufReader::new(file))
}
