//! Block payload codec.
//!
//! Layout: `varint(count)`, then per record `varint(doc gap)`,
//! `varint(w_bm25)`, `varint(w_learned)`, then a little-endian CRC32 of
//! everything before it. The first gap is the absolute doc id.

use super::PostingRecord;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("payload truncated")]
    Truncated,
    #[error("payload checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("malformed payload: {0}")]
    Malformed(&'static str),
    #[error("records not strictly increasing by doc id")]
    Unsorted,
}

pub(crate) fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

pub(crate) fn get_varint(buf: &[u8], pos: &mut usize) -> Result<u64, CodecError> {
    let mut v = 0u64;
    let mut shift = 0u32;
    loop {
        let byte = *buf.get(*pos).ok_or(CodecError::Truncated)?;
        *pos += 1;
        if shift == 63 && byte > 1 {
            return Err(CodecError::Malformed("varint overflow"));
        }
        v |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Ok(v);
        }
        shift += 7;
        if shift > 63 {
            return Err(CodecError::Malformed("varint overflow"));
        }
    }
}

pub fn encode_block(records: &[PostingRecord]) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(4 + records.len() * 4);
    put_varint(&mut out, records.len() as u64);
    let mut prev: Option<u32> = None;
    for r in records {
        let gap = match prev {
            None => r.doc_id,
            Some(p) if r.doc_id > p => r.doc_id - p,
            Some(_) => return Err(CodecError::Unsorted),
        };
        put_varint(&mut out, u64::from(gap));
        put_varint(&mut out, u64::from(r.w_bm25));
        put_varint(&mut out, u64::from(r.w_learned));
        prev = Some(r.doc_id);
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn decode_block(payload: &[u8]) -> Result<Vec<PostingRecord>, CodecError> {
    let mut out = Vec::new();
    decode_block_into(payload, &mut out)?;
    Ok(out)
}

/// Decodes a block already checked by [`decode_block_into`], skipping the
/// checksum and structural checks. Panics on malformed input.
pub(crate) fn decode_trusted(payload: &[u8], out: &mut Vec<PostingRecord>) {
    #[inline(always)]
    fn varint(buf: &[u8], pos: &mut usize) -> u32 {
        let mut b = buf[*pos];
        *pos += 1;
        if b < 0x80 {
            return u32::from(b);
        }
        let mut v = u32::from(b & 0x7f);
        let mut shift = 7;
        loop {
            b = buf[*pos];
            *pos += 1;
            v |= u32::from(b & 0x7f) << shift;
            if b < 0x80 {
                return v;
            }
            shift += 7;
        }
    }
    let body = &payload[..payload.len() - 4];
    let mut pos = 0;
    let count = varint(body, &mut pos) as usize;
    out.clear();
    out.resize(count, PostingRecord { doc_id: 0, w_bm25: 0, w_learned: 0 });
    let mut doc = 0u32;
    for (i, r) in out.iter_mut().enumerate() {
        let gap = varint(body, &mut pos);
        doc = if i == 0 { gap } else { doc + gap };
        r.doc_id = doc;
        r.w_bm25 = varint(body, &mut pos) as u16;
        r.w_learned = varint(body, &mut pos) as u16;
    }
}

/// Decodes into `out` (cleared first) so cursors can reuse one buffer.
pub fn decode_block_into(payload: &[u8], out: &mut Vec<PostingRecord>) -> Result<(), CodecError> {
    out.clear();
    if payload.len() < 5 {
        return Err(CodecError::Truncated);
    }
    let (body, tail) = payload.split_at(payload.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4-byte tail"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(CodecError::Checksum { stored, computed });
    }
    let mut pos = 0;
    let count = get_varint(body, &mut pos)?;
    // every record takes at least three bytes
    if count > (body.len() as u64) / 3 + 1 {
        return Err(CodecError::Malformed("record count exceeds payload"));
    }
    out.reserve(count as usize);
    let mut doc: u64 = 0;
    for i in 0..count {
        let gap = get_varint(body, &mut pos)?;
        if i > 0 && gap == 0 {
            return Err(CodecError::Unsorted);
        }
        doc = if i == 0 { gap } else { doc + gap };
        let w_bm25 = get_varint(body, &mut pos)?;
        let w_learned = get_varint(body, &mut pos)?;
        if doc > u64::from(u32::MAX) {
            return Err(CodecError::Malformed("doc id overflow"));
        }
        if w_bm25 > u64::from(u16::MAX) || w_learned > u64::from(u16::MAX) {
            return Err(CodecError::Malformed("weight overflow"));
        }
        out.push(PostingRecord {
            doc_id: doc as u32,
            w_bm25: w_bm25 as u16,
            w_learned: w_learned as u16,
        });
    }
    if pos != body.len() {
        return Err(CodecError::Malformed("trailing bytes"));
    }
    Ok(())
}
