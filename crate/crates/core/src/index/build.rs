use super::{InvertedIndex, PartitionStrategy, PostingList, PostingRecord, Scales, TermId, VariableParams};
use crate::scoring::{self, bm25_weight, fit_scale, quantize_weight, CorpusStats, ScoringError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate document id '{0}'")]
    DuplicateDoc(String),
    #[error("document '{doc}': {message}")]
    BadWeight { doc: String, message: String },
    #[error("invalid build configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One corpus line: `{"id": .., "tf": {..}, "impact": {..}}`.
///
/// `text`, when present, is lowercased, split on whitespace and folded into
/// the term frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    #[serde(default)]
    pub tf: BTreeMap<String, u32>,
    #[serde(default)]
    pub impact: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl CorpusRecord {
    fn term_frequencies(&self) -> BTreeMap<String, u32> {
        let mut tf = self.tf.clone();
        if let Some(text) = &self.text {
            for tok in text.split_whitespace() {
                *tf.entry(tok.to_lowercase()).or_insert(0) += 1;
            }
        }
        tf
    }
}

/// Reads newline-delimited JSON records; blank lines are ignored.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusRecord>, BuildError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(&line).map_err(|e| BuildError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleChoice {
    /// Map each channel's maximum onto `u16::MAX`.
    Fit,
    Fixed { bm25: f64, learned: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildConfig {
    pub k1: f64,
    pub b: f64,
    pub block_size: usize,
    pub partition: PartitionStrategy,
    pub variable: VariableParams,
    pub scale: ScaleChoice,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            k1: scoring::DEFAULT_K1,
            b: scoring::DEFAULT_B,
            block_size: 128,
            partition: PartitionStrategy::Variable,
            variable: VariableParams::default(),
            scale: ScaleChoice::Fit,
        }
    }
}

impl BuildConfig {
    fn validate(&self) -> Result<(), BuildError> {
        if self.block_size == 0 {
            return Err(BuildError::Config("block size must be at least 1".into()));
        }
        if !(self.k1 > 0.0) || !(0.0..=1.0).contains(&self.b) {
            return Err(BuildError::Config(format!("k1={} b={}", self.k1, self.b)));
        }
        if !(0.0..1.0).contains(&self.variable.spread) || self.variable.slack < 0.0 {
            return Err(BuildError::Config("variable partition parameters out of range".into()));
        }
        Ok(())
    }
}

struct RawPosting {
    doc: u32,
    tf: u32,
    learned: f64,
}

pub fn build_index<I>(corpus: I, config: &BuildConfig) -> Result<InvertedIndex, BuildError>
where
    I: IntoIterator<Item = CorpusRecord>,
{
    config.validate()?;
    let mut seen = HashSet::new();
    let mut doc_names = Vec::new();
    let mut doc_len = Vec::new();
    let mut raw: BTreeMap<String, Vec<RawPosting>> = BTreeMap::new();

    for rec in corpus {
        if !seen.insert(rec.id.clone()) {
            return Err(BuildError::DuplicateDoc(rec.id));
        }
        let doc = u32::try_from(doc_names.len())
            .map_err(|_| BuildError::Config("too many documents".into()))?;
        let tf = rec.term_frequencies();
        for (term, &w) in &rec.impact {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(BuildError::BadWeight {
                    doc: rec.id.clone(),
                    message: format!("impact for '{term}' is {w}"),
                });
            }
        }
        let len: u64 = tf.values().map(|&v| u64::from(v)).sum();
        doc_len.push(u32::try_from(len).map_err(|_| BuildError::BadWeight {
            doc: rec.id.clone(),
            message: "document length overflows u32".into(),
        })?);

        let mut terms: Vec<&String> = tf.keys().chain(rec.impact.keys()).collect();
        terms.sort();
        terms.dedup();
        for term in terms {
            let t = tf.get(term).copied().unwrap_or(0);
            let l = rec.impact.get(term).copied().unwrap_or(0.0);
            if t == 0 && l == 0.0 {
                continue;
            }
            raw.entry(term.clone()).or_default().push(RawPosting { doc, tf: t, learned: l });
        }
        doc_names.push(rec.id);
    }

    let doc_freq: Vec<u32> = raw
        .values()
        .map(|ps| ps.iter().filter(|p| p.tf > 0).count() as u32)
        .collect();
    let stats = CorpusStats::new(doc_len, doc_freq);

    // Real-valued channel weights, in vocabulary order.
    let mut weights: Vec<Vec<(u32, f64, f64)>> = Vec::with_capacity(raw.len());
    let (mut max_b, mut max_l) = (0.0f64, 0.0f64);
    for (ti, postings) in raw.values().enumerate() {
        let df = stats.doc_freq[ti];
        let mut list = Vec::with_capacity(postings.len());
        for p in postings {
            let wb = if p.tf > 0 {
                bm25_weight(p.tf, df, stats.doc_len[p.doc as usize], &stats, config.k1, config.b)?
            } else {
                0.0
            };
            max_b = max_b.max(wb);
            max_l = max_l.max(p.learned);
            list.push((p.doc, wb, p.learned));
        }
        weights.push(list);
    }

    let scales = match config.scale {
        ScaleChoice::Fit => Scales {
            bm25: fit_scale(max_b),
            learned: fit_scale(max_l),
        },
        ScaleChoice::Fixed { bm25, learned } => Scales { bm25, learned },
    };

    let mut lists = Vec::with_capacity(weights.len());
    for (ti, list) in weights.iter().enumerate() {
        let records = list
            .iter()
            .map(|&(doc_id, wb, wl)| {
                Ok(PostingRecord {
                    doc_id,
                    w_bm25: quantize_weight(wb, scales.bm25)?,
                    w_learned: quantize_weight(wl, scales.learned)?,
                })
            })
            .collect::<Result<Vec<_>, ScoringError>>()?;
        lists.push(PostingList::from_records(
            ti as TermId,
            &records,
            config.partition,
            config.block_size,
            config.variable,
        ));
    }

    let terms: Vec<String> = raw.into_keys().collect();
    let term_ids: HashMap<String, TermId> =
        terms.iter().enumerate().map(|(i, t)| (t.clone(), i as TermId)).collect();

    Ok(InvertedIndex {
        terms,
        term_ids,
        doc_names,
        lists,
        stats,
        scales,
        k1: config.k1,
        b: config.b,
        block_target: config.block_size as u32,
        partition: config.partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, tf: &[(&str, u32)], impact: &[(&str, f64)]) -> CorpusRecord {
        CorpusRecord {
            id: id.into(),
            tf: tf.iter().map(|&(t, v)| (t.to_string(), v)).collect(),
            impact: impact.iter().map(|&(t, v)| (t.to_string(), v)).collect(),
            text: None,
        }
    }

    #[test]
    fn empty_corpus() {
        let idx = build_index(Vec::new(), &BuildConfig::default()).unwrap();
        assert_eq!(idx.num_docs(), 0);
        assert_eq!(idx.num_terms(), 0);
        assert!(idx.validate().is_ok());
    }

    #[test]
    fn one_document_from_text() {
        let rec = CorpusRecord {
            id: "d0".into(),
            tf: BTreeMap::new(),
            impact: [("a".to_string(), 5.0), ("b".to_string(), 2.0)].into_iter().collect(),
            text: Some("A a b".into()),
        };
        let cfg = BuildConfig {
            scale: ScaleChoice::Fixed { bm25: 1000.0, learned: 100.0 },
            ..BuildConfig::default()
        };
        let idx = build_index(vec![rec], &cfg).unwrap();
        // Hand-built expectation: N = 1, df = 1, dl = avgdl = 3, idf = ln(4/3).
        let idf = (4.0f64 / 3.0).ln();
        let bm = |tf: f64| idf * tf * 1.9 / (tf + 0.9);
        let q = |w: f64, s: f64| (w * s).round() as u16;
        let a = idx.posting_list(idx.term_id("a").unwrap()).decode_all().unwrap();
        let b = idx.posting_list(idx.term_id("b").unwrap()).decode_all().unwrap();
        assert_eq!(a, vec![PostingRecord { doc_id: 0, w_bm25: q(bm(2.0), 1000.0), w_learned: 500 }]);
        assert_eq!(b, vec![PostingRecord { doc_id: 0, w_bm25: q(bm(1.0), 1000.0), w_learned: 200 }]);
        assert_eq!(idx.stats().doc_len, vec![3]);
        assert_eq!(idx.doc_name(0), "d0");
    }

    #[test]
    fn expansion_only_term_has_zero_bm25() {
        let idx = build_index(
            vec![doc("d0", &[("a", 1)], &[("a", 1.0), ("x", 3.0)]), doc("d1", &[("a", 2)], &[])],
            &BuildConfig::default(),
        )
        .unwrap();
        let x = idx.posting_list(idx.term_id("x").unwrap()).decode_all().unwrap();
        assert_eq!(x.len(), 1);
        assert_eq!(x[0].w_bm25, 0);
        assert!(x[0].w_learned > 0);
        let a = idx.posting_list(idx.term_id("a").unwrap()).decode_all().unwrap();
        assert_eq!(a[1].w_learned, 0);
        assert!(a[1].w_bm25 > 0);
    }

    #[test]
    fn duplicate_doc_rejected() {
        let err = build_index(vec![doc("d", &[("a", 1)], &[]), doc("d", &[("b", 1)], &[])], &BuildConfig::default());
        assert!(matches!(err, Err(BuildError::DuplicateDoc(id)) if id == "d"));
    }

    #[test]
    fn negative_impact_rejected() {
        let err = build_index(vec![doc("d", &[], &[("a", -1.0)])], &BuildConfig::default());
        assert!(matches!(err, Err(BuildError::BadWeight { .. })));
    }

    #[test]
    fn malformed_line_is_named() {
        let input = "{\"id\":\"a\",\"tf\":{\"x\":1}}\n\n{\"id\": 3}\n";
        match read_corpus(input.as_bytes()) {
            Err(BuildError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_block_size_rejected() {
        let cfg = BuildConfig { block_size: 0, ..BuildConfig::default() };
        assert!(matches!(build_index(Vec::new(), &cfg), Err(BuildError::Config(_))));
    }
}
