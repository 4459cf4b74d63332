//! Term weights and the two linear score combinations.
//!
//! Every document carries two additive scores: one built from BM25 term
//! weights and one built from learned (impact) weights. Skipping compares a
//! combination of the two *bounds* against a threshold, while final ranking
//! uses a (possibly different) combination of the two *scores*.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("invalid corpus statistics: {0}")]
    InvalidStatistics(String),
    #[error("mixing weight {name}={value} outside [0, 1]")]
    MixOutOfRange { name: &'static str, value: f64 },
    #[error("negative weight {0} cannot be quantized")]
    NegativeWeight(f64),
    #[error("quantization scale must be positive, got {0}")]
    BadScale(f64),
}

/// Conventional passage-ranking BM25 defaults.
pub const DEFAULT_K1: f64 = 0.9;
pub const DEFAULT_B: f64 = 0.4;

/// Corpus-level inputs to the BM25 weight.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusStats {
    pub num_docs: u32,
    pub avg_doc_len: f64,
    pub doc_len: Vec<u32>,
    pub doc_freq: Vec<u32>,
}

impl CorpusStats {
    pub fn new(doc_len: Vec<u32>, doc_freq: Vec<u32>) -> Self {
        let num_docs = doc_len.len() as u32;
        let total: u64 = doc_len.iter().map(|&l| u64::from(l)).sum();
        // A corpus without any term frequencies still needs a positive
        // normaliser; no BM25 weight is ever computed for it.
        let avg_doc_len = if total == 0 {
            1.0
        } else {
            total as f64 / f64::from(num_docs)
        };
        Self {
            num_docs,
            avg_doc_len,
            doc_len,
            doc_freq,
        }
    }

    pub fn idf(&self, df: u32) -> f64 {
        let n = f64::from(self.num_docs);
        let df = f64::from(df);
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }
}

/// Robertson BM25 contribution of one term to one document.
pub fn bm25_weight(
    tf: u32,
    df: u32,
    dl: u32,
    stats: &CorpusStats,
    k1: f64,
    b: f64,
) -> Result<f64, ScoringError> {
    if df == 0 {
        return Err(ScoringError::InvalidStatistics("document frequency is zero".into()));
    }
    if dl == 0 {
        return Err(ScoringError::InvalidStatistics("document length is zero".into()));
    }
    if df > stats.num_docs {
        return Err(ScoringError::InvalidStatistics(format!(
            "document frequency {df} exceeds corpus size {}",
            stats.num_docs
        )));
    }
    if !(k1 > 0.0) || !(0.0..=1.0).contains(&b) || !(stats.avg_doc_len > 0.0) {
        return Err(ScoringError::InvalidStatistics(format!(
            "k1={k1}, b={b}, avgdl={}",
            stats.avg_doc_len
        )));
    }
    if tf == 0 {
        return Ok(0.0);
    }
    let tf = f64::from(tf);
    let norm = k1 * (1.0 - b + b * f64::from(dl) / stats.avg_doc_len);
    Ok(stats.idf(df) * tf * (k1 + 1.0) / (tf + norm))
}

/// A query term and its query-side weight `w_t` (1 unless stated).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTerm {
    pub term: String,
    pub query_weight: f64,
}

impl QueryTerm {
    pub fn new(term: impl Into<String>) -> Self {
        Self {
            term: term.into(),
            query_weight: 1.0,
        }
    }

    pub fn weighted(term: impl Into<String>, query_weight: f64) -> Self {
        Self {
            term: term.into(),
            query_weight,
        }
    }
}

/// One value per weight channel: either accumulated scores or upper bounds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScorePair {
    pub bm25: f64,
    pub learned: f64,
}

impl ScorePair {
    pub fn new(bm25: f64, learned: f64) -> Self {
        Self { bm25, learned }
    }

    /// Channel-wise `self <= other`.
    pub fn dominated_by(&self, other: &ScorePair) -> bool {
        self.bm25 <= other.bm25 && self.learned <= other.learned
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MixParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ScoringError> {
        check_unit("alpha", alpha)?;
        check_unit("beta", beta)?;
        Ok(Self { alpha, beta })
    }
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<(), ScoringError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ScoringError::MixOutOfRange { name, value })
    }
}

/// `gamma * bm25 + (1 - gamma) * learned`. For finite non-negative channels
/// the endpoints return a channel exactly (one product is zero), and the
/// mix is monotone in both channels under IEEE rounding, which is what keeps
/// mixed scores below mixed bounds.
#[inline]
pub(crate) fn mix(pair: ScorePair, gamma: f64) -> f64 {
    gamma * pair.bm25 + (1.0 - gamma) * pair.learned
}

/// Skip-side bound: `alpha * Bound_B + (1 - alpha) * Bound_L`.
pub fn mix_bound(bounds: ScorePair, alpha: f64) -> Result<f64, ScoringError> {
    check_unit("alpha", alpha)?;
    Ok(mix(bounds, alpha))
}

/// Final rank score: `beta * RankScore_B + (1 - beta) * RankScore_L`.
pub fn mix_score(scores: ScorePair, beta: f64) -> Result<f64, ScoringError> {
    check_unit("beta", beta)?;
    Ok(mix(scores, beta))
}

/// Round to fixed point, clamped to the u16 range.
pub fn quantize_weight(w: f64, scale: f64) -> Result<u16, ScoringError> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(ScoringError::BadScale(scale));
    }
    if w < 0.0 || w.is_nan() {
        return Err(ScoringError::NegativeWeight(w));
    }
    let q = (w * scale).round();
    Ok(q.min(f64::from(u16::MAX)) as u16)
}

pub fn dequantize_weight(q: u16, scale: f64) -> f64 {
    f64::from(q) / scale
}

/// Picks the scale that maps `max_weight` onto the top of the u16 range.
pub fn fit_scale(max_weight: f64) -> f64 {
    if max_weight > 0.0 {
        f64::from(u16::MAX) / max_weight
    } else {
        1.0
    }
}
