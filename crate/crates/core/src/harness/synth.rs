//! Deterministic synthetic corpora with controllable weight skew.
//!
//! Term occurrence follows a Zipf law over the vocabulary. The BM25 channel
//! is driven through term frequencies drawn from a Beta shape (left-skewed
//! by default), the learned channel through impacts drawn from another Beta
//! shape (right-skewed by default). Relevance labels are planted per query
//! from the learned score plus Gaussian noise.

use super::HarnessError;
use crate::index::CorpusRecord;
use crate::metrics::Qrels;
use crate::retrieval::Query;
use crate::scoring::QueryTerm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, Zipf};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub num_docs: usize,
    pub vocab_size: usize,
    /// Mean number of distinct terms per document.
    pub doc_len_mean: usize,
    pub query_count: usize,
    /// Query lengths are uniform on `mean - 1 ..= mean + 1`.
    pub query_len_mean: usize,
    /// Beta(a, b) shape of learned impacts.
    pub learned_skew_shape: (f64, f64),
    /// Beta(a, b) shape driving term frequencies.
    pub tf_shape: (f64, f64),
    pub max_tf: u32,
    pub impact_scale: f64,
    /// Probability that an expansion slot adds an expansion-only term.
    pub expansion_rate: f64,
    pub zipf_exponent: f64,
    /// Weight of the shared per-posting factor in both channels.
    pub channel_correlation: f64,
    pub relevant_per_query: usize,
    /// Label noise, as a fraction of the query's best learned score.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_docs: 10_000,
            vocab_size: 2_000,
            doc_len_mean: 30,
            query_count: 500,
            query_len_mean: 5,
            learned_skew_shape: (2.0, 8.0),
            tf_shape: (8.0, 2.0),
            max_tf: 8,
            impact_scale: 100.0,
            expansion_rate: 0.3,
            zipf_exponent: 1.0,
            channel_correlation: 0.0,
            relevant_per_query: 3,
            label_noise: 0.1,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Spec(m.to_string()));
        if self.num_docs == 0 || self.vocab_size == 0 || self.doc_len_mean == 0 {
            return bad("document and vocabulary counts must be at least 1");
        }
        if self.query_count == 0 || self.query_len_mean == 0 || self.relevant_per_query == 0 {
            return bad("query counts must be at least 1");
        }
        if self.doc_len_mean * 3 / 2 + 1 > self.vocab_size {
            return bad("documents would need more distinct terms than the vocabulary has");
        }
        if self.query_len_mean + 1 > self.vocab_size {
            return bad("queries would need more distinct terms than the vocabulary has");
        }
        let (la, lb) = self.learned_skew_shape;
        let (ta, tb) = self.tf_shape;
        if !(la > 0.0 && lb > 0.0 && ta > 0.0 && tb > 0.0) {
            return bad("Beta parameters must be positive");
        }
        if !(0.0..=1.0).contains(&self.expansion_rate) || !(0.0..=1.0).contains(&self.channel_correlation) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.max_tf == 0 || !(self.impact_scale > 0.0) || !(self.zipf_exponent > 0.0) || self.label_noise < 0.0 {
            return bad("max_tf, impact_scale and zipf_exponent must be positive, label_noise non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub docs: Vec<CorpusRecord>,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
}

impl SynthCorpus {
    pub fn write_corpus<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for d in &self.docs {
            serde_json::to_writer(&mut out, d)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

fn term_name(rank: usize) -> String {
    format!("t{rank}")
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

pub fn generate_corpus(spec: &SynthSpec) -> Result<SynthCorpus, HarnessError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let zipf = Zipf::new(spec.vocab_size as f64, spec.zipf_exponent).map_err(|e| HarnessError::Spec(e.to_string()))?;
    let learned = Beta::new(spec.learned_skew_shape.0, spec.learned_skew_shape.1)
        .map_err(|e| HarnessError::Spec(e.to_string()))?;
    let tf_beta = Beta::new(spec.tf_shape.0, spec.tf_shape.1).map_err(|e| HarnessError::Spec(e.to_string()))?;
    let rho = spec.channel_correlation;

    let draw_rank = |rng: &mut ChaCha8Rng| zipf.sample(rng) as usize - 1;

    let lo = (spec.doc_len_mean / 2).max(1);
    let hi = spec.doc_len_mean + spec.doc_len_mean / 2;
    let expansion_slots = (spec.doc_len_mean / 4).max(1);
    let mut docs = Vec::with_capacity(spec.num_docs);
    for d in 0..spec.num_docs {
        let len = rng.random_range(lo..=hi);
        let mut terms = BTreeSet::new();
        while terms.len() < len {
            terms.insert(draw_rank(&mut rng));
        }
        let mut tf = BTreeMap::new();
        let mut impact = BTreeMap::new();
        for &t in &terms {
            // A shared factor couples the two channels when rho > 0.
            let shared: f64 = rng.random();
            let ut: f64 = tf_beta.sample(&mut rng);
            let ul: f64 = learned.sample(&mut rng);
            let ut = (1.0 - rho) * ut + rho * shared;
            let ul = (1.0 - rho) * ul + rho * shared;
            let f = 1 + (ut * f64::from(spec.max_tf - 1)).round() as u32;
            tf.insert(term_name(t), f);
            impact.insert(term_name(t), round3((ul * spec.impact_scale).max(0.001)));
        }
        for _ in 0..expansion_slots {
            if rng.random::<f64>() < spec.expansion_rate {
                let t = draw_rank(&mut rng);
                if !terms.contains(&t) {
                    let ul: f64 = learned.sample(&mut rng);
                    impact.insert(term_name(t), round3((ul * spec.impact_scale).max(0.001)));
                }
            }
        }
        docs.push(CorpusRecord {
            id: format!("D{d}"),
            tf,
            impact,
            text: None,
        });
    }

    // Skip the most frequent ranks, which behave like stop words.
    let stop = spec.vocab_size / 100;
    let mut queries = Vec::with_capacity(spec.query_count);
    for q in 0..spec.query_count {
        let len = rng
            .random_range(spec.query_len_mean.saturating_sub(1).max(1)..=spec.query_len_mean + 1)
            .min(spec.vocab_size - stop.min(spec.vocab_size - 1));
        let mut terms = BTreeSet::new();
        while terms.len() < len {
            let t = draw_rank(&mut rng);
            if t >= stop {
                terms.insert(t);
            }
        }
        let mut terms: Vec<usize> = terms.into_iter().collect();
        // random order within the query
        for i in (1..terms.len()).rev() {
            let j = rng.random_range(0..=i);
            terms.swap(i, j);
        }
        queries.push(Query {
            id: format!("Q{q}"),
            terms: terms.into_iter().map(|t| QueryTerm::new(term_name(t))).collect(),
        });
    }

    let qrels = plant_qrels(spec, &docs, &queries, &mut rng);
    Ok(SynthCorpus { docs, queries, qrels })
}

fn plant_qrels(spec: &SynthSpec, docs: &[CorpusRecord], queries: &[Query], rng: &mut ChaCha8Rng) -> Qrels {
    let mut postings: HashMap<&str, Vec<(usize, f64)>> = HashMap::new();
    for (d, doc) in docs.iter().enumerate() {
        for (t, &w) in &doc.impact {
            postings.entry(t.as_str()).or_default().push((d, w));
        }
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut qrels = Qrels::default();
    for q in queries {
        let mut score: BTreeMap<usize, f64> = BTreeMap::new();
        for t in &q.terms {
            for &(d, w) in postings.get(t.term.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
                *score.entry(d).or_default() += t.query_weight * w;
            }
        }
        let best = score.values().copied().fold(0.0, f64::max);
        let mut noisy: Vec<(f64, usize)> = score
            .into_iter()
            .map(|(d, s)| (s + spec.label_noise * best * normal.sample(rng), d))
            .collect();
        noisy.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (rank, &(_, d)) in noisy.iter().take(spec.relevant_per_query).enumerate() {
            let grade = if rank == 0 { 2 } else { 1 };
            qrels
                .insert(&q.id, &docs[d].id, grade)
                .expect("distinct documents per query");
        }
    }
    qrels
}
