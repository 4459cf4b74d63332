//! Relevance and efficiency measurements.

mod trec;

pub use trec::{Qrels, RunEntry, RunFile};

use std::collections::BTreeSet;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate judgment for query {qid}, document {doc}")]
    DuplicateJudgment { qid: String, doc: String },
    #[error("invalid run: {0}")]
    BadRun(String),
    #[error("runs cover different queries (only in first: {only_a:?}; only in second: {only_b:?})")]
    QueryMismatch { only_a: Vec<String>, only_b: Vec<String> },
    #[error("skewness undefined: {0}")]
    UndefinedSkewness(&'static str),
    #[error("cannot summarise an empty latency sample")]
    EmptySample,
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
}

impl MetricsError {
    pub(crate) fn parse(line: usize, message: &str) -> Self {
        Self::Parse {
            line,
            message: message.to_string(),
        }
    }
}

/// Queries present in one file but not the other, as human-readable lines.
pub fn coverage_warnings(run: &RunFile, qrels: &Qrels) -> Vec<String> {
    let mut out = Vec::new();
    for qid in run.queries.keys() {
        if !qrels.judgments.contains_key(qid) {
            out.push(format!("query {qid} has no judgments; it scores 0"));
        }
    }
    for qid in qrels.judgments.keys() {
        if !run.queries.contains_key(qid) {
            out.push(format!("query {qid} is judged but absent from the run"));
        }
    }
    out
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean reciprocal rank of the first doc with grade >= 1 within `cutoff`,
/// over the run's queries.
pub fn mrr_at(run: &RunFile, qrels: &Qrels, cutoff: usize) -> Result<f64, MetricsError> {
    if cutoff == 0 {
        return Err(MetricsError::ZeroCutoff);
    }
    Ok(mean(run.queries.keys().map(|qid| {
        run.top_k(qid, cutoff)
            .position(|d| qrels.grade(qid, d) >= 1)
            .map_or(0.0, |i| 1.0 / (i + 1) as f64)
    })))
}

fn dcg(grades: impl IntoIterator<Item = u32>) -> f64 {
    grades
        .into_iter()
        .enumerate()
        .map(|(i, g)| ((1u64 << g.min(62)) - 1) as f64 / ((i + 2) as f64).log2())
        .sum()
}

/// NDCG with gain `2^grade - 1` and discount `log2(rank + 1)`.
pub fn ndcg_at(run: &RunFile, qrels: &Qrels, cutoff: usize) -> Result<f64, MetricsError> {
    if cutoff == 0 {
        return Err(MetricsError::ZeroCutoff);
    }
    Ok(mean(run.queries.keys().map(|qid| {
        let mut ideal: Vec<u32> = qrels
            .judgments
            .get(qid)
            .map(|q| q.values().copied().collect())
            .unwrap_or_default();
        ideal.sort_unstable_by(|a, b| b.cmp(a));
        ideal.truncate(cutoff);
        let idcg = dcg(ideal);
        if idcg == 0.0 {
            return 0.0;
        }
        dcg(run.top_k(qid, cutoff).map(|d| qrels.grade(qid, d))) / idcg
    })))
}

/// Per-query fraction of relevant docs found in the top `k`, averaged over
/// run queries that have at least one relevant judgment.
pub fn recall_at(run: &RunFile, qrels: &Qrels, k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::ZeroCutoff);
    }
    Ok(mean(run.queries.keys().filter_map(|qid| {
        let relevant = qrels.relevant_count(qid);
        (relevant > 0).then(|| {
            let hit = run.top_k(qid, k).filter(|d| qrels.grade(qid, d) >= 1).count();
            hit as f64 / relevant as f64
        })
    })))
}

/// Mean over queries of `|top-k(a) ∩ top-k(b)|` divided by the size of
/// `b`'s top-k list (k when `b` is full).
pub fn overlap_ratio(run_a: &RunFile, run_b: &RunFile, k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::ZeroCutoff);
    }
    let qa: BTreeSet<&String> = run_a.queries.keys().collect();
    let qb: BTreeSet<&String> = run_b.queries.keys().collect();
    if qa != qb {
        return Err(MetricsError::QueryMismatch {
            only_a: qa.difference(&qb).map(|s| s.to_string()).collect(),
            only_b: qb.difference(&qa).map(|s| s.to_string()).collect(),
        });
    }
    Ok(mean(qa.into_iter().map(|qid| {
        let b: BTreeSet<&str> = run_b.top_k(qid, k).collect();
        let a: BTreeSet<&str> = run_a.top_k(qid, k).collect();
        if b.is_empty() {
            return if a.is_empty() { 1.0 } else { 0.0 };
        }
        a.intersection(&b).count() as f64 / b.len() as f64
    })))
}

/// Fisher-Pearson coefficient `g1 = m3 / m2^(3/2)` with biased moments.
pub fn skewness(sample: &[f64]) -> Result<f64, MetricsError> {
    if sample.len() < 3 {
        return Err(MetricsError::UndefinedSkewness("fewer than three values"));
    }
    let n = sample.len() as f64;
    let mu = sample.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &x in sample {
        let d = x - mu;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 <= f64::EPSILON * mu.abs().max(1.0).powi(2) {
        return Err(MetricsError::UndefinedSkewness("zero variance"));
    }
    Ok(m3 / m2.powf(1.5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencySummary {
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub count: usize,
}

/// Mean and nearest-rank 95th percentile.
pub fn latency_summary(times: &[Duration]) -> Result<LatencySummary, MetricsError> {
    if times.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let mut ms: Vec<f64> = times.iter().map(|t| t.as_secs_f64() * 1e3).collect();
    ms.sort_by(f64::total_cmp);
    let n = ms.len();
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    Ok(LatencySummary {
        mean_ms: ms.iter().sum::<f64>() / n as f64,
        p95_ms: ms[rank - 1],
        count: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(lists: &[(&str, &[&str])]) -> RunFile {
        let mut r = RunFile::default();
        for (qid, docs) in lists {
            let n = docs.len() as f64;
            r.push_ranking(qid, docs.iter().enumerate().map(|(i, d)| (*d, n - i as f64)));
        }
        r
    }

    fn qrels(rows: &[(&str, &str, u32)]) -> Qrels {
        let mut q = Qrels::default();
        for (qid, doc, g) in rows {
            q.insert(qid, doc, *g).unwrap();
        }
        q
    }

    #[test]
    fn mrr_examples() {
        let q = qrels(&[("1", "c", 1), ("2", "a", 1), ("3", "b", 2)]);
        assert!((mrr_at(&run(&[("1", &["a", "b", "c"])]), &q, 10).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(mrr_at(&run(&[("1", &["a", "b", "c"])]), &q, 2).unwrap(), 0.0);
        let two = run(&[("2", &["a", "x"]), ("3", &["x", "b"])]);
        assert_eq!(mrr_at(&two, &q, 10).unwrap(), 0.75);
        assert_eq!(mrr_at(&two, &q, 0), Err(MetricsError::ZeroCutoff));
    }

    #[test]
    fn ndcg_examples() {
        let q = qrels(&[("1", "a", 3), ("1", "b", 0), ("1", "c", 2)]);
        let got = ndcg_at(&run(&[("1", &["a", "b", "c"])]), &q, 10).unwrap();
        let idcg = 7.0 + 3.0 / 3f64.log2();
        assert!((got - 8.5 / idcg).abs() < 1e-12);
        assert!((got - 0.955_830_589_346_18).abs() < 1e-6);
        assert!((ndcg_at(&run(&[("1", &["a", "c", "b"])]), &q, 10).unwrap() - 1.0).abs() < 1e-12);
        let zero = qrels(&[("1", "a", 0)]);
        assert_eq!(ndcg_at(&run(&[("1", &["a"])]), &zero, 10).unwrap(), 0.0);
    }

    #[test]
    fn recall_examples() {
        let q = qrels(&[("1", "a", 1), ("1", "b", 1), ("2", "z", 0)]);
        assert_eq!(recall_at(&run(&[("1", &["b", "x", "a"])]), &q, 10).unwrap(), 1.0);
        assert_eq!(recall_at(&run(&[("1", &["b", "x", "a"])]), &q, 2).unwrap(), 0.5);
        // query 2 has no relevant docs and is left out of the mean
        assert_eq!(recall_at(&run(&[("1", &["a", "b"]), ("2", &["z"])]), &q, 10).unwrap(), 1.0);
    }

    #[test]
    fn overlap_examples() {
        let a = run(&[("1", &["a", "b"]), ("2", &["c", "d"]), ("3", &["e", "f"])]);
        assert_eq!(overlap_ratio(&a, &a, 2).unwrap(), 1.0);
        let disjoint = run(&[("1", &["x", "y"]), ("2", &["x", "y"]), ("3", &["x", "y"])]);
        assert_eq!(overlap_ratio(&a, &disjoint, 2).unwrap(), 0.0);
        let partial = run(&[("1", &["b", "z"]), ("2", &["d", "c"]), ("3", &["q", "r"])]);
        // brute-force intersections: 1, 2, 0 out of 2
        assert!((overlap_ratio(&a, &partial, 2).unwrap() - 0.5).abs() < 1e-12);
        let missing = run(&[("1", &["a"]), ("4", &["a"])]);
        match overlap_ratio(&a, &missing, 2) {
            Err(MetricsError::QueryMismatch { only_a, only_b }) => {
                assert_eq!(only_a, vec!["2", "3"]);
                assert_eq!(only_b, vec!["4"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn skewness_examples() {
        assert!(skewness(&[1.0, 2.0, 3.0]).unwrap().abs() < 1e-15);
        assert!(skewness(&[1.0, 1.0, 1.0, 10.0]).unwrap() > 0.0);
        assert!(skewness(&[5.0, 5.0, 5.0]).is_err());
        assert!(skewness(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn latency_examples() {
        let ms = |v: &[u64]| v.iter().map(|&x| Duration::from_millis(x)).collect::<Vec<_>>();
        let s = latency_summary(&ms(&[10])).unwrap();
        assert_eq!((s.mean_ms, s.p95_ms), (10.0, 10.0));
        let s = latency_summary(&ms(&(1..=100).collect::<Vec<_>>())).unwrap();
        assert_eq!(s.p95_ms, 95.0);
        let s = latency_summary(&ms(&[5, 5, 5, 5, 100])).unwrap();
        assert_eq!((s.mean_ms, s.p95_ms), (24.0, 100.0));
        assert_eq!(latency_summary(&[]), Err(MetricsError::EmptySample));
    }

    #[test]
    fn coverage_flags_both_directions() {
        let w = coverage_warnings(&run(&[("1", &["a"])]), &qrels(&[("2", "a", 1)]));
        assert_eq!(w.len(), 2);
    }

    proptest! {
        #[test]
        fn skewness_affine_invariant(
            v in proptest::collection::vec(0.0f64..100.0, 3..60),
            scale in 0.01f64..100.0,
            shift in -50.0f64..50.0,
        ) {
            if let Ok(g) = skewness(&v) {
                let t: Vec<f64> = v.iter().map(|x| x * scale + shift).collect();
                let h = skewness(&t).unwrap();
                prop_assert!((g - h).abs() < 1e-6 * (1.0 + g.abs()));
            }
        }

        #[test]
        fn recall_monotone_in_k(order in Just((0..20).collect::<Vec<u32>>()).prop_shuffle(), rel in proptest::collection::btree_set(0u32..20, 1..6)) {
            let docs: Vec<String> = order.iter().map(|d| format!("d{d}")).collect();
            let mut r = RunFile::default();
            r.push_ranking("q", docs.iter().enumerate().map(|(i, d)| (d.clone(), 100.0 - i as f64)));
            let mut q = Qrels::default();
            for d in &rel { q.insert("q", &format!("d{d}"), 1).unwrap(); }
            let mut prev = 0.0;
            for k in 1..=20 {
                let v = recall_at(&r, &q, k).unwrap();
                prop_assert!(v >= prev && (0.0..=1.0).contains(&v));
                prev = v;
            }
        }

        #[test]
        fn ndcg_depends_only_on_rank(grades in proptest::collection::vec(0u32..4, 1..15), bump in 0.5f64..10.0) {
            let mut q = Qrels::default();
            for (i, g) in grades.iter().enumerate() { q.insert("q", &format!("d{i}"), *g).unwrap(); }
            let mut a = RunFile::default();
            a.push_ranking("q", (0..grades.len()).map(|i| (format!("d{i}"), (grades.len() - i) as f64)));
            let mut b = RunFile::default();
            b.push_ranking("q", (0..grades.len()).map(|i| (format!("d{i}"), ((grades.len() - i) as f64).powf(bump) + 3.0)));
            let x = ndcg_at(&a, &q, 10).unwrap();
            prop_assert_eq!(x, ndcg_at(&b, &q, 10).unwrap());
            prop_assert!((0.0..=1.0 + 1e-12).contains(&x));
        }
    }
}
