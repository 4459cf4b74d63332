//! TREC qrels and run files.

use super::MetricsError;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// query id -> (doc id -> grade)
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    pub judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn insert(&mut self, qid: &str, doc: &str, grade: u32) -> Result<(), MetricsError> {
        let q = self.judgments.entry(qid.to_string()).or_default();
        if q.insert(doc.to_string(), grade).is_some() {
            return Err(MetricsError::DuplicateJudgment {
                qid: qid.to_string(),
                doc: doc.to_string(),
            });
        }
        Ok(())
    }

    pub fn grade(&self, qid: &str, doc: &str) -> u32 {
        self.judgments
            .get(qid)
            .and_then(|q| q.get(doc))
            .copied()
            .unwrap_or(0)
    }

    pub fn relevant_count(&self, qid: &str) -> usize {
        self.judgments
            .get(qid)
            .map_or(0, |q| q.values().filter(|&&g| g >= 1).count())
    }

    /// Lines of `qid 0 docid grade`.
    pub fn parse(text: &str) -> Result<Self, MetricsError> {
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [qid, _, doc, grade] = fields[..] else {
                return Err(MetricsError::parse(i + 1, "expected 'qid 0 docid grade'"));
            };
            let grade: u32 = grade
                .parse()
                .map_err(|_| MetricsError::parse(i + 1, "grade must be a non-negative integer"))?;
            out.insert(qid, doc, grade).map_err(|e| MetricsError::parse(i + 1, &e.to_string()))?;
        }
        Ok(out)
    }

    pub fn to_trec(&self) -> String {
        let mut s = String::new();
        for (qid, docs) in &self.judgments {
            for (doc, grade) in docs {
                writeln!(s, "{qid} 0 {doc} {grade}").unwrap();
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub doc: String,
    pub score: f64,
    pub rank: u32,
}

/// query id -> ranked entries (rank 1 first)
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    pub queries: BTreeMap<String, Vec<RunEntry>>,
}

impl RunFile {
    /// Appends a ranked list, numbering ranks from 1.
    pub fn push_ranking<I, S>(&mut self, qid: &str, ranked: I)
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let entries = self.queries.entry(qid.to_string()).or_default();
        for (doc, score) in ranked {
            let rank = entries.len() as u32 + 1;
            entries.push(RunEntry {
                doc: doc.into(),
                score,
                rank,
            });
        }
    }

    /// Doc ids of the first `k` entries.
    pub fn top_k(&self, qid: &str, k: usize) -> impl Iterator<Item = &str> {
        self.queries
            .get(qid)
            .into_iter()
            .flat_map(move |v| v.iter().take(k).map(|e| e.doc.as_str()))
    }

    /// Lines of `qid Q0 docid rank score tag`.
    pub fn parse(text: &str) -> Result<Self, MetricsError> {
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [qid, _, doc, rank, score, _tag] = fields[..] else {
                return Err(MetricsError::parse(i + 1, "expected 'qid Q0 docid rank score tag'"));
            };
            let rank: u32 = rank
                .parse()
                .map_err(|_| MetricsError::parse(i + 1, "rank must be a positive integer"))?;
            let score: f64 = score
                .parse()
                .map_err(|_| MetricsError::parse(i + 1, "score must be a number"))?;
            out.queries.entry(qid.to_string()).or_default().push(RunEntry {
                doc: doc.to_string(),
                score,
                rank,
            });
        }
        for (qid, entries) in &mut out.queries {
            entries.sort_by_key(|e| e.rank);
            for (i, e) in entries.iter().enumerate() {
                if e.rank as usize != i + 1 {
                    return Err(MetricsError::BadRun(format!("query {qid}: ranks are not 1..n")));
                }
            }
            if entries.windows(2).any(|w| w[1].score > w[0].score) {
                return Err(MetricsError::BadRun(format!("query {qid}: scores increase with rank")));
            }
        }
        Ok(out)
    }

    pub fn to_trec(&self, tag: &str) -> String {
        let mut s = String::new();
        for (qid, entries) in &self.queries {
            for e in entries {
                writeln!(s, "{qid} Q0 {} {} {:.6} {tag}", e.doc, e.rank, e.score).unwrap();
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qrels_parse() {
        let q = Qrels::parse("1 0 a 2\n1 0 b 0\n\n2 0 c 1\n").unwrap();
        assert_eq!(q.grade("1", "a"), 2);
        assert_eq!(q.grade("1", "zz"), 0);
        assert_eq!(q.relevant_count("1"), 1);
        assert!(Qrels::parse("1 0 a\n").is_err());
        assert!(Qrels::parse("1 0 a -1\n").is_err());
        assert!(Qrels::parse("1 0 a 1\n1 0 a 2\n").is_err());
    }

    #[test]
    fn run_round_trip() {
        let mut run = RunFile::default();
        run.push_ranking("q1", [("a", 3.5), ("b", 1.25)]);
        run.push_ranking("q2", [("c", 0.5)]);
        let text = run.to_trec("tag");
        assert!(text.starts_with("q1 Q0 a 1 3.500000 tag\n"));
        assert_eq!(RunFile::parse(&text).unwrap(), run);
    }

    #[test]
    fn run_rejects_gaps_and_bad_order() {
        assert!(RunFile::parse("q Q0 a 1 2.0 t\nq Q0 b 3 1.0 t\n").is_err());
        assert!(RunFile::parse("q Q0 a 1 1.0 t\nq Q0 b 2 2.0 t\n").is_err());
        assert!(RunFile::parse("q Q0 a 1 x t\n").is_err());
    }
}
