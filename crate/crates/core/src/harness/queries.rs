//! Query files: `qid<TAB>term[:weight] term[:weight] ...`

use super::HarnessError;
use crate::retrieval::Query;
use crate::scoring::QueryTerm;
use std::fmt::Write as _;

pub fn parse_queries(text: &str) -> Result<Vec<Query>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: &str| HarnessError::Parse {
            line: i + 1,
            message: message.to_string(),
        };
        let (qid, rest) = line.split_once('\t').ok_or_else(|| bad("missing tab after query id"))?;
        let qid = qid.trim();
        if qid.is_empty() {
            return Err(bad("empty query id"));
        }
        let mut terms = Vec::new();
        for tok in rest.split_whitespace() {
            let term = match tok.rsplit_once(':') {
                Some((t, w)) if !t.is_empty() => match w.parse::<f64>() {
                    Ok(w) if w >= 0.0 && w.is_finite() => QueryTerm::weighted(t, w),
                    Ok(_) => return Err(bad("query term weight must be a finite non-negative number")),
                    Err(_) => QueryTerm::new(tok),
                },
                _ => QueryTerm::new(tok),
            };
            terms.push(term);
        }
        out.push(Query {
            id: qid.to_string(),
            terms,
        });
    }
    Ok(out)
}

pub fn format_queries(queries: &[Query]) -> String {
    let mut s = String::new();
    for q in queries {
        s.push_str(&q.id);
        s.push('\t');
        for (i, t) in q.terms.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            if t.query_weight == 1.0 {
                s.push_str(&t.term);
            } else {
                write!(s, "{}:{}", t.term, t.query_weight).unwrap();
            }
        }
        s.push('\n');
    }
    s
}
