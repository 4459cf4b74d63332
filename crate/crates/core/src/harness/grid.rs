//! Batch experiments over a grid of retrieval configurations.

use super::HarnessError;
use crate::index::InvertedIndex;
use crate::metrics::{self, latency_summary, Qrels, RunFile};
use crate::retrieval::{retrieve, Algorithm, Query, QueryTrace, RetrievalConfig, ScoredDoc, SkipMode, ViewMode};
use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub label: String,
    pub config: RetrievalConfig,
}

impl GridConfig {
    pub fn new(label: impl Into<String>, config: RetrievalConfig) -> Self {
        Self {
            label: label.into(),
            config,
        }
    }
}

impl FromStr for GridConfig {
    type Err = HarnessError;

    /// `label=name,algo=dths,alpha=0.9,beta=0.2,fs=1,ff=1,skip=dt,view=independent,k=1000`;
    /// omitted keys keep the defaults.
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        let mut config = RetrievalConfig::default();
        let mut label = None;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| HarnessError::Spec(format!("expected key=value, got '{part}'")))?;
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| HarnessError::Spec(format!("{key}: '{v}' is not a number")))
            };
            let cfg_err = |e: crate::retrieval::ConfigError| HarnessError::Spec(e.to_string());
            match key {
                "label" => label = Some(value.to_string()),
                "algo" => config.algorithm = value.parse::<Algorithm>().map_err(cfg_err)?,
                "alpha" => config.alpha = num(value)?,
                "beta" => config.beta = num(value)?,
                "fs" => config.f_s = num(value)?,
                "ff" => config.f_f = num(value)?,
                "skip" => config.skip_mode = value.parse::<SkipMode>().map_err(cfg_err)?,
                "view" => config.view_mode = value.parse::<ViewMode>().map_err(cfg_err)?,
                "k" => {
                    config.k = value
                        .parse()
                        .map_err(|_| HarnessError::Spec(format!("k: '{value}' is not a count")))?
                }
                other => return Err(HarnessError::Spec(format!("unknown grid key '{other}'"))),
            }
        }
        config.validate().map_err(|e| HarnessError::Spec(e.to_string()))?;
        Ok(Self {
            label: label.unwrap_or_else(|| s.to_string()),
            config,
        })
    }
}

/// The rows of the design-option comparison: baselines, DTHS variations
/// and the over-estimation sweep.
pub fn design_option_grid(k: usize) -> Vec<GridConfig> {
    let d = RetrievalConfig::dths(k, 0.9, 0.2);
    let row = |label: &str, config: RetrievalConfig| GridConfig::new(label, config);
    vec![
        row("bm25 blockmax", RetrievalConfig::blockmax(k, 1.0)),
        row("learned blockmax", RetrievalConfig::blockmax(k, 0.0)),
        row("learned blockmax F=1.7", RetrievalConfig::overest(k, 0.0, 1.7)),
        row("a=1 b=0 ST", RetrievalConfig { alpha: 1.0, beta: 0.0, skip_mode: SkipMode::Single, ..d }),
        row("a=1 b=0", RetrievalConfig { alpha: 1.0, beta: 0.0, ..d }),
        row("a=1 b=0 uniform", RetrievalConfig { alpha: 1.0, beta: 0.0, view_mode: ViewMode::Uniform, ..d }),
        row("a=0.9 b=0", RetrievalConfig { beta: 0.0, ..d }),
        row("a=b=0.2", RetrievalConfig { alpha: 0.2, ..d }),
        row("a=0.9 b=0.2 uniform", RetrievalConfig { view_mode: ViewMode::Uniform, ..d }),
        row("default", d),
        row("Fs=1.3", RetrievalConfig { f_s: 1.3, ..d }),
        row("Fs=1.5", RetrievalConfig { f_s: 1.5, ..d }),
        row("Fs=1.7", RetrievalConfig { f_s: 1.7, ..d }),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub config: RetrievalConfig,
    pub mrr_at_10: f64,
    pub ndcg_at_10: f64,
    pub recall_at_k: f64,
    /// Against the exhaustive ranking with the row's beta.
    pub overlap: f64,
    pub blocks_loaded: u64,
    pub blocks_total: u64,
    pub docs_evaluated: u64,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub traces: Vec<(String, QueryTrace)>,
}

impl ReportRow {
    pub fn bload(&self) -> f64 {
        if self.blocks_total == 0 {
            0.0
        } else {
            self.blocks_loaded as f64 / self.blocks_total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

const CSV_HEADER: &str = "label,algo,k,alpha,beta,fs,ff,skip,view,mrr@10,ndcg@10,recall@k,overlap,bload,evals,mrt_ms,p95_ms";

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let c = &r.config;
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{},{:.3},{:.3}",
                r.label.replace(',', ";"),
                c.algorithm,
                c.k,
                c.alpha,
                c.beta,
                c.f_s,
                c.f_f,
                c.skip_mode,
                c.view_mode,
                r.mrr_at_10,
                r.ndcg_at_10,
                r.recall_at_k,
                r.overlap,
                r.bload(),
                r.docs_evaluated,
                r.mean_ms,
                r.p95_ms
            )
            .unwrap();
        }
        s
    }

    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(6);
        let mut s = format!(
            "{:<width$}  {:>16}  {:>7}  {:>7}  {:>8}  {:>8}  {:>8}  {:>10}\n",
            "config", "time ms (p95)", "MRR@10", "NDCG@10", "recall", "overlap", "bload", "#eval"
        );
        for r in &self.rows {
            let time = format!("{:.2} ({:.2})", r.mean_ms, r.p95_ms);
            writeln!(
                s,
                "{:<width$}  {:>16}  {:>7.4}  {:>7.4}  {:>8.4}  {:>7.2}%  {:>7.2}%  {:>10}",
                r.label,
                time,
                r.mrr_at_10,
                r.ndcg_at_10,
                r.recall_at_k,
                r.overlap * 100.0,
                r.bload() * 100.0,
                r.docs_evaluated
            )
            .unwrap();
        }
        s
    }
}

pub fn results_to_run(index: &InvertedIndex, ranked: &[(String, Vec<ScoredDoc>)]) -> RunFile {
    let mut run = RunFile::default();
    for (qid, docs) in ranked {
        run.queries.entry(qid.clone()).or_default();
        run.push_ranking(qid, docs.iter().map(|d| (index.doc_name(d.doc).to_string(), d.score)));
    }
    run
}

fn run_batch(
    index: &InvertedIndex,
    queries: &[Query],
    config: &RetrievalConfig,
) -> Result<Vec<(String, Vec<ScoredDoc>, QueryTrace)>, HarnessError> {
    queries
        .iter()
        .map(|q| {
            retrieve(index, q, config)
                .map(|(res, trace)| (q.id.clone(), res, trace))
                .map_err(|e| HarnessError::Query {
                    qid: q.id.clone(),
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Runs every configuration over the query batch. Each row gets an untimed
/// warm pass first; latency comes from the traces of the timed pass.
pub fn run_grid(
    index: &InvertedIndex,
    queries: &[Query],
    qrels: &Qrels,
    grid: &[GridConfig],
) -> Result<ExperimentReport, HarnessError> {
    for g in grid {
        g.config
            .validate()
            .map_err(|e| HarnessError::Spec(format!("{}: {e}", g.label)))?;
    }
    let mut references: HashMap<(u64, usize), RunFile> = HashMap::new();
    let mut rows = Vec::with_capacity(grid.len());
    for g in grid {
        let cfg = g.config;
        let key = (cfg.beta.to_bits(), cfg.k);
        if let Entry::Vacant(slot) = references.entry(key) {
            let exact = run_batch(index, queries, &RetrievalConfig::exhaustive(cfg.k, cfg.beta))?;
            let ranked: Vec<_> = exact.into_iter().map(|(q, r, _)| (q, r)).collect();
            slot.insert(results_to_run(index, &ranked));
        }

        run_batch(index, queries, &cfg)?;
        let batch = run_batch(index, queries, &cfg)?;

        let ranked: Vec<_> = batch.iter().map(|(q, r, _)| (q.clone(), r.clone())).collect();
        let run = results_to_run(index, &ranked);
        let times: Vec<_> = batch.iter().map(|(_, _, t)| t.elapsed).collect();
        let latency = if times.is_empty() {
            None
        } else {
            Some(latency_summary(&times).map_err(|e| HarnessError::Spec(e.to_string()))?)
        };
        let m = |r: Result<f64, metrics::MetricsError>| r.map_err(|e| HarnessError::Spec(e.to_string()));
        rows.push(ReportRow {
            label: g.label.clone(),
            config: cfg,
            mrr_at_10: m(metrics::mrr_at(&run, qrels, 10))?,
            ndcg_at_10: m(metrics::ndcg_at(&run, qrels, 10))?,
            recall_at_k: m(metrics::recall_at(&run, qrels, cfg.k))?,
            overlap: m(metrics::overlap_ratio(&run, &references[&key], cfg.k))?,
            blocks_loaded: batch.iter().map(|(_, _, t)| t.blocks_loaded).sum(),
            blocks_total: batch.iter().map(|(_, _, t)| t.blocks_total).sum(),
            docs_evaluated: batch.iter().map(|(_, _, t)| t.docs_evaluated).sum(),
            mean_ms: latency.map_or(0.0, |l| l.mean_ms),
            p95_ms: latency.map_or(0.0, |l| l.p95_ms),
            traces: batch.into_iter().map(|(q, _, t)| (q, t)).collect(),
        });
    }
    Ok(ExperimentReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grid_rows() {
        let g: GridConfig = "label=x,algo=dths,alpha=1,beta=0,skip=st,view=uniform,fs=1.3,k=10".parse().unwrap();
        assert_eq!(g.label, "x");
        assert_eq!(g.config.alpha, 1.0);
        assert_eq!(g.config.skip_mode, SkipMode::Single);
        assert_eq!(g.config.view_mode, ViewMode::Uniform);
        assert_eq!(g.config.k, 10);
        assert!("alpha=2".parse::<GridConfig>().is_err());
        assert!("colour=red".parse::<GridConfig>().is_err());
    }

    #[test]
    fn design_grid_is_valid() {
        let grid = design_option_grid(100);
        assert_eq!(grid.len(), 13);
        for g in grid {
            g.config.validate().unwrap();
        }
    }
}
