//! Command-line front end: build, query, eval, bench, stats, synth.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage errors.

use crate::harness::{self, design_option_grid, generate_corpus, parse_queries, results_to_run, GridConfig, SynthSpec};
use crate::index::{build_index, load_index, read_corpus, save_index, BuildConfig, InvertedIndex, PartitionStrategy};
use crate::metrics::{self, Qrels, RunFile};
use crate::retrieval::{retrieve, Algorithm, RetrievalConfig, SkipMode, ViewMode};
use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dualskip", version, about = "Dual-threshold top-k retrieval over a dual-weight block-max index")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index from a JSONL corpus.
    Build(BuildArgs),
    /// Run queries and write a TREC run file.
    Query(QueryArgs),
    /// Score a run file against qrels.
    Eval(EvalArgs),
    /// Run a configuration grid and print the report.
    Bench(BenchArgs),
    /// Per-term weight distribution statistics as CSV.
    Stats(StatsArgs),
    /// Write a synthetic corpus, queries and qrels.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub block_size: usize,
    #[arg(long, default_value = "variable")]
    pub partition: PartitionStrategy,
    #[arg(long, default_value_t = crate::scoring::DEFAULT_K1)]
    pub k1: f64,
    #[arg(long, default_value_t = crate::scoring::DEFAULT_B)]
    pub b: f64,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub fs: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ff: f64,
    #[arg(long, default_value = "dt")]
    pub skip: SkipMode,
    #[arg(long, default_value = "independent")]
    pub view: ViewMode,
    #[arg(long, default_value = "dths")]
    pub algo: Algorithm,
    /// Written verbatim into the tag column of every run line.
    #[arg(long, default_value = "dualskip")]
    pub run_tag: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-query counters as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

impl QueryArgs {
    fn config(&self) -> RetrievalConfig {
        RetrievalConfig {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            f_s: self.fs,
            f_f: self.ff,
            skip_mode: self.skip,
            view_mode: self.view,
            algorithm: self.algo,
            audit: false,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// Comma-separated `mrr@N`, `ndcg@N`, `recall@N`.
    #[arg(long, default_value = "mrr@10,ndcg@10,recall@1000")]
    pub metrics: String,
    /// Adds `overlap@K` against this run.
    #[arg(long)]
    pub baseline_run: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub overlap_k: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// Grid row such as `label=x,algo=dths,alpha=0.9,beta=0.2,fs=1.3`;
    /// repeatable. Without any, the design-option grid is used.
    #[arg(long = "config")]
    pub configs: Vec<String>,
    /// k for the design-option grid.
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// `all` or a comma-separated term list.
    #[arg(long, default_value = "all")]
    pub terms: String,
    /// Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub num_docs: usize,
    #[arg(long, default_value_t = 2_000)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 30)]
    pub doc_len_mean: usize,
    #[arg(long, default_value_t = 500)]
    pub query_count: usize,
    #[arg(long, default_value_t = 5)]
    pub query_len_mean: usize,
    #[arg(long, default_value_t = 2.0)]
    pub learned_a: f64,
    #[arg(long, default_value_t = 8.0)]
    pub learned_b: f64,
    #[arg(long, default_value_t = 0.3)]
    pub expansion_rate: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Build(a) => cmd_build(&a),
        Command::Query(a) => cmd_query(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Synth(a) => cmd_synth(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn open_index(path: &Path) -> anyhow::Result<InvertedIndex> {
    load_index(path).with_context(|| format!("cannot load index {}", path.display()))
}

fn cmd_build(a: &BuildArgs) -> Outcome {
    if a.block_size == 0 {
        return Err(Failure::Usage("--block-size must be at least 1".into()));
    }
    if !(a.k1 > 0.0) || !(0.0..=1.0).contains(&a.b) {
        return Err(Failure::Usage(format!("--k1 must be positive and --b in [0, 1], got {} and {}", a.k1, a.b)));
    }
    let file = fs::File::open(&a.corpus).with_context(|| format!("cannot open corpus {}", a.corpus.display()))?;
    let docs = read_corpus(BufReader::new(file)).with_context(|| format!("malformed corpus {}", a.corpus.display()))?;
    let config = BuildConfig {
        k1: a.k1,
        b: a.b,
        block_size: a.block_size,
        partition: a.partition,
        ..BuildConfig::default()
    };
    let index = build_index(docs, &config).context("index build failed")?;
    save_index(&index, &a.out).with_context(|| format!("cannot write index {}", a.out.display()))?;
    let size = fs::metadata(&a.out).map(|m| m.len()).unwrap_or(0);
    println!(
        "docs {}\nterms {}\npostings {}\nblocks {}\nbytes {size}",
        index.num_docs(),
        index.num_terms(),
        index.num_postings(),
        index.num_blocks()
    );
    Ok(())
}

fn cmd_query(a: &QueryArgs) -> Outcome {
    let config = a.config();
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if a.run_tag.is_empty() || a.run_tag.contains(char::is_whitespace) {
        return Err(Failure::Usage("--run-tag must be a single non-empty token".into()));
    }
    let queries = parse_queries(&read_text(&a.queries)?).with_context(|| format!("bad queries file {}", a.queries.display()))?;
    let index = open_index(&a.index)?;

    let mut ranked = Vec::with_capacity(queries.len());
    let mut trace_csv = String::from("qid,blocks_loaded,blocks_total,docs_evaluated,elapsed_us\n");
    let mut unknown = 0;
    for q in &queries {
        let (res, trace) = retrieve(&index, q, &config).map_err(|e| anyhow!("query {}: {e}", q.id))?;
        unknown += trace.unknown_terms;
        writeln!(
            trace_csv,
            "{},{},{},{},{}",
            q.id,
            trace.blocks_loaded,
            trace.blocks_total,
            trace.docs_evaluated,
            trace.elapsed.as_micros()
        )
        .unwrap();
        ranked.push((q.id.clone(), res));
    }
    if unknown > 0 {
        eprintln!("warning: {unknown} query terms are not in the index");
    }
    let run = results_to_run(&index, &ranked);
    write_text(&a.out, &run.to_trec(&a.run_tag))?;
    if let Some(path) = &a.trace {
        write_text(path, &trace_csv)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Metric {
    Mrr(usize),
    Ndcg(usize),
    Recall(usize),
}

fn parse_metrics(list: &str) -> Result<Vec<(String, Metric)>, String> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (kind, cutoff) = name
            .split_once('@')
            .ok_or_else(|| format!("metric '{name}' needs a cutoff, as in mrr@10"))?;
        let cutoff: usize = cutoff
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| format!("metric '{name}': cutoff must be a positive integer"))?;
        let metric = match kind.to_ascii_lowercase().as_str() {
            "mrr" => Metric::Mrr(cutoff),
            "ndcg" => Metric::Ndcg(cutoff),
            "recall" => Metric::Recall(cutoff),
            _ => return Err(format!("unknown metric '{name}'")),
        };
        out.push((name.to_string(), metric));
    }
    if out.is_empty() {
        return Err("--metrics lists no metrics".into());
    }
    Ok(out)
}

fn cmd_eval(a: &EvalArgs) -> Outcome {
    let wanted = parse_metrics(&a.metrics).map_err(Failure::Usage)?;
    if a.overlap_k == 0 {
        return Err(Failure::Usage("--overlap-k must be at least 1".into()));
    }
    let run = RunFile::parse(&read_text(&a.run)?).with_context(|| format!("bad run file {}", a.run.display()))?;
    let qrels = Qrels::parse(&read_text(&a.qrels)?).with_context(|| format!("bad qrels file {}", a.qrels.display()))?;
    for w in metrics::coverage_warnings(&run, &qrels) {
        eprintln!("warning: {w}");
    }
    for (name, metric) in wanted {
        let value = match metric {
            Metric::Mrr(c) => metrics::mrr_at(&run, &qrels, c),
            Metric::Ndcg(c) => metrics::ndcg_at(&run, &qrels, c),
            Metric::Recall(c) => metrics::recall_at(&run, &qrels, c),
        }
        .map_err(|e| anyhow!("{name}: {e}"))?;
        println!("{name}\t{value:.4}");
    }
    if let Some(path) = &a.baseline_run {
        let base = RunFile::parse(&read_text(path)?).with_context(|| format!("bad run file {}", path.display()))?;
        let value = metrics::overlap_ratio(&run, &base, a.overlap_k).map_err(|e| anyhow!("overlap: {e}"))?;
        println!("overlap@{}\t{value:.4}", a.overlap_k);
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Outcome {
    let grid: Vec<GridConfig> = if a.configs.is_empty() {
        if a.k == 0 {
            return Err(Failure::Usage("--k must be at least 1".into()));
        }
        design_option_grid(a.k)
    } else {
        a.configs
            .iter()
            .map(|c| c.parse::<GridConfig>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Usage(e.to_string()))?
    };
    let queries = parse_queries(&read_text(&a.queries)?).with_context(|| format!("bad queries file {}", a.queries.display()))?;
    let qrels = Qrels::parse(&read_text(&a.qrels)?).with_context(|| format!("bad qrels file {}", a.qrels.display()))?;
    let index = open_index(&a.index)?;
    let report = harness::run_grid(&index, &queries, &qrels, &grid).context("bench failed")?;
    print!("{}", report.to_table());
    if let Some(path) = &a.csv {
        write_text(path, &report.to_csv())?;
    }
    Ok(())
}

pub const STATS_BINS: usize = 20;

/// Header of the `stats` CSV.
pub fn stats_header() -> String {
    let mut h = String::from("term,channel,count,min,max,mean,skewness");
    for i in 0..STATS_BINS {
        write!(h, ",bin{i:02}").unwrap();
    }
    h
}

/// One CSV row for a channel sample: summary statistics, skewness (or
/// `undefined`) and a 20-bin histogram over `[min, max]`.
pub fn stats_row(term: &str, channel: &str, sample: &[f64]) -> String {
    let mut row = format!("{term},{channel},{}", sample.len());
    if sample.is_empty() {
        row.push_str(",,,,undefined");
        for _ in 0..STATS_BINS {
            row.push_str(",0");
        }
        return row;
    }
    let min = sample.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = sample.iter().sum::<f64>() / sample.len() as f64;
    write!(row, ",{min},{max},{mean}").unwrap();
    match metrics::skewness(sample) {
        Ok(g1) => write!(row, ",{g1}").unwrap(),
        Err(_) => row.push_str(",undefined"),
    }
    let mut bins = [0u64; STATS_BINS];
    for &x in sample {
        let b = if max > min {
            (((x - min) / (max - min)) * STATS_BINS as f64) as usize
        } else {
            0
        };
        bins[b.min(STATS_BINS - 1)] += 1;
    }
    for b in bins {
        write!(row, ",{b}").unwrap();
    }
    row
}

fn cmd_stats(a: &StatsArgs) -> Outcome {
    let index = open_index(&a.index)?;
    let ids: Vec<u32> = if a.terms.trim() == "all" {
        index.terms().map(|(id, _)| id).collect()
    } else {
        let mut ids = Vec::new();
        for t in a.terms.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match index.term_id(t) {
                Some(id) => ids.push(id),
                None => eprintln!("unknown term: {t}"),
            }
        }
        ids
    };
    let mut csv = stats_header();
    csv.push('\n');
    for id in ids {
        let records = index
            .posting_list(id)
            .decode_all()
            .map_err(|e| anyhow!("term {}: {e}", index.term(id)))?;
        let bm25: Vec<f64> = records.iter().map(|r| index.dequantize_bm25(r.w_bm25)).collect();
        let learned: Vec<f64> = records.iter().map(|r| index.dequantize_learned(r.w_learned)).collect();
        let term = index.term(id);
        csv.push_str(&stats_row(term, "bm25", &bm25));
        csv.push('\n');
        csv.push_str(&stats_row(term, "learned", &learned));
        csv.push('\n');
    }
    match &a.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Outcome {
    let spec = SynthSpec {
        num_docs: a.num_docs,
        vocab_size: a.vocab_size,
        doc_len_mean: a.doc_len_mean,
        query_count: a.query_count,
        query_len_mean: a.query_len_mean,
        learned_skew_shape: (a.learned_a, a.learned_b),
        expansion_rate: a.expansion_rate,
        seed: a.seed,
        ..SynthSpec::default()
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let corpus = generate_corpus(&spec).context("generation failed")?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    let mut jsonl = Vec::new();
    corpus.write_corpus(&mut jsonl).context("cannot serialise corpus")?;
    fs::write(a.out_dir.join("corpus.jsonl"), jsonl).with_context(|| format!("cannot write to {}", a.out_dir.display()))?;
    write_text(&a.out_dir.join("queries.tsv"), &harness::format_queries(&corpus.queries))?;
    write_text(&a.out_dir.join("qrels.txt"), &corpus.qrels.to_trec())?;
    println!(
        "docs {}\nqueries {}\njudgments {}",
        corpus.docs.len(),
        corpus.queries.len(),
        corpus.qrels.judgments.values().map(|q| q.len()).sum::<usize>()
    );
    Ok(())
}
