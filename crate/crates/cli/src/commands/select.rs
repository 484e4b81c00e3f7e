//! `select`: pick a subset by score and emit both the id list and the
//! filtered corpus, in rank order.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;
use davir_core::corpus_io::{read_corpus, read_scores, Document};
use davir_core::selection::{select, Direction, SelectionMetric, SelectionSpec};
use davir_core::Result;

use crate::logging;
use crate::manifest::RunManifest;
use crate::output::{write_atomic, write_jsonl_atomic};

#[derive(Args)]
pub struct SelectArgs {
    /// Score file driving the selection
    #[arg(long)]
    scores: PathBuf,
    /// Corpus to filter
    #[arg(long)]
    corpus: PathBuf,
    /// davir, rho-lm, or random
    #[arg(long, value_parser = super::parse_selection_metric)]
    metric: SelectionMetric,
    /// highest or lowest (ignored for random)
    #[arg(long, value_parser = super::parse_direction, default_value = "highest")]
    direction: Direction,
    /// Subset size
    #[arg(long)]
    k: u64,
    /// Sampling seed (random metric only)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix: writes `<output>.ids` and `<output>.jsonl`
    #[arg(long)]
    output: PathBuf,
}

pub fn run(args: SelectArgs) -> Result<()> {
    let mut manifest = RunManifest::begin("select");
    manifest
        .param("metric", format!("{:?}", args.metric).to_lowercase())
        .param("direction", format!("{:?}", args.direction).to_lowercase())
        .param("k", args.k)
        .seed("seed", args.seed)
        .input(&args.scores)?
        .input(&args.corpus)?;

    let scored = read_scores(&args.scores)?;
    let spec = SelectionSpec {
        metric: args.metric,
        direction: args.direction,
        k: args.k,
        seed: args.seed,
    };
    let ids = select(&scored, &spec)?;

    let docs = read_corpus(&args.corpus)?;
    let mut by_id: HashMap<String, Document> =
        docs.into_iter().map(|d| (d.id.clone(), d)).collect();
    let mut filtered = Vec::with_capacity(ids.len());
    let mut missing = 0usize;
    for id in &ids {
        match by_id.remove(id) {
            Some(doc) => filtered.push(doc),
            None => missing += 1,
        }
    }
    if missing > 0 {
        logging::warn(&format!(
            "{missing} selected ids were not present in the corpus; skipped"
        ));
    }

    // Append (never replace) the suffixes: a prefix like `run.selected`
    // must yield `run.selected.ids`.
    let with_suffix = |suffix: &str| -> PathBuf {
        let mut name = args.output.as_os_str().to_owned();
        name.push(suffix);
        PathBuf::from(name)
    };
    let ids_path = with_suffix(".ids");
    let corpus_path = with_suffix(".jsonl");
    let mut id_lines = ids.join("\n");
    id_lines.push('\n');
    write_atomic(&ids_path, id_lines.as_bytes())?;
    write_jsonl_atomic(&corpus_path, &filtered)?;
    manifest.output(&ids_path)?.output(&corpus_path)?;
    manifest.finish(&args.output)
}
