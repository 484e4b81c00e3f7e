//! The three toy-model subcommands: fit, finetune, and per-token scoring.

use std::path::PathBuf;

use clap::Args;
use davir_core::corpus_io::{read_corpus, ModelLossDump};
use davir_core::toy_lm::{self, NGramModel};
use davir_core::util::parallel_map;
use davir_core::Result;

use crate::manifest::RunManifest;
use crate::output::{write_atomic, write_jsonl_atomic};

#[derive(Args)]
pub struct FitArgs {
    /// Training corpus (JSONL)
    #[arg(long)]
    corpus: PathBuf,
    /// Context length in symbols
    #[arg(long, default_value_t = toy_lm::DEFAULT_ORDER)]
    order: usize,
    /// Add-lambda smoothing mass
    #[arg(long, default_value_t = toy_lm::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Model file to write
    #[arg(long)]
    output: PathBuf,
}

pub fn fit(args: FitArgs) -> Result<()> {
    let mut manifest = RunManifest::begin("toylm-fit");
    manifest
        .param("order", args.order)
        .param("lambda", args.lambda)
        .input(&args.corpus)?;
    let docs = read_corpus(&args.corpus)?;
    let model = NGramModel::fit(&docs, args.order, args.lambda)?;
    write_atomic(&args.output, model.to_json().as_bytes())?;
    crate::logging::info(&format!(
        "fit order-{} model over {} documents ({} symbols)",
        args.order,
        docs.len(),
        model.vocab_size()
    ));
    manifest.output(&args.output)?;
    manifest.finish(&args.output)
}

#[derive(Args)]
pub struct FinetuneArgs {
    /// Model to start from
    #[arg(long)]
    base: PathBuf,
    /// Training corpus to interpolate toward
    #[arg(long)]
    corpus: PathBuf,
    /// Interpolation weight in (0, 1]
    #[arg(long, default_value_t = toy_lm::DEFAULT_MIX_WEIGHT)]
    mix_weight: f64,
    /// Model file to write
    #[arg(long)]
    output: PathBuf,
}

pub fn finetune(args: FinetuneArgs) -> Result<()> {
    let mut manifest = RunManifest::begin("toylm-finetune");
    manifest
        .param("mix_weight", args.mix_weight)
        .input(&args.base)?
        .input(&args.corpus)?;
    let base = NGramModel::load(&args.base)?;
    let docs = read_corpus(&args.corpus)?;
    let tuned = base.finetune(&docs, args.mix_weight)?;
    write_atomic(&args.output, tuned.to_json().as_bytes())?;
    manifest.output(&args.output)?;
    manifest.finish(&args.output)
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Model file to score with
    #[arg(long)]
    model: PathBuf,
    /// Corpus to score (JSONL)
    #[arg(long)]
    corpus: PathBuf,
    /// Also dump per-position predictive entropies
    #[arg(long)]
    entropy: bool,
    /// Worker threads (output is identical for any count)
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Loss dump to write (JSONL, one `nll` array per document)
    #[arg(long)]
    output: PathBuf,
}

pub fn score(args: ScoreArgs) -> Result<()> {
    let mut manifest = RunManifest::begin("toylm-score");
    manifest
        .param("entropy", args.entropy)
        .param("workers", args.workers as u64)
        .input(&args.model)?
        .input(&args.corpus)?;
    let model = NGramModel::load(&args.model)?;
    let mut docs = read_corpus(&args.corpus)?;
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    let dumps: Vec<ModelLossDump> = parallel_map(&docs, args.workers, |doc| ModelLossDump {
        id: doc.id.clone(),
        nll: model.response_nll(doc),
        entropy: args.entropy.then(|| model.response_entropy(doc)),
    });
    write_jsonl_atomic(&args.output, &dumps)?;
    manifest.output(&args.output)?;
    manifest.finish(&args.output)
}
