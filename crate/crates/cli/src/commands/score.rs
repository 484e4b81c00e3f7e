//! `score`: join a corpus with base/reference losses and emit the score
//! file.

use std::path::PathBuf;

use clap::{ArgGroup, Args};
use davir_core::corpus_io::{
    join_losses, pair_dumps, read_corpus, read_loss_dumps, read_loss_records,
};
use davir_core::scoring::{score_corpus, AggregationMode};
use davir_core::Result;

use crate::logging;
use crate::manifest::RunManifest;
use crate::output::write_jsonl_atomic;

#[derive(Args)]
#[command(group = ArgGroup::new("loss-source").required(true).args(["losses", "base_losses"]))]
pub struct ScoreArgs {
    /// Corpus being scored (JSONL)
    #[arg(long)]
    corpus: PathBuf,
    /// Joint loss file with `nll_base` and `nll_ref` per record
    #[arg(long, conflicts_with_all = ["base_losses", "ref_losses"])]
    losses: Option<PathBuf>,
    /// Base-model loss dump (single `nll` array per record)
    #[arg(long, requires = "ref_losses")]
    base_losses: Option<PathBuf>,
    /// Reference-model loss dump (single `nll` array per record)
    #[arg(long, requires = "base_losses")]
    ref_losses: Option<PathBuf>,
    /// Per-token aggregation: sum or mean
    #[arg(long, default_value = "sum", value_parser = super::parse_aggregation)]
    mode: AggregationMode,
    /// Fail on any unmatched id instead of warn-and-skip
    #[arg(long)]
    strict: bool,
    /// Worker threads (output is identical for any count)
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Score file to write
    #[arg(long)]
    output: PathBuf,
}

pub fn run(args: ScoreArgs) -> Result<()> {
    let mut manifest = RunManifest::begin("score");
    manifest
        .param("mode", format!("{:?}", args.mode).to_lowercase())
        .param("strict", args.strict)
        .param("workers", args.workers as u64)
        .input(&args.corpus)?;

    let records = match (&args.losses, &args.base_losses, &args.ref_losses) {
        (Some(joint), _, _) => {
            manifest.input(joint)?;
            read_loss_records(joint)?
        }
        (None, Some(base), Some(reference)) => {
            manifest.input(base)?.input(reference)?;
            let paired = pair_dumps(
                read_loss_dumps(base)?,
                read_loss_dumps(reference)?,
                args.strict,
            )?;
            if paired.base_unmatched + paired.ref_unmatched > 0 {
                logging::warn(&format!(
                    "{} base and {} reference loss records had no counterpart; excluded",
                    paired.base_unmatched, paired.ref_unmatched
                ));
            }
            paired.records
        }
        _ => unreachable!("clap enforces the loss-source group"),
    };

    let docs = read_corpus(&args.corpus)?;
    let joined = join_losses(docs, records, args.strict)?;
    if joined.corpus_unmatched + joined.losses_unmatched > 0 {
        logging::warn(&format!(
            "{} documents lacked losses and {} loss records lacked documents; excluded",
            joined.corpus_unmatched, joined.losses_unmatched
        ));
    }
    let scored = score_corpus(&joined.pairs, args.mode, args.workers)?;
    let degenerate = scored.iter().filter(|s| s.davir.is_none()).count();
    if degenerate > 0 {
        logging::warn(&format!(
            "{degenerate} documents had zero base loss; davir set to null"
        ));
    }
    write_jsonl_atomic(&args.output, &scored)?;
    manifest.output(&args.output)?;
    manifest.finish(&args.output)
}
