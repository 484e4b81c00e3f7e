//! `mix`: assemble a corpus from full and score-selected components
//! declared in a JSON config.

use std::path::PathBuf;

use clap::Args;
use davir_core::selection::{mix, MixSpec};
use davir_core::{Error, Result};

use crate::logging;
use crate::manifest::RunManifest;
use crate::output::write_jsonl_atomic;

#[derive(Args)]
pub struct MixArgs {
    /// Mixture config: {"components": [{"corpus": "...",
    /// "select": {"scores": "...", "metric": "davir", "k": 3200}}, ...]}
    #[arg(long)]
    config: PathBuf,
    /// Rename colliding ids with their source prefix instead of failing
    #[arg(long)]
    allow_collision: bool,
    /// Mixed corpus to write
    #[arg(long)]
    output: PathBuf,
}

pub fn run(args: MixArgs) -> Result<()> {
    let mut manifest = RunManifest::begin("mix");
    manifest
        .param("allow_collision", args.allow_collision)
        .input(&args.config)?;

    let raw = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let spec: MixSpec = serde_json::from_str(&raw).map_err(|e| Error::InvalidParameter {
        name: "mix config",
        reason: e.to_string(),
    })?;
    for component in &spec.components {
        manifest.input(&component.corpus)?;
        if let Some(selection) = &component.select {
            manifest.input(&selection.scores)?;
        }
    }

    let outcome = mix(&spec, args.allow_collision)?;
    if outcome.duplicates_skipped + outcome.renamed + outcome.selected_missing > 0 {
        logging::info(&format!(
            "mix: {} duplicates skipped, {} renamed, {} selected ids missing",
            outcome.duplicates_skipped, outcome.renamed, outcome.selected_missing
        ));
    }
    logging::info(&format!("mixed corpus has {} documents", outcome.documents.len()));
    write_jsonl_atomic(&args.output, &outcome.documents)?;
    manifest.output(&args.output)?;
    manifest.finish(&args.output)
}
