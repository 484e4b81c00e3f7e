//! `diagnose`: length-dependency report for any per-document statistic,
//! with an optional rank/length profile export.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::Args;
use davir_core::corpus_io::{read_scores, JsonlReader};
use davir_core::length_diagnostics::{length_report, profile_to_csv, rank_length_profile};
use davir_core::{Error, Result, Statistic};
use serde::Deserialize;

use crate::logging;
use crate::manifest::RunManifest;
use crate::output::{emit_report, render_report, write_atomic, ReportFormat};

#[derive(Args)]
pub struct DiagnoseArgs {
    /// Score file to diagnose
    #[arg(long)]
    scores: PathBuf,
    /// Statistic to correlate against n_tokens: loss-base, loss-ref,
    /// mean-loss-base, mean-entropy-base, rho-lm, or davir
    #[arg(long, value_parser = super::parse_statistic)]
    statistic: Statistic,
    /// Joint loss file; required for mean-entropy-base
    #[arg(long)]
    losses: Option<PathBuf>,
    /// Write a rank/length CSV profile here
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    /// Report file (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Entropy columns from either loss format: a joint record's
/// `entropy_base` or a single-model dump's `entropy`.
#[derive(Deserialize)]
struct EntropyRow {
    id: String,
    #[serde(default)]
    entropy_base: Option<Vec<f64>>,
    #[serde(default)]
    entropy: Option<Vec<f64>>,
}

fn mean_entropies(path: &Path) -> Result<HashMap<String, f64>> {
    let mut by_id = HashMap::new();
    for row in JsonlReader::<EntropyRow>::open(path)? {
        let (_, row) = row?;
        let entropy = row.entropy_base.or(row.entropy);
        if let Some(entropy) = entropy.filter(|e| !e.is_empty()) {
            by_id.insert(row.id, entropy.iter().sum::<f64>() / entropy.len() as f64);
        }
    }
    Ok(by_id)
}

pub fn run(args: DiagnoseArgs) -> Result<()> {
    let mut manifest = RunManifest::begin("diagnose");
    manifest
        .param("statistic", args.statistic.name())
        .input(&args.scores)?;

    let mut docs = read_scores(&args.scores)?;
    if args.statistic == Statistic::MeanEntropyBase {
        let losses = args.losses.as_ref().ok_or(Error::InvalidParameter {
            name: "losses",
            reason: "--losses is required for the mean-entropy-base statistic".into(),
        })?;
        manifest.input(losses)?;
        let by_id = mean_entropies(losses)?;
        for doc in &mut docs {
            doc.mean_entropy_base = by_id.get(&doc.id).copied();
        }
    }

    let report = length_report(&docs, args.statistic)?;
    let excluded = docs.len() - report.n;
    if excluded > 0 {
        logging::info(&format!(
            "{excluded} documents had no {} value; excluded from the report",
            args.statistic.name()
        ));
    }
    emit_report(args.output.as_deref(), &render_report(&report, args.format)?)?;

    if let Some(profile_path) = &args.profile {
        let profile = rank_length_profile(&docs, args.statistic);
        write_atomic(profile_path, profile_to_csv(&profile).as_bytes())?;
        manifest.output(profile_path)?;
    }

    if let Some(primary) = args.output.as_deref().or(args.profile.as_deref()) {
        if let Some(out) = &args.output {
            manifest.output(out)?;
        }
        manifest.finish(primary)?;
    }
    Ok(())
}
