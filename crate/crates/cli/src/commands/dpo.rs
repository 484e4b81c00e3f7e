//! `dpo`: batch preference-objective evaluation with a margin distribution
//! summary and the margin/length-difference correlation.

use std::path::PathBuf;

use clap::Args;
use davir_core::corpus_io::read_preferences;
use davir_core::length_diagnostics::CorrelationReport;
use davir_core::preference::{batch_objective, length_diff_correlation, DpoVariant};
use davir_core::scoring::Beta;
use davir_core::{Error, Result};
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::output::{emit_report, render_report, write_jsonl_atomic, ReportFormat};

#[derive(Args)]
pub struct DpoArgs {
    /// Preference file (JSONL)
    #[arg(long)]
    prefs: PathBuf,
    /// Inverse temperature
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// vanilla or davir
    #[arg(long, value_parser = super::parse_variant, default_value = "davir")]
    variant: DpoVariant,
    /// Report file (stdout when omitted)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write per-example losses, margins, and gradients here (JSONL)
    #[arg(long)]
    per_example: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
}

#[derive(Serialize)]
struct MarginQuantiles {
    min: f64,
    p25: f64,
    p50: f64,
    p75: f64,
    max: f64,
}

#[derive(Serialize)]
struct DpoReport {
    variant: DpoVariant,
    beta: f64,
    n: usize,
    mean_loss: f64,
    mean_margin: f64,
    margin_quantiles: MarginQuantiles,
    /// Absent when the correlation is undefined (constant margins or
    /// constant length differences).
    length_diff_correlation: Option<CorrelationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    correlation_note: Option<String>,
}

#[derive(Serialize)]
struct PerExampleRow<'a> {
    id: &'a str,
    loss: f64,
    margin: f64,
    grad_logp_policy_w: f64,
    grad_logp_policy_l: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn run(args: DpoArgs) -> Result<()> {
    let mut manifest = RunManifest::begin("dpo");
    manifest
        .param("beta", args.beta)
        .param("variant", format!("{:?}", args.variant).to_lowercase())
        .input(&args.prefs)?;

    let examples = read_preferences(&args.prefs)?;
    let beta = Beta::new(args.beta)?;
    let batch = batch_objective(&examples, beta, args.variant)?;

    let mut margins: Vec<f64> = batch.per_example.iter().map(|(_, v)| v.margin).collect();
    margins.sort_by(f64::total_cmp);
    let correlation = length_diff_correlation(&examples, beta, args.variant);
    let (correlation, note) = match correlation {
        Ok(report) => (Some(report), None),
        Err(Error::ZeroVariance { name }) => (
            None,
            Some(format!("undefined (constant statistic): {name}")),
        ),
        Err(other) => return Err(other),
    };

    let report = DpoReport {
        variant: args.variant,
        beta: args.beta,
        n: batch.n,
        mean_loss: batch.mean_loss,
        mean_margin: batch.mean_margin,
        margin_quantiles: MarginQuantiles {
            min: margins[0],
            p25: quantile(&margins, 0.25),
            p50: quantile(&margins, 0.5),
            p75: quantile(&margins, 0.75),
            max: margins[margins.len() - 1],
        },
        length_diff_correlation: correlation,
        correlation_note: note,
    };
    emit_report(args.report.as_deref(), &render_report(&report, args.format)?)?;

    if let Some(per_example_path) = &args.per_example {
        let rows: Vec<PerExampleRow> = batch
            .per_example
            .iter()
            .map(|(id, v)| PerExampleRow {
                id,
                loss: v.loss,
                margin: v.margin,
                grad_logp_policy_w: v.grad_logp_policy_w,
                grad_logp_policy_l: v.grad_logp_policy_l,
            })
            .collect();
        write_jsonl_atomic(per_example_path, &rows)?;
        manifest.output(per_example_path)?;
    }

    if let Some(primary) = args.report.as_deref().or(args.per_example.as_deref()) {
        if let Some(report_path) = &args.report {
            manifest.output(report_path)?;
        }
        manifest.finish(primary)?;
    }
    Ok(())
}
