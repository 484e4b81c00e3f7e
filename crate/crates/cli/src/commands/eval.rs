//! `eval`: win statistics with bootstrap confidence intervals, and
//! one-sided Welch comparisons between two outcome files.

use std::path::PathBuf;

use clap::Args;
use davir_core::corpus_io::read_outcomes;
use davir_core::eval_stats::{
    bootstrap_mean_ci, bootstrap_resample_means, welch_t_test, win_rate, win_score, Alternative,
    BootstrapReport, EvalMetric, OutcomeRecord,
};
use davir_core::Result;
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::output::{emit_report, render_report, ReportFormat};

/// What feeds the t-test when two outcome files are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    /// Bootstrap resample distributions of the metric (one mean per
    /// resample on each side).
    Bootstrap,
    /// Raw per-question metric contributions.
    Questions,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Outcome file (JSONL with question_id and result)
    #[arg(long)]
    outcomes: PathBuf,
    /// win-score or win-rate
    #[arg(long, value_parser = super::parse_eval_metric)]
    metric: EvalMetric,
    /// Bootstrap resample count
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    /// Confidence level
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Second outcome file; runs a Welch t-test of this file's metric
    /// being exceeded by the first's
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Sample source for the comparison t-test
    #[arg(long, value_enum, default_value_t = SampleMode::Bootstrap)]
    samples: SampleMode,
    /// Two-sided test instead of the one-sided default
    #[arg(long)]
    two_sided: bool,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    /// Report file (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Comparison {
    other: String,
    other_value: f64,
    samples: SampleMode,
    alternative: Alternative,
    p_value: f64,
}

#[derive(Serialize)]
struct EvalReport {
    metric: EvalMetric,
    n: usize,
    value: f64,
    bootstrap: BootstrapReport,
    comparison: Option<Comparison>,
}

fn metric_value(metric: EvalMetric, outcomes: &[OutcomeRecord]) -> Result<f64> {
    match metric {
        EvalMetric::WinScore => win_score(outcomes),
        EvalMetric::WinRate => win_rate(outcomes),
    }
}

fn per_question(metric: EvalMetric, outcomes: &[OutcomeRecord]) -> Vec<f64> {
    outcomes
        .iter()
        .map(|o| metric.per_question(o.result))
        .collect()
}

pub fn run(args: EvalArgs) -> Result<()> {
    let mut manifest = RunManifest::begin("eval");
    manifest
        .param("metric", args.metric.name())
        .param("n_resamples", args.bootstrap as u64)
        .param("level", args.level)
        .param("two_sided", args.two_sided)
        .seed("seed", args.seed)
        .input(&args.outcomes)?;

    let outcomes = read_outcomes(&args.outcomes)?;
    let values = per_question(args.metric, &outcomes);
    let report = EvalReport {
        metric: args.metric,
        n: outcomes.len(),
        value: metric_value(args.metric, &outcomes)?,
        bootstrap: bootstrap_mean_ci(&values, args.bootstrap, args.level, args.seed)?,
        comparison: match &args.compare {
            Some(other_path) => {
                manifest.input(other_path)?;
                manifest.param("samples", format!("{:?}", args.samples).to_lowercase());
                let other = read_outcomes(other_path)?;
                let other_values = per_question(args.metric, &other);
                let alternative = if args.two_sided {
                    Alternative::TwoSided
                } else {
                    Alternative::Greater
                };
                let p_value = match args.samples {
                    SampleMode::Questions => {
                        welch_t_test(&values, &other_values, alternative)?
                    }
                    SampleMode::Bootstrap => {
                        // Distinct substream roots keep the two resample
                        // distributions independent under one --seed.
                        let a = bootstrap_resample_means(&values, args.bootstrap, args.seed)?;
                        let b = bootstrap_resample_means(
                            &other_values,
                            args.bootstrap,
                            args.seed ^ 0x9e37_79b9_7f4a_7c15,
                        )?;
                        welch_t_test(&a, &b, alternative)?
                    }
                };
                Some(Comparison {
                    other: other_path.display().to_string(),
                    other_value: metric_value(args.metric, &other)?,
                    samples: args.samples,
                    alternative,
                    p_value,
                })
            }
            None => None,
        },
    };

    emit_report(args.output.as_deref(), &render_report(&report, args.format)?)?;
    if let Some(output) = &args.output {
        manifest.output(output)?;
        manifest.finish(output)?;
    }
    Ok(())
}
