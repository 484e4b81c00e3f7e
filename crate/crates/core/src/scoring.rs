//! Learnability scores from aggregated base/reference losses.
//!
//! The unnormalized score is the raw loss reduction seen when the base model
//! is fine-tuned on the full dataset. Dividing that reduction by the base
//! loss gives the normalized score, which suppresses the sequence-length
//! bias of the raw difference while preserving its ranking (either loss can
//! serve as the denominator without reordering documents; the base loss is
//! fixed here so outputs are reproducible across implementations).

use serde::{Deserialize, Serialize};

use crate::corpus_io::{Document, ScoredDocument, TokenLossRecord};
use crate::error::{Error, Result};

/// How per-token NLLs reduce to a document loss.
///
/// `Mean` is `Sum / n_tokens` exactly. Sum is the default: whole-sequence
/// log-probabilities are the native quantity, and per-token averaging does
/// not remove the length dependency anyway.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMode {
    #[default]
    Sum,
    Mean,
}

impl std::str::FromStr for AggregationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(AggregationMode::Sum),
            "mean" => Ok(AggregationMode::Mean),
            other => Err(Error::InvalidParameter {
                name: "mode",
                reason: format!("expected sum or mean, got {other:?}"),
            }),
        }
    }
}

/// Inverse-temperature of the implicit reward and preference objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Beta(f64);

impl Beta {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("must be a positive real, got {value}"),
            });
        }
        Ok(Beta(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Reduce a per-token NLL array to a document loss in nats.
pub fn aggregate(nll: &[f64], mode: AggregationMode) -> Result<f64> {
    if nll.is_empty() {
        return Err(Error::EmptyInput {
            what: "per-token NLL array",
        });
    }
    if nll.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParameter {
            name: "nll",
            reason: "per-token NLLs must be finite and nonnegative".into(),
        });
    }
    let sum: f64 = nll.iter().sum();
    Ok(match mode {
        AggregationMode::Sum => sum,
        AggregationMode::Mean => sum / nll.len() as f64,
    })
}

/// Raw loss reduction `loss_base - loss_ref`. Negative values mark data the
/// reference model unlearned.
pub fn rho_lm_score(loss_base: f64, loss_ref: f64) -> f64 {
    loss_base - loss_ref
}

/// Normalized loss reduction `(loss_base - loss_ref) / loss_base`.
///
/// At most 1, with equality exactly when the reference loss is zero.
/// A zero base loss is a degenerate input: such data is already learnt and
/// has no defined relative reduction.
pub fn davir_score(loss_base: f64, loss_ref: f64) -> Result<f64> {
    if loss_base.is_nan() || loss_base <= 0.0 {
        return Err(Error::DegenerateBaseLoss { value: loss_base });
    }
    Ok((loss_base - loss_ref) / loss_base)
}

/// Implicit reward `beta * (loss_base - loss_policy)`: the reward a
/// preference-optimized policy maximizes against the base model. With
/// `beta = 1` and the reference as the policy it coincides exactly with
/// [`rho_lm_score`].
pub fn implicit_reward(beta: Beta, loss_base: f64, loss_policy: f64) -> f64 {
    beta.value() * (loss_base - loss_policy)
}

/// Score one joined document.
pub fn score_document(
    doc: &Document,
    rec: &TokenLossRecord,
    mode: AggregationMode,
) -> Result<ScoredDocument> {
    let loss_base = aggregate(&rec.nll_base, mode)?;
    let loss_ref = aggregate(&rec.nll_ref, mode)?;
    let davir = if loss_base > 0.0 {
        Some(davir_score(loss_base, loss_ref)?)
    } else {
        None
    };
    let mean_entropy_base = rec
        .entropy_base
        .as_ref()
        .map(|e| e.iter().sum::<f64>() / e.len() as f64);
    Ok(ScoredDocument {
        id: doc.id.clone(),
        n_tokens: rec.nll_base.len() as u64,
        loss_base,
        loss_ref,
        rho_lm: rho_lm_score(loss_base, loss_ref),
        davir,
        mean_entropy_base,
    })
}

/// Score a joined corpus, sharding across `workers` threads.
///
/// Per-document computation is independent and the input contract is
/// id-sorted, so the output is identical for every worker count.
pub fn score_corpus(
    pairs: &[(Document, TokenLossRecord)],
    mode: AggregationMode,
    workers: usize,
) -> Result<Vec<ScoredDocument>> {
    crate::util::parallel_map(pairs, workers, |(doc, rec)| score_document(doc, rec, mode))
        .into_iter()
        .collect()
}
