//! Preference-pair objectives: the standard DPO loss and its normalized
//! variant, with analytic gradients with respect to the aggregate policy
//! log-probabilities.
//!
//! The normalized variant divides each response's policy/reference log-ratio
//! by the magnitude of that response's reference log-probability, the same
//! normalization that removes length bias from the learnability score.
//! Gradients stop at the aggregate log-probabilities: any trainer applies
//! the chain rule through its own model, so the objective stays
//! trainer-agnostic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::length_diagnostics::{pearson, spearman, CorrelationReport};
use crate::scoring::Beta;
use crate::util::{neg_log_sigmoid, pairwise_sum, sigmoid};

/// A prompt with winning/losing responses, reduced to the four aggregate
/// log-probabilities (nats, sums over response tokens) plus response token
/// counts for length diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceExample {
    pub id: String,
    pub logp_policy_w: f64,
    pub logp_ref_w: f64,
    pub logp_policy_l: f64,
    pub logp_ref_l: f64,
    pub len_w: u64,
    pub len_l: u64,
}

impl PreferenceExample {
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidPreference {
            id: self.id.clone(),
            reason: reason.into(),
        };
        let logps = [
            self.logp_policy_w,
            self.logp_ref_w,
            self.logp_policy_l,
            self.logp_ref_l,
        ];
        if logps.iter().any(|v| !v.is_finite() || *v > 0.0) {
            return Err(invalid("log-probabilities must be finite and <= 0"));
        }
        if self.logp_ref_w == 0.0 || self.logp_ref_l == 0.0 {
            return Err(invalid(
                "reference log-probabilities must be nonzero (they normalize the margin)",
            ));
        }
        if self.len_w == 0 || self.len_l == 0 {
            return Err(invalid("response token counts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DpoVariant {
    Vanilla,
    Davir,
}

impl std::str::FromStr for DpoVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(DpoVariant::Vanilla),
            "davir" => Ok(DpoVariant::Davir),
            other => Err(Error::InvalidParameter {
                name: "variant",
                reason: format!("expected vanilla or davir, got {other:?}"),
            }),
        }
    }
}

/// Loss, the sigmoid argument it came from, and the partial derivatives of
/// the loss with respect to the two policy log-probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveValue {
    pub loss: f64,
    pub margin: f64,
    pub grad_logp_policy_w: f64,
    pub grad_logp_policy_l: f64,
}

/// Unnormalized margin:
/// `beta * (logratio(winner) - logratio(loser))`.
pub fn dpo_margin(ex: &PreferenceExample, beta: Beta) -> f64 {
    beta.value()
        * ((ex.logp_policy_w - ex.logp_ref_w) - (ex.logp_policy_l - ex.logp_ref_l))
}

/// Normalized margin: each log-ratio divided by the magnitude of its
/// reference log-probability.
pub fn davir_dpo_margin(ex: &PreferenceExample, beta: Beta) -> Result<f64> {
    if ex.logp_ref_w == 0.0 || ex.logp_ref_l == 0.0 {
        return Err(Error::InvalidPreference {
            id: ex.id.clone(),
            reason: "zero reference log-probability cannot normalize the margin".into(),
        });
    }
    let winner = (ex.logp_policy_w - ex.logp_ref_w) / ex.logp_ref_w.abs();
    let loser = (ex.logp_policy_l - ex.logp_ref_l) / ex.logp_ref_l.abs();
    Ok(beta.value() * (winner - loser))
}

/// Loss `-ln σ(margin)` (computed as `softplus(-margin)`, which cannot
/// overflow) and its gradients. Increasing the winner's likelihood always
/// reduces the loss; increasing the loser's always raises it.
pub fn objective(ex: &PreferenceExample, beta: Beta, variant: DpoVariant) -> Result<ObjectiveValue> {
    let (margin, coeff_w, coeff_l) = match variant {
        DpoVariant::Vanilla => (dpo_margin(ex, beta), 1.0, 1.0),
        DpoVariant::Davir => (
            davir_dpo_margin(ex, beta)?,
            1.0 / ex.logp_ref_w.abs(),
            1.0 / ex.logp_ref_l.abs(),
        ),
    };
    // d loss / d margin = -(1 - sigma(margin)) = -sigma(-margin)
    let slope = sigmoid(-margin);
    Ok(ObjectiveValue {
        loss: neg_log_sigmoid(margin),
        margin,
        grad_logp_policy_w: -slope * beta.value() * coeff_w,
        grad_logp_policy_l: slope * beta.value() * coeff_l,
    })
}

/// Batch reduction: per-example values in id-sorted order plus their means.
/// The pairwise summation over sorted input makes the means independent of
/// the stream's arrival order.
#[derive(Debug, Clone, Serialize)]
pub struct BatchObjective {
    pub n: usize,
    pub mean_loss: f64,
    pub mean_margin: f64,
    pub per_example: Vec<(String, ObjectiveValue)>,
}

pub fn batch_objective(
    examples: &[PreferenceExample],
    beta: Beta,
    variant: DpoVariant,
) -> Result<BatchObjective> {
    if examples.is_empty() {
        return Err(Error::EmptyInput {
            what: "preference examples",
        });
    }
    let mut sorted: Vec<&PreferenceExample> = examples.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut per_example = Vec::with_capacity(sorted.len());
    for ex in sorted {
        per_example.push((ex.id.clone(), objective(ex, beta, variant)?));
    }
    let losses: Vec<f64> = per_example.iter().map(|(_, v)| v.loss).collect();
    let margins: Vec<f64> = per_example.iter().map(|(_, v)| v.margin).collect();
    let n = per_example.len() as f64;
    Ok(BatchObjective {
        n: per_example.len(),
        mean_loss: pairwise_sum(&losses) / n,
        mean_margin: pairwise_sum(&margins) / n,
        per_example,
    })
}

/// Correlation of per-example margins against the winner/loser response
/// length difference.
pub fn length_diff_correlation(
    examples: &[PreferenceExample],
    beta: Beta,
    variant: DpoVariant,
) -> Result<CorrelationReport> {
    if examples.len() < 2 {
        return Err(Error::TooFewSamples {
            got: examples.len(),
        });
    }
    let mut margins = Vec::with_capacity(examples.len());
    let mut length_diffs = Vec::with_capacity(examples.len());
    for ex in examples {
        let margin = match variant {
            DpoVariant::Vanilla => dpo_margin(ex, beta),
            DpoVariant::Davir => davir_dpo_margin(ex, beta)?,
        };
        margins.push(margin);
        length_diffs.push(ex.len_w as f64 - ex.len_l as f64);
    }
    let name = match variant {
        DpoVariant::Vanilla => "margin_vanilla",
        DpoVariant::Davir => "margin_davir",
    };
    Ok(CorrelationReport {
        statistic_name: name.into(),
        pearson: pearson(&margins, &length_diffs)?,
        spearman: spearman(&margins, &length_diffs)?,
        n: examples.len(),
        against: "response_length_diff".into(),
    })
}
