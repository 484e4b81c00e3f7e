//! Evaluation statistics: win score, win rate, percentile-bootstrap
//! confidence intervals, and Welch's t-test.
//!
//! Bootstrap resampling is counter-based seeded (one substream per
//! resample), so the loop can be sharded across any worker count without
//! changing a single draw.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::substream_rng;

/// Judged outcome of one question against the comparison model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Lose,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub question_id: String,
    pub result: Outcome,
}

/// Headline metric computed from an outcome stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMetric {
    WinScore,
    WinRate,
}

impl EvalMetric {
    pub fn name(self) -> &'static str {
        match self {
            EvalMetric::WinScore => "win-score",
            EvalMetric::WinRate => "win-rate",
        }
    }

    /// Per-question contribution; the metric is the mean of these values.
    pub fn per_question(self, outcome: Outcome) -> f64 {
        match self {
            EvalMetric::WinScore => match outcome {
                Outcome::Win => 2.0,
                Outcome::Tie => 1.0,
                Outcome::Lose => 0.0,
            },
            EvalMetric::WinRate => match outcome {
                Outcome::Win => 1.0,
                _ => 0.0,
            },
        }
    }
}

impl std::str::FromStr for EvalMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "win-score" | "win_score" => Ok(EvalMetric::WinScore),
            "win-rate" | "win_rate" => Ok(EvalMetric::WinRate),
            other => Err(Error::InvalidParameter {
                name: "metric",
                reason: format!("expected win-score or win-rate, got {other:?}"),
            }),
        }
    }
}

fn tally(outcomes: &[OutcomeRecord]) -> Result<(f64, f64, f64)> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput { what: "outcomes" });
    }
    let wins = outcomes.iter().filter(|o| o.result == Outcome::Win).count();
    let loses = outcomes.iter().filter(|o| o.result == Outcome::Lose).count();
    Ok((wins as f64, loses as f64, outcomes.len() as f64))
}

/// `1 + (wins - losses) / total`, ties counted in the total only.
/// 1.0 is parity with the comparison model; the range is [0, 2].
pub fn win_score(outcomes: &[OutcomeRecord]) -> Result<f64> {
    let (wins, loses, total) = tally(outcomes)?;
    Ok(1.0 + (wins - loses) / total)
}

/// `wins / total` against a frozen baseline; ties are not wins.
pub fn win_rate(outcomes: &[OutcomeRecord]) -> Result<f64> {
    let (wins, _, total) = tally(outcomes)?;
    Ok(wins / total)
}

/// `losses / total`.
pub fn lose_rate(outcomes: &[OutcomeRecord]) -> Result<f64> {
    let (_, loses, total) = tally(outcomes)?;
    Ok(loses / total)
}

/// Percentile-bootstrap confidence interval for a mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub point_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub n_resamples: usize,
    pub seed: u64,
}

fn check_bootstrap_params(n_values: usize, n_resamples: usize, level: f64) -> Result<()> {
    if n_values < 2 {
        return Err(Error::TooFewSamples { got: n_values });
    }
    if n_resamples < 100 {
        return Err(Error::InvalidParameter {
            name: "n_resamples",
            reason: format!("need at least 100 resamples, got {n_resamples}"),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter {
            name: "level",
            reason: format!("confidence level must lie in (0, 1), got {level}"),
        });
    }
    Ok(())
}

/// Mean of each bootstrap resample (size `values.len()`, drawn with
/// replacement). Values are sorted internally first, so the distribution
/// depends only on the multiset of inputs and the seed.
pub fn bootstrap_resample_means(
    values: &[f64],
    n_resamples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::TooFewSamples { got: values.len() });
    }
    let mut pool = values.to_vec();
    pool.sort_by(f64::total_cmp);
    let n = pool.len();
    Ok((0..n_resamples)
        .map(|r| {
            let mut rng = substream_rng(seed, r as u64);
            let mut sum = 0.0;
            for _ in 0..n {
                sum += pool[rng.random_range(0..n)];
            }
            sum / n as f64
        })
        .collect())
}

/// Empirical quantile with linear interpolation over a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Percentile CI for the mean at the given confidence level, deterministic
/// under the seed.
pub fn bootstrap_mean_ci(
    values: &[f64],
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapReport> {
    check_bootstrap_params(values.len(), n_resamples, level)?;
    let mut means = bootstrap_resample_means(values, n_resamples, seed)?;
    means.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok(BootstrapReport {
        point_estimate: values.iter().sum::<f64>() / values.len() as f64,
        ci_low: quantile(&means, alpha / 2.0),
        ci_high: quantile(&means, 1.0 - alpha / 2.0),
        level,
        n_resamples,
        seed,
    })
}

/// Which tail of the t distribution the test reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// One-sided: mean of the first sample exceeds the second's.
    Greater,
    TwoSided,
}

fn mean_and_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t-test.
///
/// Degenerate inputs (both samples constant): equal means give p = 0.5
/// one-sided (1.0 two-sided) by convention; unequal means give 0 or 1
/// according to the direction.
pub fn welch_t_test(
    sample_a: &[f64],
    sample_b: &[f64],
    alternative: Alternative,
) -> Result<f64> {
    for sample in [sample_a, sample_b] {
        if sample.len() < 2 {
            return Err(Error::TooFewSamples { got: sample.len() });
        }
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput {
                name: "t-test sample".into(),
            });
        }
    }
    let (mean_a, var_a) = mean_and_var(sample_a);
    let (mean_b, var_b) = mean_and_var(sample_b);
    let term_a = var_a / sample_a.len() as f64;
    let term_b = var_b / sample_b.len() as f64;
    let se2 = term_a + term_b;

    if se2 == 0.0 {
        return Ok(match alternative {
            Alternative::Greater => {
                if mean_a == mean_b {
                    0.5
                } else if mean_a > mean_b {
                    0.0
                } else {
                    1.0
                }
            }
            Alternative::TwoSided => {
                if mean_a == mean_b {
                    1.0
                } else {
                    0.0
                }
            }
        });
    }

    // Welch-Satterthwaite degrees of freedom.
    let df = se2 * se2
        / (term_a * term_a / (sample_a.len() as f64 - 1.0)
            + term_b * term_b / (sample_b.len() as f64 - 1.0));
    let t = (mean_a - mean_b) / se2.sqrt();
    Ok(match alternative {
        Alternative::Greater => special::student_t_sf(t, df),
        Alternative::TwoSided => 2.0 * special::student_t_sf(t.abs(), df),
    })
}

/// Log-gamma, regularized incomplete beta, and the Student-t survival
/// function, accurate to about 1e-13 (documented tolerance 1e-10).
pub mod special {
    /// Lanczos approximation (g = 7, 9 terms).
    #[allow(clippy::excessive_precision)] // published coefficient table
    pub fn ln_gamma(z: f64) -> f64 {
        const COEFFS: [f64; 8] = [
            676.5203681218851,
            -1259.1392167224028,
            771.32342877765313,
            -176.61502916214059,
            12.507343278686905,
            -0.13857109526572012,
            9.9843695780195716e-6,
            1.5056327351493116e-7,
        ];
        if z < 0.5 {
            // Reflection: Γ(z)Γ(1−z) = π / sin(πz)
            return std::f64::consts::PI.ln()
                - (std::f64::consts::PI * z).sin().ln()
                - ln_gamma(1.0 - z);
        }
        let z = z - 1.0;
        let mut x = 0.99999999999980993;
        for (i, c) in COEFFS.iter().enumerate() {
            x += c / (z + i as f64 + 1.0);
        }
        let t = z + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
    }

    /// Continued fraction for the incomplete beta (modified Lentz).
    fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
        const MAX_ITER: usize = 500;
        const EPS: f64 = 1e-15;
        const TINY: f64 = 1e-300;

        let qab = a + b;
        let qap = a + 1.0;
        let qam = a - 1.0;
        let mut c = 1.0;
        let mut d = 1.0 - qab * x / qap;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        let mut h = d;
        for m in 1..=MAX_ITER {
            let m = m as f64;
            let m2 = 2.0 * m;
            let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
            d = 1.0 + aa * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + aa / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            h *= d * c;
            let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
            d = 1.0 + aa * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + aa / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        h
    }

    /// Regularized incomplete beta function I_x(a, b).
    pub fn regularized_inc_beta(a: f64, b: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
            + a * x.ln()
            + b * (1.0 - x).ln();
        let front = ln_front.exp();
        if x < (a + 1.0) / (a + b + 2.0) {
            front * beta_cf(a, b, x) / a
        } else {
            1.0 - front * beta_cf(b, a, 1.0 - x) / b
        }
    }

    /// Survival function P(T > t) of Student's t with `df` degrees of
    /// freedom.
    pub fn student_t_sf(t: f64, df: f64) -> f64 {
        let x = df / (df + t * t);
        let tail = 0.5 * regularized_inc_beta(df / 2.0, 0.5, x);
        if t >= 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }
}
