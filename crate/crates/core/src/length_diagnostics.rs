//! Length-dependency diagnostics: Pearson and Spearman correlation of any
//! per-document statistic against response token count.
//!
//! Loss- and entropy-style statistics of sequential models fall as context
//! accumulates, which drags unnormalized learnability scores toward short
//! documents. These reports quantify that pull for each candidate statistic.

use serde::Serialize;

use crate::corpus_io::ScoredDocument;
use crate::error::{Error, Result};

/// Pearson/Spearman pair for one statistic against a length variable.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub statistic_name: String,
    pub pearson: f64,
    pub spearman: f64,
    pub n: usize,
    pub against: String,
}

fn check_inputs(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::CorrelationLengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples { got: xs.len() });
    }
    for (name, arr) in [("xs", xs), ("ys", ys)] {
        if arr.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { name: name.into() });
        }
    }
    Ok(())
}

/// Product-moment correlation. Symmetric in its arguments bit-for-bit;
/// zero variance in either array is an error rather than NaN.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_inputs(xs, ys)?;
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sum_xy = 0.0;
    let mut sum_xx = 0.0;
    let mut sum_yy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sum_xy += dx * dy;
        sum_xx += dx * dx;
        sum_yy += dy * dy;
    }
    if sum_xx == 0.0 {
        return Err(Error::ZeroVariance { name: "xs".into() });
    }
    if sum_yy == 0.0 {
        return Err(Error::ZeroVariance { name: "ys".into() });
    }
    Ok(sum_xy / (sum_xx * sum_yy).sqrt())
}

/// Average ranks (1-based); ties receive the mean of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // sorted positions start..end hold ranks start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Rank correlation: Pearson over average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_inputs(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Per-document statistic to correlate against length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    LossBase,
    LossRef,
    /// `loss_base / n_tokens`; the per-token mean when scores were
    /// sum-aggregated.
    MeanLossBase,
    MeanEntropyBase,
    RhoLm,
    Davir,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::LossBase => "loss_base",
            Statistic::LossRef => "loss_ref",
            Statistic::MeanLossBase => "mean_loss_base",
            Statistic::MeanEntropyBase => "mean_entropy_base",
            Statistic::RhoLm => "rho_lm",
            Statistic::Davir => "davir",
        }
    }

    /// Value of this statistic for one document; `None` when undefined
    /// (null DavIR, or entropy absent from the loss dump).
    pub fn value(self, doc: &ScoredDocument) -> Option<f64> {
        match self {
            Statistic::LossBase => Some(doc.loss_base),
            Statistic::LossRef => Some(doc.loss_ref),
            Statistic::MeanLossBase => Some(doc.loss_base / doc.n_tokens as f64),
            Statistic::MeanEntropyBase => doc.mean_entropy_base,
            Statistic::RhoLm => Some(doc.rho_lm),
            Statistic::Davir => doc.davir,
        }
    }
}

impl std::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loss_base" | "loss-base" => Ok(Statistic::LossBase),
            "loss_ref" | "loss-ref" => Ok(Statistic::LossRef),
            "mean_loss_base" | "mean-loss-base" => Ok(Statistic::MeanLossBase),
            "mean_entropy_base" | "mean-entropy-base" => Ok(Statistic::MeanEntropyBase),
            "rho_lm" | "rho-lm" => Ok(Statistic::RhoLm),
            "davir" => Ok(Statistic::Davir),
            other => Err(Error::InvalidParameter {
                name: "statistic",
                reason: format!("unknown statistic {other:?}"),
            }),
        }
    }
}

/// Correlate a statistic against `n_tokens` over a scored corpus.
/// Documents with a null statistic are excluded; the exclusion count is
/// `docs.len() - report.n`.
pub fn length_report(docs: &[ScoredDocument], statistic: Statistic) -> Result<CorrelationReport> {
    let mut values = Vec::with_capacity(docs.len());
    let mut lengths = Vec::with_capacity(docs.len());
    for doc in docs {
        if let Some(v) = statistic.value(doc) {
            values.push(v);
            lengths.push(doc.n_tokens as f64);
        }
    }
    if values.len() < 2 {
        return Err(Error::TooFewSamples { got: values.len() });
    }
    let rename = |err: Error| match err {
        Error::ZeroVariance { name } => Error::ZeroVariance {
            name: if name == "xs" {
                statistic.name().into()
            } else {
                "n_tokens".into()
            },
        },
        other => other,
    };
    let pearson_r = pearson(&values, &lengths).map_err(rename)?;
    let spearman_r = spearman(&values, &lengths).map_err(rename)?;
    Ok(CorrelationReport {
        statistic_name: statistic.name().into(),
        pearson: pearson_r,
        spearman: spearman_r,
        n: values.len(),
        against: "n_tokens".into(),
    })
}

/// Documents sorted by statistic descending (rank 1 = highest score),
/// paired with their token counts. Ties break by id ascending; documents
/// with a null statistic are excluded.
pub fn rank_length_profile(
    docs: &[ScoredDocument],
    statistic: Statistic,
) -> Vec<(usize, u64)> {
    let mut usable: Vec<(&ScoredDocument, f64)> = docs
        .iter()
        .filter_map(|d| statistic.value(d).map(|v| (d, v)))
        .collect();
    usable.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id)));
    usable
        .iter()
        .enumerate()
        .map(|(i, (d, _))| (i + 1, d.n_tokens))
        .collect()
}

/// Serialize a rank/length profile as CSV with a header row.
pub fn profile_to_csv(profile: &[(usize, u64)]) -> String {
    let mut out = String::from("rank,n_tokens\n");
    for (rank, n_tokens) in profile {
        out.push_str(&format!("{rank},{n_tokens}\n"));
    }
    out
}

/// Parse a CSV produced by [`profile_to_csv`].
pub fn profile_from_csv(csv: &str) -> Result<Vec<(usize, u64)>> {
    let mut out = Vec::new();
    for (i, line) in csv.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse = |field: Option<&str>| -> Result<u64> {
            field
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| Error::InvalidParameter {
                    name: "profile csv",
                    reason: format!("bad row {:?} at line {}", line, i + 1),
                })
        };
        let rank = parse(fields.next())? as usize;
        let n_tokens = parse(fields.next())?;
        out.push((rank, n_tokens));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_perfect_self_correlation() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn pearson_perfect_anti_correlation() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn pearson_matches_raw_moment_formula() {
        // Independent route: r = (nΣxy − ΣxΣy) / sqrt((nΣx²−(Σx)²)(nΣy²−(Σy)²))
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 3.0, 2.0, 5.0];
        let n = xs.len() as f64;
        let (sx, sy): (f64, f64) = (xs.iter().sum(), ys.iter().sum());
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let syy: f64 = ys.iter().map(|y| y * y).sum();
        let oracle =
            (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
        let got = pearson(&xs, &ys).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 0.831_521_840_620_299_9).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_degenerate_inputs() {
        assert!(matches!(
            pearson(&[1.0], &[1.0]),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::CorrelationLengthMismatch { .. })
        ));
        assert!(matches!(
            pearson(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroVariance { .. })
        ));
        assert!(matches!(
            pearson(&[f64::NAN, 1.0], &[1.0, 2.0]),
            Err(Error::NonFiniteInput { .. })
        ));
    }

    #[test]
    fn ranks_average_over_ties() {
        assert_eq!(
            average_ranks(&[1.0, 2.0, 2.0, 3.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
    }

    #[test]
    fn spearman_is_one_for_monotone_pairings() {
        let xs = [0.1f64, 1.0, 2.0, 50.0];
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        assert_eq!(spearman(&xs, &ys).unwrap(), 1.0);
    }

    #[test]
    fn spearman_hand_computed_example() {
        let got = spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert!((got - 0.6).abs() < 1e-15);
    }

    fn scored(id: &str, n_tokens: u64, loss_base: f64, davir: Option<f64>) -> ScoredDocument {
        ScoredDocument {
            id: id.into(),
            n_tokens,
            loss_base,
            loss_ref: loss_base / 2.0,
            rho_lm: loss_base / 2.0,
            davir,
            mean_entropy_base: None,
        }
    }

    #[test]
    fn constant_statistic_is_reported_as_zero_variance() {
        let docs = vec![
            scored("a", 10, 2.0, Some(0.5)),
            scored("b", 20, 4.0, Some(0.5)),
        ];
        let err = length_report(&docs, Statistic::Davir).unwrap_err();
        match err {
            Error::ZeroVariance { name } => assert_eq!(name, "davir"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn mean_loss_correlates_negatively_when_per_token_nll_decays() {
        // nll at position t is 1/(1+t), so the per-token mean falls with
        // length by construction; only the sign is asserted.
        let docs: Vec<ScoredDocument> = (0..40)
            .map(|i| {
                let n = 5 + 12 * i as u64;
                let total: f64 = (0..n).map(|t| 1.0 / (1.0 + t as f64)).sum();
                scored(&format!("d{i:03}"), n, total, Some(0.5))
            })
            .collect();
        let report = length_report(&docs, Statistic::MeanLossBase).unwrap();
        assert!(report.pearson < 0.0);
        assert!(report.spearman < 0.0);
        assert_eq!(report.n, 40);
        assert_eq!(report.against, "n_tokens");
    }

    #[test]
    fn null_statistics_are_excluded_with_a_count() {
        let docs = vec![
            scored("a", 10, 2.0, Some(0.9)),
            scored("b", 20, 4.0, None),
            scored("c", 30, 6.0, Some(0.1)),
        ];
        let report = length_report(&docs, Statistic::Davir).unwrap();
        assert_eq!(report.n, 2);
        assert_eq!(docs.len() - report.n, 1);
    }

    #[test]
    fn profile_sorts_by_score_then_id() {
        let docs = vec![
            scored("c", 30, 1.0, Some(0.1)),
            scored("a", 10, 1.0, Some(0.9)),
            scored("b", 20, 1.0, Some(0.5)),
        ];
        let profile = rank_length_profile(&docs, Statistic::Davir);
        assert_eq!(profile, vec![(1, 10), (2, 20), (3, 30)]);

        // Ties on the statistic break by id ascending.
        let tied = vec![
            scored("b", 20, 1.0, Some(0.5)),
            scored("a", 10, 1.0, Some(0.5)),
        ];
        let profile = rank_length_profile(&tied, Statistic::Davir);
        assert_eq!(profile, vec![(1, 10), (2, 20)]);
    }

    #[test]
    fn profile_csv_round_trips() {
        let profile = vec![(1, 10), (2, 20), (3, 30)];
        let csv = profile_to_csv(&profile);
        assert_eq!(profile_from_csv(&csv).unwrap(), profile);
    }
}
