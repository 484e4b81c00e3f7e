pub mod diagnose;
pub mod dpo;
pub mod eval;
pub mod mix;
pub mod score;
pub mod select;
pub mod toylm;

use davir_core::selection::{Direction, SelectionMetric};

// clap value parsers bridging to the library enums.

pub fn parse_aggregation(s: &str) -> Result<davir_core::AggregationMode, String> {
    s.parse().map_err(|e: davir_core::Error| e.to_string())
}

pub fn parse_statistic(s: &str) -> Result<davir_core::Statistic, String> {
    s.parse().map_err(|e: davir_core::Error| e.to_string())
}

pub fn parse_variant(s: &str) -> Result<davir_core::DpoVariant, String> {
    s.parse().map_err(|e: davir_core::Error| e.to_string())
}

pub fn parse_eval_metric(s: &str) -> Result<davir_core::EvalMetric, String> {
    s.parse().map_err(|e: davir_core::Error| e.to_string())
}

pub fn parse_selection_metric(s: &str) -> Result<SelectionMetric, String> {
    match s {
        "davir" => Ok(SelectionMetric::Davir),
        "rho-lm" | "rho_lm" => Ok(SelectionMetric::RhoLm),
        "random" => Ok(SelectionMetric::Random),
        other => Err(format!("expected davir, rho-lm, or random, got {other:?}")),
    }
}

pub fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "highest" => Ok(Direction::Highest),
        "lowest" => Ok(Direction::Lowest),
        other => Err(format!("expected highest or lowest, got {other:?}")),
    }
}
