//! Core-set selection for causal-LM post-training data.
//!
//! The pipeline scores every training document by how much a fine-tuned
//! reference model reduced its loss relative to the pre-trained base model,
//! normalizes that reduction by the base loss to strip out sequence-length
//! bias, and selects the top-k subset for re-training. Supporting machinery
//! covers the JSONL interchange formats, a self-contained character n-gram
//! model pair for desk-scale runs, length-bias diagnostics, corpus mixing,
//! the normalized preference objective with verified gradients, and the
//! evaluation statistics (win score/rate, bootstrap intervals, Welch
//! t-tests) used to compare selections.

pub mod corpus_io;
pub mod error;
pub mod eval_stats;
pub mod length_diagnostics;
pub mod preference;
pub mod scoring;
pub mod selection;
pub mod toy_lm;
pub mod util;

pub use corpus_io::{Document, ModelLossDump, ScoredDocument, TokenLossRecord};
pub use error::{Error, ErrorClass, Result};
pub use eval_stats::{Alternative, BootstrapReport, EvalMetric, Outcome, OutcomeRecord};
pub use length_diagnostics::{CorrelationReport, Statistic};
pub use preference::{DpoVariant, ObjectiveValue, PreferenceExample};
pub use scoring::{AggregationMode, Beta};
pub use selection::{Direction, MixSpec, SelectionMetric, SelectionSpec};
pub use toy_lm::NGramModel;
