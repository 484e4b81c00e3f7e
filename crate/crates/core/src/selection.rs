//! Subset selection over scored corpora, plus the corpus-mixing workflow
//! and selection-overlap diagnostics.
//!
//! Everything here is deterministic: float-identical scores break ties by
//! id ascending, and random sampling depends only on (seed, usable id set),
//! never on input order.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{read_corpus, read_scores, Document, ScoredDocument};
use crate::error::{Error, Result};

/// Which score column drives the selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    Davir,
    RhoLm,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Highest,
    Lowest,
}

/// A selection request: metric, direction, subset size, and the sampling
/// seed (used by the random baseline only; ignored otherwise).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub metric: SelectionMetric,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    pub k: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_direction() -> Direction {
    Direction::Highest
}

fn metric_value(metric: SelectionMetric, doc: &ScoredDocument) -> Option<f64> {
    match metric {
        SelectionMetric::Davir => doc.davir,
        SelectionMetric::RhoLm => Some(doc.rho_lm),
        // The random baseline has no metric; every document is usable.
        SelectionMetric::Random => Some(0.0),
    }
}

/// Select up to `k` document ids from a scored corpus.
///
/// Documents with a null metric are excluded. Output length is
/// `min(k, usable)`; ties break by id ascending.
pub fn select(docs: &[ScoredDocument], spec: &SelectionSpec) -> Result<Vec<String>> {
    if spec.k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "subset size must be at least 1".into(),
        });
    }
    let mut usable: Vec<(&str, f64)> = docs
        .iter()
        .filter_map(|d| metric_value(spec.metric, d).map(|v| (d.id.as_str(), v)))
        .collect();
    if usable.is_empty() {
        return Err(Error::EmptyInput {
            what: "usable scored documents",
        });
    }
    let k = (spec.k as usize).min(usable.len());

    if spec.metric == SelectionMetric::Random {
        // Canonical order first so the draw depends only on the id set.
        let mut ids: Vec<&str> = usable.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        let mut rng = Pcg64::seed_from_u64(spec.seed);
        let n = ids.len();
        for i in 0..k {
            let j = rng.random_range(i..n);
            ids.swap(i, j);
        }
        let mut picked: Vec<String> = ids[..k].iter().map(|s| s.to_string()).collect();
        picked.sort_unstable();
        return Ok(picked);
    }

    usable.sort_by(|a, b| {
        let by_metric = match spec.direction {
            Direction::Highest => b.1.total_cmp(&a.1),
            Direction::Lowest => a.1.total_cmp(&b.1),
        };
        by_metric.then_with(|| a.0.cmp(b.0))
    });
    Ok(usable[..k].iter().map(|(id, _)| id.to_string()).collect())
}

/// `(shared count, shared fraction of the first list)` between two
/// selections. Lists are treated as id sets.
pub fn selection_overlap(a: &[String], b: &[String]) -> (usize, f64) {
    let set_a: HashSet<&str> = a.iter().map(String::as_str).collect();
    let set_b: HashSet<&str> = b.iter().map(String::as_str).collect();
    let count = set_a.intersection(&set_b).count();
    let fraction = if set_a.is_empty() {
        0.0
    } else {
        count as f64 / set_a.len() as f64
    };
    (count, fraction)
}

/// One corpus in a mixture: either taken whole or filtered through a
/// selection over its score file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixComponent {
    pub corpus: PathBuf,
    /// `None` means the whole corpus.
    #[serde(default)]
    pub select: Option<MixSelect>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixSelect {
    pub scores: PathBuf,
    #[serde(flatten)]
    pub spec: SelectionSpec,
}

/// A mixture of corpora, assembled in component order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixSpec {
    pub components: Vec<MixComponent>,
}

#[derive(Debug)]
pub struct MixOutcome {
    pub documents: Vec<Document>,
    /// Ids that re-appeared from the same source corpus (first occurrence
    /// wins).
    pub duplicates_skipped: usize,
    /// Documents renamed with a source prefix under the collision policy.
    pub renamed: usize,
    /// Selected ids that were missing from their component corpus.
    pub selected_missing: usize,
}

fn source_name(path: &std::path::Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Assemble a mixed corpus.
///
/// Components are concatenated in spec order with ids ascending within
/// each. Every document is tagged `source:<corpus stem>`. The same id from
/// the same corpus is deduplicated first-wins; the same id from different
/// corpora is an error unless `allow_collision`, which renames the later
/// document to `<corpus stem>/<id>`.
pub fn mix(spec: &MixSpec, allow_collision: bool) -> Result<MixOutcome> {
    if spec.components.is_empty() {
        return Err(Error::EmptyInput {
            what: "mix components",
        });
    }
    let mut seen: HashMap<String, String> = HashMap::new();
    let mut out = MixOutcome {
        documents: Vec::new(),
        duplicates_skipped: 0,
        renamed: 0,
        selected_missing: 0,
    };

    for component in &spec.components {
        let source = source_name(&component.corpus);
        let mut docs = read_corpus(&component.corpus)?;
        docs.sort_by(|a, b| a.id.cmp(&b.id));

        if let Some(selection) = &component.select {
            let scored = read_scores(&selection.scores)?;
            let chosen: HashSet<String> = select(&scored, &selection.spec)?.into_iter().collect();
            let n_found = docs.iter().filter(|d| chosen.contains(&d.id)).count();
            out.selected_missing += chosen.len() - n_found;
            docs.retain(|d| chosen.contains(&d.id));
        }

        for mut doc in docs {
            match seen.get(&doc.id) {
                Some(prior_source) if *prior_source == source => {
                    out.duplicates_skipped += 1;
                    continue;
                }
                Some(prior_source) => {
                    if !allow_collision {
                        return Err(Error::IdCollision {
                            id: doc.id,
                            first: prior_source.clone(),
                            second: source.clone(),
                        });
                    }
                    let renamed = format!("{source}/{}", doc.id);
                    if seen.contains_key(&renamed) {
                        return Err(Error::IdCollision {
                            id: renamed,
                            first: prior_source.clone(),
                            second: source.clone(),
                        });
                    }
                    doc.id = renamed;
                    out.renamed += 1;
                }
                None => {}
            }
            doc.tags
                .get_or_insert_with(Vec::new)
                .push(format!("source:{source}"));
            seen.insert(doc.id.clone(), source.clone());
            out.documents.push(doc);
        }
    }
    Ok(out)
}
