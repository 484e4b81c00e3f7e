//! Streaming ingestion, validation, and emission of the JSONL interchange
//! formats: corpora, per-token loss dumps, score files, preference pairs,
//! and judged outcomes.
//!
//! All interchange is one JSON object per line so loss producers in any
//! ecosystem can participate. Numbers round-trip bit-for-bit (shortest
//! representation that parses back to the identical f64).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval_stats::OutcomeRecord;
use crate::preference::PreferenceExample;

/// One training datum: a prompt/response pair with an optional set of
/// domain tags used when mixing corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub prompt: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
}

/// Per-response-token negative log-likelihoods (nats) under the base and
/// reference models, plus optional per-position predictive entropies of the
/// base model. Arrays cover response tokens only; prompt positions must be
/// masked out by the producer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLossRecord {
    pub id: String,
    pub nll_base: Vec<f64>,
    pub nll_ref: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_base: Option<Vec<f64>>,
}

/// Loss dump from a single model run: one NLL per response token, with
/// optional per-position predictive entropies. Two dumps (base + reference)
/// pair up into [`TokenLossRecord`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelLossDump {
    pub id: String,
    pub nll: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<Vec<f64>>,
}

/// Aggregated document losses and the derived learnability scores.
///
/// `davir` is `None` when the base loss is zero: data the base model has
/// already memorized has no defined relative loss reduction and must never
/// rank top-k, so it is flagged rather than mapped to ±infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDocument {
    pub id: String,
    pub n_tokens: u64,
    pub loss_base: f64,
    pub loss_ref: f64,
    pub rho_lm: f64,
    pub davir: Option<f64>,
    /// Mean per-position predictive entropy of the base model, carried for
    /// length diagnostics only; never serialized into score files.
    #[serde(skip)]
    pub mean_entropy_base: Option<f64>,
}

/// Streaming JSONL reader yielding `(line_number, record)` pairs.
/// Line numbers are 1-based; blank lines are skipped.
pub struct JsonlReader<T> {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    _marker: PhantomData<T>,
}

impl<T: DeserializeOwned> JsonlReader<T> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        Ok(Self {
            path,
            lines: BufReader::new(file).lines(),
            line_no: 0,
            _marker: PhantomData,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl<T: DeserializeOwned> Iterator for JsonlReader<T> {
    type Item = Result<(usize, T)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(source) => {
                    return Some(Err(Error::Io {
                        path: self.path.clone(),
                        source,
                    }))
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(&line)
                    .map(|record| (self.line_no, record))
                    .map_err(|source| Error::MalformedLine {
                        path: self.path.clone(),
                        line: self.line_no,
                        source,
                    }),
            );
        }
    }
}

/// Streaming corpus reader: validates each document and detects duplicate
/// ids across the whole stream.
pub struct CorpusReader {
    inner: JsonlReader<Document>,
    seen: HashSet<String>,
}

impl CorpusReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self {
            inner: JsonlReader::open(path)?,
            seen: HashSet::new(),
        })
    }
}

impl Iterator for CorpusReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, doc) = match self.inner.next()? {
            Ok(item) => item,
            Err(e) => return Some(Err(e)),
        };
        let path = self.inner.path();
        if doc.id.is_empty() {
            return Some(Err(Error::EmptyId {
                path: path.to_path_buf(),
                line,
            }));
        }
        if doc.response.is_empty() {
            return Some(Err(Error::EmptyResponse {
                path: path.to_path_buf(),
                line,
                id: doc.id,
            }));
        }
        if !self.seen.insert(doc.id.clone()) {
            return Some(Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: doc.id,
            }));
        }
        Some(Ok(doc))
    }
}

/// Read and validate a whole corpus file.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    CorpusReader::open(path)?.collect()
}

fn check_nll_array(id: &str, field: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidLossArray {
            id: id.to_string(),
            field,
        });
    }
    Ok(())
}

fn validate_loss_record(rec: &TokenLossRecord) -> Result<()> {
    check_nll_array(&rec.id, "nll_base", &rec.nll_base)?;
    check_nll_array(&rec.id, "nll_ref", &rec.nll_ref)?;
    if rec.nll_base.len() != rec.nll_ref.len() {
        return Err(Error::LossLengthMismatch {
            id: rec.id.clone(),
            base_len: rec.nll_base.len(),
            ref_len: rec.nll_ref.len(),
        });
    }
    if let Some(entropy) = &rec.entropy_base {
        if entropy.len() != rec.nll_base.len()
            || entropy.iter().any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::InvalidLossArray {
                id: rec.id.clone(),
                field: "entropy_base",
            });
        }
    }
    Ok(())
}

fn read_unique<T: DeserializeOwned>(
    path: impl AsRef<Path>,
    id_of: impl Fn(&T) -> &str,
    validate: impl Fn(&T) -> Result<()>,
) -> Result<Vec<T>> {
    let reader = JsonlReader::<T>::open(&path)?;
    let path = reader.path().to_path_buf();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for item in reader {
        let (line, record) = item?;
        let id = id_of(&record);
        if id.is_empty() {
            return Err(Error::EmptyId { path, line });
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId {
                path,
                line,
                id: id.to_string(),
            });
        }
        validate(&record)?;
        out.push(record);
    }
    Ok(out)
}

/// Read a joint loss file (`nll_base` + `nll_ref` per record).
pub fn read_loss_records(path: impl AsRef<Path>) -> Result<Vec<TokenLossRecord>> {
    read_unique(path, |r: &TokenLossRecord| &r.id, validate_loss_record)
}

/// Read a single-model loss dump (`nll` per record).
pub fn read_loss_dumps(path: impl AsRef<Path>) -> Result<Vec<ModelLossDump>> {
    read_unique(
        path,
        |r: &ModelLossDump| &r.id,
        |r| {
            check_nll_array(&r.id, "nll", &r.nll)?;
            if let Some(entropy) = &r.entropy {
                if entropy.len() != r.nll.len()
                    || entropy.iter().any(|v| !v.is_finite() || *v < 0.0)
                {
                    return Err(Error::InvalidLossArray {
                        id: r.id.clone(),
                        field: "entropy",
                    });
                }
            }
            Ok(())
        },
    )
}

/// Read a score file. Requires finite losses and at least one token per
/// record; the score identities themselves are the producer's contract.
pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<ScoredDocument>> {
    read_unique(
        path,
        |r: &ScoredDocument| &r.id,
        |r| {
            let finite = r.loss_base.is_finite()
                && r.loss_ref.is_finite()
                && r.rho_lm.is_finite()
                && r.davir.is_none_or(f64::is_finite);
            if r.n_tokens == 0 || !finite {
                return Err(Error::InvalidLossArray {
                    id: r.id.clone(),
                    field: "scores",
                });
            }
            Ok(())
        },
    )
}

/// Read a preference file, validating every example.
pub fn read_preferences(path: impl AsRef<Path>) -> Result<Vec<PreferenceExample>> {
    read_unique(path, |r: &PreferenceExample| &r.id, PreferenceExample::validate)
}

/// Read a judged-outcome file. `question_id`s may repeat (one model answer
/// per question is the common case, but re-judged questions are allowed).
pub fn read_outcomes(path: impl AsRef<Path>) -> Result<Vec<OutcomeRecord>> {
    let reader = JsonlReader::<OutcomeRecord>::open(path)?;
    reader.map(|item| item.map(|(_, rec)| rec)).collect()
}

/// Result of an id join: the matched pairs plus how many records on each
/// side went unmatched (excluded under the default warn-and-skip policy).
#[derive(Debug)]
pub struct JoinOutcome {
    /// Matched `(document, losses)` pairs, ordered by id ascending.
    pub pairs: Vec<(Document, TokenLossRecord)>,
    /// Corpus documents with no loss record.
    pub corpus_unmatched: usize,
    /// Loss records with no corpus document.
    pub losses_unmatched: usize,
}

/// Inner-join a corpus with its loss records by id.
///
/// Output is ordered by id ascending regardless of input order, so
/// downstream reductions are order-deterministic. Unmatched ids are counted
/// and skipped by default; under `strict` the first unmatched id is an error.
pub fn join_losses(
    docs: Vec<Document>,
    losses: Vec<TokenLossRecord>,
    strict: bool,
) -> Result<JoinOutcome> {
    let mut loss_by_id: std::collections::HashMap<String, TokenLossRecord> = losses
        .into_iter()
        .map(|rec| (rec.id.clone(), rec))
        .collect();

    let mut pairs = Vec::with_capacity(docs.len());
    let mut corpus_unmatched = 0usize;
    for doc in docs {
        match loss_by_id.remove(&doc.id) {
            Some(rec) => pairs.push((doc, rec)),
            None if strict => {
                return Err(Error::UnmatchedId {
                    id: doc.id,
                    side: "corpus",
                })
            }
            None => corpus_unmatched += 1,
        }
    }
    if strict {
        if let Some(id) = loss_by_id.keys().min() {
            return Err(Error::UnmatchedId {
                id: id.clone(),
                side: "losses",
            });
        }
    }
    let losses_unmatched = loss_by_id.len();
    pairs.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    Ok(JoinOutcome {
        pairs,
        corpus_unmatched,
        losses_unmatched,
    })
}

/// Result of pairing two single-model dumps into joint records.
#[derive(Debug)]
pub struct PairOutcome {
    /// Joint records, ordered by id ascending.
    pub records: Vec<TokenLossRecord>,
    /// Base-dump records with no reference counterpart.
    pub base_unmatched: usize,
    /// Reference-dump records with no base counterpart.
    pub ref_unmatched: usize,
}

/// Pair a base-model dump with a reference-model dump by id. Entropies are
/// taken from the base dump. Array lengths must agree per id.
pub fn pair_dumps(
    base: Vec<ModelLossDump>,
    reference: Vec<ModelLossDump>,
    strict: bool,
) -> Result<PairOutcome> {
    let mut ref_by_id: std::collections::HashMap<String, ModelLossDump> = reference
        .into_iter()
        .map(|rec| (rec.id.clone(), rec))
        .collect();

    let mut records = Vec::with_capacity(base.len());
    let mut base_unmatched = 0usize;
    for dump in base {
        match ref_by_id.remove(&dump.id) {
            Some(ref_dump) => {
                if dump.nll.len() != ref_dump.nll.len() {
                    return Err(Error::LossLengthMismatch {
                        id: dump.id,
                        base_len: dump.nll.len(),
                        ref_len: ref_dump.nll.len(),
                    });
                }
                records.push(TokenLossRecord {
                    id: dump.id,
                    nll_base: dump.nll,
                    nll_ref: ref_dump.nll,
                    entropy_base: dump.entropy,
                });
            }
            None if strict => {
                return Err(Error::UnmatchedId {
                    id: dump.id,
                    side: "base losses",
                })
            }
            None => base_unmatched += 1,
        }
    }
    if strict {
        if let Some(id) = ref_by_id.keys().min() {
            return Err(Error::UnmatchedId {
                id: id.clone(),
                side: "reference losses",
            });
        }
    }
    let ref_unmatched = ref_by_id.len();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(PairOutcome {
        records,
        base_unmatched,
        ref_unmatched,
    })
}

/// Write records as JSONL to an arbitrary writer.
pub fn write_jsonl<T: Serialize>(mut writer: impl Write, records: &[T]) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// Write records as JSONL to a file path (non-atomic; callers that need
/// crash-safe output should write to a temp file and rename).
pub fn write_jsonl_file<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_jsonl(BufWriter::new(file), records).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
