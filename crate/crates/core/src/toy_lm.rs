//! Character-level add-λ n-gram models standing in for the base and
//! reference causal LMs at desk scale.
//!
//! The scoring pipeline consumes only per-token losses, so an exact,
//! dependency-free model is enough to exercise it end to end: `fit` plays
//! the pre-trained base model and `finetune` (count interpolation toward a
//! training corpus) plays full-dataset fine-tuning, which lowers the loss of
//! learnable documents the way real fine-tuning does.
//!
//! Smoothing keeps every conditional probability strictly positive, so all
//! NLLs are finite. Models are immutable after construction and scoring is
//! read-only, so documents can be scored from any number of threads.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus_io::Document;
use crate::error::{Error, Result};

/// Context length of a freshly configured model.
pub const DEFAULT_ORDER: usize = 3;
/// Default add-λ smoothing mass.
pub const DEFAULT_LAMBDA: f64 = 0.1;
/// Default interpolation weight for [`NGramModel::finetune`].
pub const DEFAULT_MIX_WEIGHT: f64 = 0.9;

const BOS: u32 = 0;
const EOS: u32 = 1;
/// Sentinel for symbols outside the vocabulary; never present in any count
/// table, so such symbols always receive the smoothing floor.
const UNKNOWN: u32 = u32::MAX;

const MODEL_FORMAT_VERSION: u32 = 1;

/// Ordered symbol table: id 0 is BOS, id 1 is EOS, characters follow in
/// sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Vocab {
    chars: Vec<char>,
}

impl Vocab {
    fn from_chars(mut chars: Vec<char>) -> Self {
        chars.sort_unstable();
        chars.dedup();
        Vocab { chars }
    }

    fn size(&self) -> usize {
        self.chars.len() + 2
    }

    fn id_of(&self, c: char) -> u32 {
        match self.chars.binary_search(&c) {
            Ok(i) => i as u32 + 2,
            Err(_) => UNKNOWN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
struct ContextCounts {
    next: BTreeMap<u32, f64>,
    total: f64,
}

/// Smoothed character n-gram model over prompt+response text.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    lambda: f64,
    vocab: Vocab,
    counts: BTreeMap<Box<[u32]>, ContextCounts>,
}

fn doc_chars(doc: &Document) -> impl Iterator<Item = char> + '_ {
    doc.prompt.chars().chain(doc.response.chars())
}

fn validate_params(order: usize, lambda: f64) -> Result<()> {
    if order < 1 {
        return Err(Error::InvalidParameter {
            name: "order",
            reason: "context length must be at least 1".into(),
        });
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("smoothing mass must be a positive real, got {lambda}"),
        });
    }
    Ok(())
}

impl NGramModel {
    /// Count all (context, next) pairs over BOS-padded prompt+response
    /// concatenations with a trailing EOS.
    pub fn fit(docs: &[Document], order: usize, lambda: f64) -> Result<Self> {
        validate_params(order, lambda)?;
        if docs.is_empty() {
            return Err(Error::EmptyInput { what: "corpus" });
        }
        let vocab = Vocab::from_chars(docs.iter().flat_map(doc_chars).collect());
        let mut model = NGramModel {
            order,
            lambda,
            vocab,
            counts: BTreeMap::new(),
        };
        for doc in docs {
            model.accumulate(doc, 1.0);
        }
        model.refresh_totals();
        Ok(model)
    }

    /// Interpolate counts toward a training corpus:
    /// `(1 - mix_weight) * base + mix_weight * counts(corpus)`, over the
    /// union vocabulary. `mix_weight = 1` reproduces `fit(corpus)` exactly.
    pub fn finetune(&self, docs: &[Document], mix_weight: f64) -> Result<Self> {
        if !mix_weight.is_finite() || mix_weight <= 0.0 || mix_weight > 1.0 {
            return Err(Error::InvalidParameter {
                name: "mix_weight",
                reason: format!("must lie in (0, 1], got {mix_weight}"),
            });
        }
        if docs.is_empty() {
            return Err(Error::EmptyInput { what: "corpus" });
        }

        let mut chars = self.vocab.chars.clone();
        chars.extend(docs.iter().flat_map(doc_chars));
        let vocab = Vocab::from_chars(chars);

        let mut model = NGramModel {
            order: self.order,
            lambda: self.lambda,
            vocab,
            counts: BTreeMap::new(),
        };

        let keep = 1.0 - mix_weight;
        if keep > 0.0 {
            for (ctx, cc) in &self.counts {
                let new_ctx: Box<[u32]> = ctx
                    .iter()
                    .map(|&id| self.remap_id(id, &model.vocab))
                    .collect();
                let entry = model.counts.entry(new_ctx).or_default();
                for (&sym, &count) in &cc.next {
                    *entry
                        .next
                        .entry(self.remap_id(sym, &model.vocab))
                        .or_insert(0.0) += keep * count;
                }
            }
        }
        for doc in docs {
            model.accumulate(doc, mix_weight);
        }
        model.refresh_totals();
        Ok(model)
    }

    fn remap_id(&self, id: u32, target: &Vocab) -> u32 {
        if id == BOS || id == EOS || id == UNKNOWN {
            id
        } else {
            target.id_of(self.vocab.chars[(id - 2) as usize])
        }
    }

    fn accumulate(&mut self, doc: &Document, weight: f64) {
        let seq = self.sequence(doc);
        for pos in self.order..seq.len() {
            let ctx: Box<[u32]> = seq[pos - self.order..pos].into();
            let entry = self.counts.entry(ctx).or_default();
            *entry.next.entry(seq[pos]).or_insert(0.0) += weight;
        }
    }

    fn refresh_totals(&mut self) {
        for cc in self.counts.values_mut() {
            cc.total = cc.next.values().sum();
        }
    }

    /// BOS-padded id sequence: `BOS^order, prompt, response, EOS`.
    fn sequence(&self, doc: &Document) -> Vec<u32> {
        let mut seq = vec![BOS; self.order];
        seq.extend(doc_chars(doc).map(|c| self.vocab.id_of(c)));
        seq.push(EOS);
        seq
    }

    fn prob(&self, ctx: &[u32], sym: u32) -> f64 {
        let v = self.vocab.size() as f64;
        match self.counts.get(ctx) {
            Some(cc) => {
                let count = cc.next.get(&sym).copied().unwrap_or(0.0);
                (count + self.lambda) / (cc.total + self.lambda * v)
            }
            None => 1.0 / v,
        }
    }

    fn entropy(&self, ctx: &[u32]) -> f64 {
        let v = self.vocab.size() as f64;
        match self.counts.get(ctx) {
            Some(cc) => {
                let denom = cc.total + self.lambda * v;
                let floor = self.lambda / denom;
                let mut h = -(v - cc.next.len() as f64) * floor * floor.ln();
                for count in cc.next.values() {
                    let p = (count + self.lambda) / denom;
                    h -= p * p.ln();
                }
                h
            }
            None => v.ln(),
        }
    }

    /// Per-token NLL (nats) of the response plus the trailing EOS, each
    /// conditioned on the preceding context spanning from the prompt into
    /// the response.
    pub fn response_nll(&self, doc: &Document) -> Vec<f64> {
        let seq = self.sequence(doc);
        let response_start = self.order + doc.prompt.chars().count();
        (response_start..seq.len())
            .map(|pos| -self.prob(&seq[pos - self.order..pos], seq[pos]).ln())
            .collect()
    }

    /// Shannon entropy (nats) of the predictive distribution at each
    /// response position; aligned with [`NGramModel::response_nll`].
    pub fn response_entropy(&self, doc: &Document) -> Vec<f64> {
        let seq = self.sequence(doc);
        let response_start = self.order + doc.prompt.chars().count();
        (response_start..seq.len())
            .map(|pos| self.entropy(&seq[pos - self.order..pos]))
            .collect()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Symbol count including the BOS/EOS sentinels.
    pub fn vocab_size(&self) -> usize {
        self.vocab.size()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            order: self.order,
            lambda: self.lambda,
            chars: self.vocab.chars.iter().collect(),
            counts: self
                .counts
                .iter()
                .map(|(ctx, cc)| {
                    (
                        ctx.to_vec(),
                        cc.next.iter().map(|(&s, &c)| (s, c)).collect(),
                    )
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(json: &str, origin: impl AsRef<Path>) -> Result<Self> {
        let origin = origin.as_ref();
        let format_err = |reason: String| Error::ModelFormat {
            path: origin.to_path_buf(),
            reason,
        };
        let file: ModelFile =
            serde_json::from_str(json).map_err(|e| format_err(e.to_string()))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(format_err(format!(
                "unsupported format version {} (expected {MODEL_FORMAT_VERSION})",
                file.version
            )));
        }
        validate_params(file.order, file.lambda)
            .map_err(|e| format_err(e.to_string()))?;
        let vocab = Vocab::from_chars(file.chars.chars().collect());
        let max_id = vocab.size() as u32;
        let mut counts = BTreeMap::new();
        for (ctx, next) in file.counts {
            if ctx.len() != file.order {
                return Err(format_err("context width does not match order".into()));
            }
            let valid_id = |id: u32| id < max_id || id == UNKNOWN;
            if !ctx.iter().copied().all(valid_id) {
                return Err(format_err("context symbol out of range".into()));
            }
            let mut cc = ContextCounts::default();
            for (sym, count) in next {
                if !valid_id(sym) || !count.is_finite() || count < 0.0 {
                    return Err(format_err("invalid count entry".into()));
                }
                cc.next.insert(sym, count);
            }
            counts.insert(ctx.into_boxed_slice(), cc);
        }
        let mut model = NGramModel {
            order: file.order,
            lambda: file.lambda,
            vocab,
            counts,
        };
        model.refresh_totals();
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&json, path)
    }
}

type CountRows = Vec<(Vec<u32>, Vec<(u32, f64)>)>;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    order: usize,
    lambda: f64,
    chars: String,
    counts: CountRows,
}
