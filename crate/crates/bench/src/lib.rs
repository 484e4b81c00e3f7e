//! Synthetic data builders shared by the benchmark targets.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use davir_core::corpus_io::{Document, TokenLossRecord};
use davir_core::preference::PreferenceExample;

const ALPHABET: &[u8] = b"abcdefghijklmnop";

pub fn random_text(rng: &mut Pcg64, len: usize) -> String {
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

pub fn corpus(seed: u64, n: usize) -> Vec<Document> {
    let mut rng = Pcg64::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let prompt_len = rng.random_range(5..20);
            let response_len = rng.random_range(20..120);
            Document {
                id: format!("doc{i:05}"),
                prompt: random_text(&mut rng, prompt_len),
                response: random_text(&mut rng, response_len),
                tags: None,
            }
        })
        .collect()
}

pub fn joined_losses(seed: u64, n: usize) -> Vec<(Document, TokenLossRecord)> {
    let mut rng = Pcg64::seed_from_u64(seed);
    corpus(seed, n)
        .into_iter()
        .map(|doc| {
            let len = rng.random_range(5..400usize);
            let keep = rng.random_range(0.2..0.9);
            let nll_base: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..6.0)).collect();
            let nll_ref: Vec<f64> = nll_base.iter().map(|v| v * keep).collect();
            let rec = TokenLossRecord {
                id: doc.id.clone(),
                nll_base,
                nll_ref,
                entropy_base: None,
            };
            (doc, rec)
        })
        .collect()
}

pub fn preference_examples(seed: u64, n: usize) -> Vec<PreferenceExample> {
    let mut rng = Pcg64::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let ref_w = -rng.random_range(5.0..60.0);
            let ref_l = -rng.random_range(5.0..60.0);
            PreferenceExample {
                id: format!("pref{i:05}"),
                logp_policy_w: ref_w + rng.random_range(-2.0..2.0_f64).min(-ref_w - 0.01),
                logp_ref_w: ref_w,
                logp_policy_l: ref_l + rng.random_range(-2.0..1.0_f64).min(-ref_l - 0.01),
                logp_ref_l: ref_l,
                len_w: rng.random_range(1..500),
                len_l: rng.random_range(1..500),
            }
        })
        .collect()
}

pub fn gaussianish(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = Pcg64::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            // Irwin-Hall(8), close enough to Gaussian for benchmarks.
            (0..8).map(|_| rng.random::<f64>()).sum::<f64>() - 4.0
        })
        .collect()
}
