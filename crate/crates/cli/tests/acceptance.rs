//! Acceptance suite: one test per release criterion, each printing a
//! `acceptance N: PASS/FAIL` line (run with `--nocapture` to see them) and
//! enforcing its tolerance and runtime budget.
//!
//! Run: `cargo test -p davir-cli --test acceptance -- --nocapture`

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use davir_core::corpus_io::{read_scores, write_jsonl_file, Document, TokenLossRecord};
use davir_core::eval_stats::{
    bootstrap_mean_ci, lose_rate, win_rate, win_score, Outcome, OutcomeRecord,
};
use davir_core::length_diagnostics::{pearson, spearman};
use davir_core::preference::{objective, DpoVariant, PreferenceExample};
use davir_core::scoring::{implicit_reward, rho_lm_score, score_corpus, AggregationMode, Beta};
use davir_core::selection::selection_overlap;
use davir_core::toy_lm::NGramModel;

fn report(criterion: u32, ok: bool, elapsed: Duration, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({elapsed:.2?}) — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "acceptance {criterion} failed: {detail}");
}

// 1. Normalizing the loss difference by either the base or the reference
//    loss yields the same document ranking: zero inversions over 10,000
//    random pairs with losses in (0, 10].
#[test]
fn criterion_1_ranking_invariance() {
    let start = Instant::now();
    let mut rng = Pcg64::seed_from_u64(101);
    let pairs: Vec<(f64, f64)> = (0..10_000)
        .map(|_| {
            (
                10.0 - rng.random_range(0.0..10.0),
                10.0 - rng.random_range(0.0..10.0),
            )
        })
        .collect();
    let by_base: Vec<f64> = pairs.iter().map(|(b, r)| (b - r) / b).collect();
    let by_ref: Vec<f64> = pairs.iter().map(|(b, r)| (b - r) / r).collect();
    let order = |scores: &[f64]| {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
        idx
    };
    let identical = order(&by_base) == order(&by_ref);
    let elapsed = start.elapsed();
    report(
        1,
        identical && elapsed < Duration::from_secs(1),
        elapsed,
        "denominator choice preserves the ranking over 10,000 pairs",
    );
}

// 2. Correlations match independent direct-formula / brute-force-rank
//    oracles within 1e-12 on 200 random vectors up to n = 1000, ties
//    included.
#[test]
fn criterion_2_correlation_oracles() {
    let start = Instant::now();
    let mut rng = Pcg64::seed_from_u64(202);
    let mut worst: f64 = 0.0;

    let raw_moment = |a: &[f64], b: &[f64]| -> f64 {
        let n = a.len() as f64;
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let saa: f64 = a.iter().map(|x| x * x).sum();
        let sbb: f64 = b.iter().map(|y| y * y).sum();
        (n * sab - sa * sb) / ((n * saa - sa * sa) * (n * sbb - sb * sb)).sqrt()
    };
    let brute_ranks = |a: &[f64]| -> Vec<f64> {
        a.iter()
            .map(|x| {
                let below = a.iter().filter(|y| *y < x).count() as f64;
                let tied = a.iter().filter(|y| *y == x).count() as f64;
                below + (tied + 1.0) / 2.0
            })
            .collect()
    };

    for case in 0..200 {
        let n = rng.random_range(2..=1000usize);
        // Half the cases are quantized to force ties.
        let quantize = case % 2 == 0;
        let draw = |rng: &mut Pcg64| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let v: f64 = rng.random_range(-10.0..10.0);
                    if quantize {
                        (v * 5.0).round() / 5.0
                    } else {
                        v
                    }
                })
                .collect()
        };
        let xs = draw(&mut rng);
        let ys = draw(&mut rng);
        if let Ok(got) = pearson(&xs, &ys) {
            worst = worst.max((got - raw_moment(&xs, &ys)).abs());
        }
        if let Ok(got) = spearman(&xs, &ys) {
            let oracle = raw_moment(&brute_ranks(&xs), &brute_ranks(&ys));
            worst = worst.max((got - oracle).abs());
        }
    }
    let elapsed = start.elapsed();
    report(
        2,
        worst < 1e-12 && elapsed < Duration::from_secs(5),
        elapsed,
        &format!("pearson/spearman vs oracles, worst abs deviation {worst:.2e}"),
    );
}

// 3. The length-decorrelation mechanism: on corpora whose per-token base
//    NLL decays with position (strong mean-loss/length correlation), the
//    normalized score is less length-correlated than the raw difference in
//    at least 95 of 100 seeds.
#[test]
fn criterion_3_length_decorrelation() {
    let start = Instant::now();
    let mut wins = 0usize;
    let mut premise_holds = true;
    for seed in 0..100u64 {
        let mut rng = Pcg64::seed_from_u64(seed);
        let pairs: Vec<(Document, TokenLossRecord)> = (0..1000)
            .map(|i| {
                let n = rng.random_range(5..=500usize);
                let scale = rng.random_range(0.8..1.25);
                let keep = rng.random_range(0.2..0.8);
                let nll_base: Vec<f64> = (0..n)
                    .map(|t| {
                        scale * (1.0 / (1.0 + t as f64).sqrt() + rng.random_range(0.0..0.02))
                    })
                    .collect();
                let nll_ref: Vec<f64> = nll_base
                    .iter()
                    .map(|v| keep * v + rng.random_range(0.0..0.01))
                    .collect();
                let id = format!("d{i:04}");
                (
                    Document {
                        id: id.clone(),
                        prompt: String::new(),
                        response: "x".into(),
                        tags: None,
                    },
                    TokenLossRecord {
                        id,
                        nll_base,
                        nll_ref,
                        entropy_base: None,
                    },
                )
            })
            .collect();
        let scored = score_corpus(&pairs, AggregationMode::Sum, 1).unwrap();
        let lens: Vec<f64> = scored.iter().map(|s| s.n_tokens as f64).collect();
        let mean_loss: Vec<f64> = scored
            .iter()
            .map(|s| s.loss_base / s.n_tokens as f64)
            .collect();
        let raw: Vec<f64> = scored.iter().map(|s| s.rho_lm).collect();
        let normalized: Vec<f64> = scored.iter().map(|s| s.davir.unwrap()).collect();

        premise_holds &= spearman(&mean_loss, &lens).unwrap().abs() >= 0.5;
        let raw_corr = spearman(&raw, &lens).unwrap().abs();
        let normalized_corr = spearman(&normalized, &lens).unwrap().abs();
        if normalized_corr < raw_corr {
            wins += 1;
        }
    }
    let elapsed = start.elapsed();
    report(
        3,
        premise_holds && wins >= 95 && elapsed < Duration::from_secs(30),
        elapsed,
        &format!("normalization reduced length correlation in {wins}/100 seeds"),
    );
}

// 4. Analytic gradients match central finite differences (h = 1e-5) to
//    better than 1e-6 relative error on 1,000 random examples, both
//    variants, beta in {0.01, 0.1, 1}.
#[test]
fn criterion_4_gradient_check() {
    let start = Instant::now();
    let mut rng = Pcg64::seed_from_u64(404);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let ex = PreferenceExample {
            id: "g".into(),
            logp_policy_w: -rng.random_range(0.5..50.0),
            logp_ref_w: -rng.random_range(0.5..50.0),
            logp_policy_l: -rng.random_range(0.5..50.0),
            logp_ref_l: -rng.random_range(0.5..50.0),
            len_w: rng.random_range(1..500),
            len_l: rng.random_range(1..500),
        };
        for beta in [0.01, 0.1, 1.0] {
            let beta = Beta::new(beta).unwrap();
            for variant in [DpoVariant::Vanilla, DpoVariant::Davir] {
                let value = objective(&ex, beta, variant).unwrap();
                let loss_at = |dw: f64, dl: f64| -> f64 {
                    let mut probe = ex.clone();
                    probe.logp_policy_w += dw;
                    probe.logp_policy_l += dl;
                    objective(&probe, beta, variant).unwrap().loss
                };
                let fd_w = (loss_at(h, 0.0) - loss_at(-h, 0.0)) / (2.0 * h);
                let fd_l = (loss_at(0.0, h) - loss_at(0.0, -h)) / (2.0 * h);
                for (analytic, fd) in [
                    (value.grad_logp_policy_w, fd_w),
                    (value.grad_logp_policy_l, fd_l),
                ] {
                    let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-12);
                    worst = worst.max(rel);
                }
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        4,
        worst < 1e-6 && elapsed < Duration::from_secs(5),
        elapsed,
        &format!("gradients vs finite differences, worst relative error {worst:.2e}"),
    );
}

// 5. A zero margin gives loss ln 2 within 1e-12 for both variants.
#[test]
fn criterion_5_zero_margin_loss() {
    let start = Instant::now();
    let ex = PreferenceExample {
        id: "z".into(),
        logp_policy_w: -7.5,
        logp_ref_w: -7.5,
        logp_policy_l: -3.25,
        logp_ref_l: -3.25,
        len_w: 4,
        len_l: 9,
    };
    let mut ok = true;
    for variant in [DpoVariant::Vanilla, DpoVariant::Davir] {
        for beta in [0.01, 0.1, 1.0] {
            let value = objective(&ex, Beta::new(beta).unwrap(), variant).unwrap();
            ok &= value.margin == 0.0;
            ok &= (value.loss - std::f64::consts::LN_2).abs() < 1e-12;
        }
    }
    report(5, ok, start.elapsed(), "zero margin loss equals ln 2");
}

// 6. The implicit reward at beta = 1 is the raw score, bit for bit, across
//    10,000 random loss pairs.
#[test]
fn criterion_6_reward_bridge() {
    let start = Instant::now();
    let mut rng = Pcg64::seed_from_u64(606);
    let beta = Beta::new(1.0).unwrap();
    let ok = (0..10_000).all(|_| {
        let loss_base = rng.random_range(0.0..1000.0);
        let loss_ref = rng.random_range(0.0..1000.0);
        implicit_reward(beta, loss_base, loss_ref).to_bits()
            == rho_lm_score(loss_base, loss_ref).to_bits()
    });
    report(
        6,
        ok,
        start.elapsed(),
        "implicit reward at beta=1 equals the raw score bit-for-bit",
    );
}

// 7. Percentile bootstrap coverage: with Bernoulli(0.2) outcomes over 805
//    questions and 1,000 resamples, the 95% CI covers the true rate in 90%
//    to 99% of 200 trials.
#[test]
fn criterion_7_bootstrap_coverage() {
    let start = Instant::now();
    let mut covered = 0usize;
    for trial in 0..200u64 {
        let mut rng = Pcg64::seed_from_u64(70_000 + trial);
        let values: Vec<f64> = (0..805)
            .map(|_| if rng.random::<f64>() < 0.2 { 1.0 } else { 0.0 })
            .collect();
        let ci = bootstrap_mean_ci(&values, 1000, 0.95, trial).unwrap();
        if ci.ci_low <= 0.2 && 0.2 <= ci.ci_high {
            covered += 1;
        }
    }
    let elapsed = start.elapsed();
    report(
        7,
        (180..=198).contains(&covered) && elapsed < Duration::from_secs(60),
        elapsed,
        &format!("95% CI covered p=0.2 in {covered}/200 trials"),
    );
}

// 8. Win-score identities and the selection-overlap arithmetic.
#[test]
fn criterion_8_win_score_identities() {
    let start = Instant::now();
    let mut rng = Pcg64::seed_from_u64(808);
    let mut ok = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..400usize);
        let outcomes: Vec<OutcomeRecord> = (0..n)
            .map(|i| OutcomeRecord {
                question_id: format!("q{i}"),
                result: match rng.random_range(0..3u8) {
                    0 => Outcome::Win,
                    1 => Outcome::Lose,
                    _ => Outcome::Tie,
                },
            })
            .collect();
        let identity = 1.0 + win_rate(&outcomes).unwrap() - lose_rate(&outcomes).unwrap();
        ok &= (win_score(&outcomes).unwrap() - identity).abs() < 1e-15;
    }

    let ties: Vec<OutcomeRecord> = (0..327)
        .map(|i| OutcomeRecord {
            question_id: format!("t{i}"),
            result: Outcome::Tie,
        })
        .collect();
    ok &= win_score(&ties).unwrap() == 1.0;

    let list_a: Vec<String> = (0..800).map(|i| format!("a{i:04}")).collect();
    let list_b: Vec<String> = (0..516)
        .map(|i| format!("a{i:04}"))
        .chain((0..284).map(|i| format!("b{i:04}")))
        .collect();
    ok &= selection_overlap(&list_a, &list_b) == (516, 0.645);

    report(
        8,
        ok,
        start.elapsed(),
        "win-score identity, all-tie parity, and the 516/800 = 64.5% overlap",
    );
}

const ALPHABET: &[u8] = b"abcdefghijkl";

fn random_text(rng: &mut Pcg64, len: usize) -> String {
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

fn synthetic_corpus(seed: u64, prefix: &str, n: usize) -> Vec<Document> {
    let mut rng = Pcg64::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let prompt_len = rng.random_range(5..15);
            let response_len = rng.random_range(10..40);
            Document {
                id: format!("{prefix}{i:04}"),
                prompt: random_text(&mut rng, prompt_len),
                response: random_text(&mut rng, response_len),
                tags: None,
            }
        })
        .collect()
}

fn davir_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_davir"))
}

fn run_ok(cmd: &mut Command) {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stderr)
    );
}

// 9. The full toy pipeline (fit -> score -> select k=50 -> finetune on the
//    subset) over a 1,000-document corpus finishes in under 60 s and is
//    byte-identical for worker counts 1, 4, and 8.
#[test]
fn criterion_9_end_to_end_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);

    let full = synthetic_corpus(900, "doc", 1000);
    let pretrain: Vec<Document> = full[..500].to_vec();
    write_jsonl_file(path("full.jsonl"), &full).unwrap();
    write_jsonl_file(path("pretrain.jsonl"), &pretrain).unwrap();

    run_ok(davir_bin().args([
        "toylm-fit",
        "--corpus",
        path("pretrain.jsonl").to_str().unwrap(),
        "--output",
        path("base.model.json").to_str().unwrap(),
    ]));
    run_ok(davir_bin().args([
        "toylm-finetune",
        "--base",
        path("base.model.json").to_str().unwrap(),
        "--corpus",
        path("full.jsonl").to_str().unwrap(),
        "--mix-weight",
        "0.9",
        "--output",
        path("ref.model.json").to_str().unwrap(),
    ]));

    let mut pipeline_outputs: Vec<Vec<u8>> = Vec::new();
    for workers in ["1", "4", "8"] {
        let tag = |name: &str| path(&format!("w{workers}.{name}"));
        for (model, out) in [("base.model.json", "base.jsonl"), ("ref.model.json", "ref.jsonl")] {
            run_ok(davir_bin().args([
                "toylm-score",
                "--model",
                path(model).to_str().unwrap(),
                "--corpus",
                path("full.jsonl").to_str().unwrap(),
                "--workers",
                workers,
                "--output",
                tag(out).to_str().unwrap(),
            ]));
        }
        run_ok(davir_bin().args([
            "score",
            "--corpus",
            path("full.jsonl").to_str().unwrap(),
            "--base-losses",
            tag("base.jsonl").to_str().unwrap(),
            "--ref-losses",
            tag("ref.jsonl").to_str().unwrap(),
            "--workers",
            workers,
            "--output",
            tag("scores.jsonl").to_str().unwrap(),
        ]));
        run_ok(davir_bin().args([
            "select",
            "--scores",
            tag("scores.jsonl").to_str().unwrap(),
            "--corpus",
            path("full.jsonl").to_str().unwrap(),
            "--metric",
            "davir",
            "--k",
            "50",
            "--seed",
            "7",
            "--output",
            tag("selected").to_str().unwrap(),
        ]));
        run_ok(davir_bin().args([
            "toylm-finetune",
            "--base",
            path("base.model.json").to_str().unwrap(),
            "--corpus",
            tag("selected.jsonl").to_str().unwrap(),
            "--output",
            tag("retrained.model.json").to_str().unwrap(),
        ]));

        let mut blob = Vec::new();
        for name in [
            "base.jsonl",
            "ref.jsonl",
            "scores.jsonl",
            "selected.ids",
            "selected.jsonl",
            "retrained.model.json",
        ] {
            blob.extend(std::fs::read(tag(name)).unwrap());
        }
        pipeline_outputs.push(blob);
    }

    let identical = pipeline_outputs.iter().all(|b| *b == pipeline_outputs[0]);
    let elapsed = start.elapsed();
    report(
        9,
        identical && elapsed < Duration::from_secs(60),
        elapsed,
        "pipeline outputs byte-identical across worker counts 1, 4, 8",
    );
}

// 10. Learnability semantics: documents from the training distribution the
//     base model never saw score strictly higher mean normalized
//     learnability than the documents it was trained on, in at least 95 of
//     100 seeds.
#[test]
fn criterion_10_learnability_sanity() {
    let start = Instant::now();
    let mut wins = 0usize;
    for seed in 0..100u64 {
        let seen = synthetic_corpus(10_000 + seed, "seen", 30);
        let unseen = synthetic_corpus(20_000 + seed, "unseen", 30);
        let mut full = seen.clone();
        full.extend(unseen.clone());

        let base = NGramModel::fit(&seen, 3, 0.1).unwrap();
        let reference = base.finetune(&full, 0.9).unwrap();

        let pairs: Vec<(Document, TokenLossRecord)> = full
            .iter()
            .map(|doc| {
                (
                    doc.clone(),
                    TokenLossRecord {
                        id: doc.id.clone(),
                        nll_base: base.response_nll(doc),
                        nll_ref: reference.response_nll(doc),
                        entropy_base: None,
                    },
                )
            })
            .collect();
        let scored = score_corpus(&pairs, AggregationMode::Sum, 1).unwrap();
        let mean_davir = |prefix: &str| -> f64 {
            let values: Vec<f64> = scored
                .iter()
                .filter(|s| s.id.starts_with(prefix))
                .filter_map(|s| s.davir)
                .collect();
            values.iter().sum::<f64>() / values.len() as f64
        };
        if mean_davir("unseen") > mean_davir("seen") {
            wins += 1;
        }
    }
    let elapsed = start.elapsed();
    report(
        10,
        wins >= 95,
        elapsed,
        &format!("unseen in-distribution data outscored seen data in {wins}/100 seeds"),
    );
}

// Spot-check that a score file produced by the pipeline honors the format
// contract when read back.
#[test]
fn score_files_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus(42, "d", 30);
    let base = NGramModel::fit(&corpus[..15], 2, 0.1).unwrap();
    let reference = base.finetune(&corpus, 0.9).unwrap();
    let pairs: Vec<(Document, TokenLossRecord)> = corpus
        .iter()
        .map(|doc| {
            (
                doc.clone(),
                TokenLossRecord {
                    id: doc.id.clone(),
                    nll_base: base.response_nll(doc),
                    nll_ref: reference.response_nll(doc),
                    entropy_base: Some(base.response_entropy(doc)),
                },
            )
        })
        .collect();
    let scored = score_corpus(&pairs, AggregationMode::Sum, 2).unwrap();
    let path = dir.path().join("scores.jsonl");
    write_jsonl_file(&path, &scored).unwrap();
    let restored = read_scores(&path).unwrap();
    assert_eq!(restored.len(), scored.len());
    for (orig, read) in scored.iter().zip(&restored) {
        assert_eq!(orig.id, read.id);
        assert_eq!(orig.loss_base.to_bits(), read.loss_base.to_bits());
        assert_eq!(orig.rho_lm.to_bits(), read.rho_lm.to_bits());
        assert_eq!(orig.davir.map(f64::to_bits), read.davir.map(f64::to_bits));
        // Entropy is diagnostic-only and never serialized.
        assert_eq!(read.mean_entropy_base, None);
    }
}
