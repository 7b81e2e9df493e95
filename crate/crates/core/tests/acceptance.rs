//! Acceptance criteria AC1 to AC10, one PASS/FAIL/SKIP line each.
//!
//! Runs without the libtest harness so every line reaches the log. Pass
//! criterion names (e.g. `AC3 AC7`) to run a subset. AC9 needs the released
//! dataset: set `CONTROSTER_DATASET` to a directory holding `weak.jsonl`
//! (13000 weak-labelled sentences) and `strong.jsonl` (3000 sentences with
//! gold spans, weak spans and origin languages).

mod common;

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use controster::cli::experiment::{run_cell, Cell, ExperimentConfig, ExperimentCorpora, Variant};
use controster::cli::presets;
use controster::data::split::candidate_partition;
use controster::data::{corpus_stats, monte_carlo_split, read_corpus, CorpusFormat, SplitSpec};
use controster::metrics::{compare_by_language, span_prf, Prf, PrfReport, SpanSource};
use controster::model::{ModelConfig, TaggerParams, Vocab};
use controster::train::{
    gce_logit_grad, gce_loss, kl_divergence, run_controster, self_train, sharpen, train_ensemble,
    train_noise_robust, Stage, StagePlan, TrainConfig,
};
use controster::weaklabel::{corrupt_gold, NoiseProfile};
use controster::{
    decode_bio, encode_bio, Corpus, EntitySpan, LabelQuality, LabelSource, Sentence, TagScheme, TagSequence, Tagger,
    Tagger64, TypeIdx,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let temp = rng.gen_range(0.2..4.0);
    let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0) * temp).collect();
    softmax(&logits)
}

/// Non-overlapping spans over `len` tokens, sorted by start.
fn random_spans(rng: &mut impl Rng, len: usize, types: usize) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < len {
        if rng.gen_bool(0.35) {
            let end = (i + rng.gen_range(1..=3)).min(len);
            spans.push(EntitySpan::new(i, end, TypeIdx(rng.gen_range(0..types))));
            i = end + usize::from(rng.gen_bool(0.3));
        } else {
            i += 1;
        }
    }
    spans
}

fn tokens(len: usize) -> Vec<String> {
    (0..len).map(|i| format!("w{i}")).collect()
}

// AC1 ----------------------------------------------------------------------

fn ac1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_mae = 0.0f64;
    let mut worst_ce = 0.0f64;
    for _ in 0..100 {
        let classes = rng.gen_range(3..=21);
        let sentences = rng.gen_range(1..=4);
        let mut preds = Vec::new();
        let mut labels = Vec::new();
        let mut weights = Vec::new();
        let (mut mae, mut ce) = (0.0, 0.0);
        for _ in 0..sentences {
            let len = rng.gen_range(1..=8);
            let mut p = Array2::<f64>::zeros((len, classes));
            let mut y = Vec::new();
            let mut w = Vec::new();
            for t in 0..len {
                let row = random_distribution(&mut rng, classes);
                let label = rng.gen_range(0..classes);
                let keep = rng.gen_bool(0.8);
                if keep {
                    mae += 1.0 - row[label];
                    ce -= row[label].ln();
                }
                p.row_mut(t).assign(&Array1::from(row));
                y.push(label);
                w.push(keep);
            }
            preds.push(p);
            labels.push(y);
            weights.push(w);
        }
        let at_one = gce_loss(&preds, &labels, &weights, 1.0).unwrap();
        let near_zero = gce_loss(&preds, &labels, &weights, 1e-6).unwrap();
        worst_mae = worst_mae.max((at_one - mae).abs());
        worst_ce = worst_ce.max(rel_err(near_zero, ce));
    }
    verdict(
        worst_mae <= 1e-9 && worst_ce <= 1e-4,
        format!("100 batches: max |q=1 - MAE| {worst_mae:.2e}, max rel |q->0 - CE| {worst_ce:.2e}"),
    )
}

// AC2 ----------------------------------------------------------------------

struct GradProblem {
    sentences: Vec<Vec<String>>,
    labels: Vec<Vec<usize>>,
    weights: Vec<Vec<bool>>,
    q: f64,
}

impl GradProblem {
    fn loss(&self, model: &Tagger64) -> f64 {
        let preds: Vec<Array2<f64>> = self
            .sentences
            .iter()
            .map(|s| model.forward_sentence(s).unwrap().probs)
            .collect();
        gce_loss(&preds, &self.labels, &self.weights, self.q).unwrap()
    }

    fn gradient(&self, model: &Tagger64) -> (Vec<Vec<f64>>, bool) {
        let mut grad = model.zero_grad();
        let mut zero_rows_exact = true;
        for ((s, y), w) in self.sentences.iter().zip(&self.labels).zip(&self.weights) {
            let pass = model.forward_sentence(s).unwrap();
            let mut d = Array2::<f64>::zeros(pass.probs.raw_dim());
            for t in 0..s.len() {
                let weight = if w[t] { 1.0 } else { 0.0 };
                gce_logit_grad(pass.probs.row(t), y[t], weight, self.q, d.row_mut(t));
                if !w[t] && d.row(t).iter().any(|&v| v != 0.0) {
                    zero_rows_exact = false;
                }
            }
            model.backward(&pass, d.view(), &mut grad);
        }
        (grad.slices().into_iter().map(<[f64]>::to_vec).collect(), zero_rows_exact)
    }
}

fn ac2() -> Outcome {
    let corpus = common::toy_corpus(40, 5);
    let cfg = ModelConfig {
        embedding_dim: 6,
        hidden_dim: 5,
        ..Default::default()
    };
    let vocab = Arc::new(Vocab::build([&corpus], false));
    let model: Tagger64 = TaggerParams::new(Arc::clone(&vocab), Arc::clone(&corpus.scheme), &cfg, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let labels_n = model.label_count();
    let sentences: Vec<Vec<String>> = corpus.sentences[..3].iter().map(|s| s.tokens().to_vec()).collect();
    let problem = GradProblem {
        labels: sentences
            .iter()
            .map(|s| s.iter().map(|_| rng.gen_range(0..labels_n)).collect())
            .collect(),
        weights: sentences
            .iter()
            .map(|s| (0..s.len()).map(|t| t != 1 && rng.gen_bool(0.75)).collect())
            .collect(),
        sentences,
        q: 0.7,
    };
    let (analytic, zero_rows_exact) = problem.gradient(&model);

    // Embedding rows of absent tokens are trivially zero; sample the rest.
    let used: HashSet<usize> = problem.sentences.iter().flat_map(|s| vocab.ids(s)).collect();
    let dim = cfg.embedding_dim;
    let mut live: Vec<(usize, usize)> = Vec::new();
    for (k, g) in analytic.iter().enumerate() {
        for i in 0..g.len() {
            if k != 0 || used.contains(&(i / dim)) {
                live.push((k, i));
            }
        }
    }
    let h = 1e-5;
    let mut good = 0;
    let samples = 500;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (k, i) = live[rng.gen_range(0..live.len())];
        let mut plus = model.clone();
        plus.params_mut()[k][i] += h;
        let mut minus = model.clone();
        minus.params_mut()[k][i] -= h;
        let numeric = (problem.loss(&plus) - problem.loss(&minus)) / (2.0 * h);
        let a = analytic[k][i];
        let err = if a.abs().max(numeric.abs()) < 1e-9 { 0.0 } else { rel_err(a, numeric) };
        worst = worst.max(err);
        if err < 1e-4 {
            good += 1;
        }
    }
    let frac = good as f64 / samples as f64;
    verdict(
        frac >= 0.99 && zero_rows_exact,
        format!(
            "{good}/{samples} coordinates within 1e-4 (worst {worst:.1e}); zero-weight logit rows exactly zero: {zero_rows_exact}"
        ),
    )
}

// AC3 ----------------------------------------------------------------------

fn oracle_prf(tp: usize, pred: usize, gold: usize) -> Prf {
    if pred == 0 && gold == 0 {
        return Prf { precision: 100.0, recall: 100.0, f1: 100.0 };
    }
    let p = if pred == 0 { 0.0 } else { 100.0 * tp as f64 / pred as f64 };
    let r = if gold == 0 { 0.0 } else { 100.0 * tp as f64 / gold as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    Prf { precision: p, recall: r, f1: f }
}

/// Brute-force per-type and weighted scores from `(sentence, start, end, type)` sets.
fn oracle_report(pred: &Corpus, gold: &Corpus) -> (BTreeMap<usize, (Prf, usize)>, Prf) {
    let set = |c: &Corpus, src: LabelSource| -> HashSet<(usize, usize, usize, usize)> {
        c.sentences
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.spans(src).unwrap().iter().map(move |x| (i, x.start, x.end, x.etype.0)))
            .collect()
    };
    let p = set(pred, LabelSource::Weak);
    let g = set(gold, LabelSource::Gold);
    let types: std::collections::BTreeSet<usize> = p.iter().chain(&g).map(|x| x.3).collect();
    let mut rows = BTreeMap::new();
    for t in types {
        let pt: HashSet<_> = p.iter().filter(|x| x.3 == t).collect();
        let gt: HashSet<_> = g.iter().filter(|x| x.3 == t).collect();
        let tp = pt.intersection(&gt).count();
        rows.insert(t, (oracle_prf(tp, pt.len(), gt.len()), gt.len()));
    }
    let total: usize = g.len();
    let weighted = if total == 0 {
        if p.is_empty() {
            oracle_prf(0, 0, 0)
        } else {
            Prf { precision: 0.0, recall: 0.0, f1: 0.0 }
        }
    } else {
        let mut acc = [0.0; 3];
        for (s, n) in rows.values() {
            let w = *n as f64;
            acc[0] += w * s.precision;
            acc[1] += w * s.recall;
            acc[2] += w * s.f1;
        }
        let z = total as f64;
        Prf { precision: acc[0] / z, recall: acc[1] / z, f1: acc[2] / z }
    };
    (rows, weighted)
}

fn random_pair(rng: &mut impl Rng, scheme: &Arc<TagScheme>) -> (Corpus, Corpus) {
    let n = rng.gen_range(0..=6);
    let types = scheme.type_count();
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for _ in 0..n {
        let len = rng.gen_range(1..=8);
        let g = random_spans(rng, len, types);
        // predictions: perturbed gold plus random spans
        let p = if rng.gen_bool(0.5) {
            let mut kept = Vec::new();
            for s in &g {
                if rng.gen_bool(0.7) {
                    let mut s = *s;
                    if rng.gen_bool(0.2) {
                        s.etype = TypeIdx(rng.gen_range(0..types));
                    }
                    kept.push(s);
                }
            }
            kept
        } else {
            random_spans(rng, len, types)
        };
        gold.push(Sentence::new(tokens(len)).with_spans(LabelSource::Gold, g, types).unwrap());
        pred.push(Sentence::new(tokens(len)).with_spans(LabelSource::Weak, p, types).unwrap());
    }
    let mk = |s, q| Corpus::new(Arc::clone(scheme), q, "r").with_sentences(s).unwrap();
    (mk(pred, LabelQuality::Weak), mk(gold, LabelQuality::Strong))
}

fn same_prf(a: &Prf, b: &Prf) -> bool {
    a.precision == b.precision && a.recall == b.recall && a.f1 == b.f1
}

fn matches_oracle(report: &PrfReport, scheme: &TagScheme, rows: &BTreeMap<usize, (Prf, usize)>, weighted: &Prf) -> bool {
    report.per_type.len() == rows.len()
        && report.per_type.iter().all(|r| {
            let t = scheme.type_idx(&r.etype).unwrap().0;
            rows.get(&t).is_some_and(|(s, n)| same_prf(&r.scores, s) && r.support == *n)
        })
        && same_prf(&report.weighted, weighted)
}

fn ac3() -> Outcome {
    let scheme = Arc::new(TagScheme::new(["A", "B", "C", "D"]).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut mismatches = 0;
    for _ in 0..200 {
        let (pred, gold) = random_pair(&mut rng, &scheme);
        let report = span_prf(SpanSource::weak(&pred), SpanSource::gold(&gold)).unwrap();
        let (rows, weighted) = oracle_report(&pred, &gold);
        if !matches_oracle(&report, &scheme, &rows, &weighted) {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("200 random corpora, {mismatches} mismatches against the set-intersection oracle"))
}

// AC4 ----------------------------------------------------------------------

fn ac4() -> Outcome {
    let scheme = Arc::new(TagScheme::covidnews());
    let types = scheme.type_count();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut round_trip_failures = 0;
    for _ in 0..1000 {
        let len = rng.gen_range(0..=15);
        let spans = random_spans(&mut rng, len, types);
        let tags = encode_bio(&spans, len, &scheme).unwrap();
        if decode_bio(&tags) != spans {
            round_trip_failures += 1;
        }
    }
    let mut invalid = 0;
    for _ in 0..1000 {
        let len = rng.gen_range(0..=15);
        let labels: Vec<usize> = (0..len).map(|_| rng.gen_range(0..scheme.label_count())).collect();
        let spans = decode_bio(&TagSequence::from_labels(Arc::clone(&scheme), labels));
        let ordered = spans.windows(2).all(|w| w[0].end <= w[1].start);
        let in_range = spans.iter().all(|s| s.start < s.end && s.end <= len && s.etype.0 < types);
        let stable = encode_bio(&spans, len, &scheme).map(|t| decode_bio(&t) == spans).unwrap_or(false);
        if !(ordered && in_range && stable) {
            invalid += 1;
        }
    }
    verdict(
        round_trip_failures == 0 && invalid == 0,
        format!("round trip failures {round_trip_failures}/1000, invalid decodes {invalid}/1000"),
    )
}

// AC5 ----------------------------------------------------------------------

/// Score written from the formula with a map keyed by (type, partition).
fn independent_score(corpus: &Corpus, parts: &[Vec<usize>; 3]) -> f64 {
    let n = corpus.len() as f64;
    let mut count: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut total: BTreeMap<usize, f64> = BTreeMap::new();
    for (p, idx) in parts.iter().enumerate() {
        for &i in idx {
            for s in corpus.sentences[i].gold().unwrap() {
                *count.entry((s.etype.0, p)).or_default() += 1.0;
                *total.entry(s.etype.0).or_default() += 1.0;
            }
        }
    }
    total
        .iter()
        .map(|(&t, &all)| {
            (0..3)
                .map(|p| (count.get(&(t, p)).copied().unwrap_or(0.0) / all - parts[p].len() as f64 / n).abs())
                .sum::<f64>()
        })
        .sum()
}

fn ac5() -> Outcome {
    let scheme = Arc::new(TagScheme::new(["A", "B", "C", "D", "E"]).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut at_or_below_median = 0;
    let mut deterministic = true;
    let mut argmin_agrees = true;
    for c in 0..50 {
        let n = rng.gen_range(20..=60);
        let sentences = (0..n)
            .map(|_| {
                let len = rng.gen_range(3..=10);
                let spans = random_spans(&mut rng, len, 5);
                Sentence::new(tokens(len)).with_spans(LabelSource::Gold, spans, 5).unwrap()
            })
            .collect();
        let corpus = Corpus::new(Arc::clone(&scheme), LabelQuality::Strong, "s").with_sentences(sentences).unwrap();
        let spec = SplitSpec {
            iterations: 200,
            ..SplitSpec::proportional(n, c)
        };
        let out = monte_carlo_split(&corpus, &spec, LabelSource::Gold).unwrap();
        let again = monte_carlo_split(&corpus, &spec, LabelSource::Gold).unwrap();
        deterministic &= out.indices == again.indices;
        let mut pool: Vec<f64> = (0..spec.iterations)
            .map(|it| independent_score(&corpus, &candidate_partition(n, spec.sizes, spec.seed, it)))
            .collect();
        let chosen = independent_score(&corpus, &out.indices);
        let best = pool.iter().cloned().fold(f64::INFINITY, f64::min);
        argmin_agrees &= (chosen - best).abs() < 1e-9;
        pool.sort_by(f64::total_cmp);
        let median = (pool[(pool.len() - 1) / 2] + pool[pool.len() / 2]) / 2.0;
        if chosen <= median + 1e-12 {
            at_or_below_median += 1;
        }
    }
    verdict(
        at_or_below_median == 50 && deterministic && argmin_agrees,
        format!(
            "chosen <= pool median in {at_or_below_median}/50; chosen is the pool minimum: {argmin_agrees}; repeat runs identical: {deterministic}"
        ),
    )
}

// AC6 ----------------------------------------------------------------------

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

fn argmax(p: &[f64]) -> usize {
    p.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
}

fn ac6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut failures = Vec::new();
    for i in 0..1000 {
        let n = rng.gen_range(2..=12);
        let p = random_distribution(&mut rng, n);
        let s = sharpen(&p).unwrap();
        let sum: f64 = s.iter().sum();
        if argmax(&s) != argmax(&p) {
            failures.push(format!("argmax changed at {i}"));
        }
        if (sum - 1.0).abs() > 1e-9 {
            failures.push(format!("sum {sum} at {i}"));
        }
        if entropy(&s) > entropy(&p) + 1e-12 {
            failures.push(format!("entropy rose at {i}"));
        }
        let q = random_distribution(&mut rng, n);
        let self_kl = kl_divergence(Array1::from(p.clone()).view(), Array1::from(p.clone()).view());
        let kl = kl_divergence(Array1::from(p).view(), Array1::from(q).view());
        if self_kl != 0.0 {
            failures.push(format!("KL(p||p) = {self_kl} at {i}"));
        }
        if kl < 0.0 {
            failures.push(format!("KL = {kl} at {i}"));
        }
    }
    let detail = if failures.is_empty() {
        "1000 distributions: argmax kept, normalized, entropy non-increasing, KL(p||p)=0, KL>=0".to_owned()
    } else {
        format!("{} violations, first: {}", failures.len(), failures[0])
    };
    verdict(failures.is_empty(), detail)
}

// AC7 / AC8 ----------------------------------------------------------------

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn mean_f1(config: &ExperimentConfig, corpora: &ExperimentCorpora, variant: Variant, weak: usize, strong: usize) -> f64 {
    let f1: Vec<f64> = config
        .grid
        .seeds
        .iter()
        .map(|&seed| {
            let cell = Cell {
                variant,
                weak_size: weak,
                strong_size: strong,
                seed,
            };
            run_cell(&cell, corpora, config).unwrap().f1
        })
        .collect();
    mean(&f1)
}

fn desk() -> (ExperimentConfig, ExperimentCorpora) {
    let config = presets::desk_experiment().unwrap();
    let corpora = config.corpora(Path::new(".")).unwrap();
    (config, corpora)
}

fn ac7() -> Outcome {
    let (config, corpora) = desk();
    let weak_vs_gold = span_prf(SpanSource::weak(&corpora.weak), SpanSource::gold(&corpora.weak))
        .unwrap()
        .weighted
        .f1;
    let weak = corpora.weak.len();
    let none = mean_f1(&config, &corpora, Variant::None, 0, 100);
    let single = mean_f1(&config, &corpora, Variant::IndomainWeak, weak, 100);
    let double = mean_f1(&config, &corpora, Variant::OodIndomainWeak, weak, 100);
    let ok = (40.0..=55.0).contains(&weak_vs_gold) && single >= none + 2.0 && double >= single - 0.5;
    verdict(
        ok,
        format!(
            "weak vs gold F1 {weak_vs_gold:.1}; {} seeds at strong 100: none {none:.2}, in-domain weak {single:.2}, out-of-domain + in-domain weak {double:.2}",
            config.grid.seeds.len()
        ),
    )
}

fn ac8() -> Outcome {
    let (config, corpora) = desk();
    let sizes = [500, 1000, 2000, 3000];
    let f1: Vec<f64> = sizes
        .iter()
        .map(|&w| mean_f1(&config, &corpora, Variant::IndomainWeak, w, 0))
        .collect();
    let best_mid = f1[1..sizes.len() - 1].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let largest = f1[sizes.len() - 1];
    let curve: Vec<String> = sizes.iter().zip(&f1).map(|(s, f)| format!("{s}: {f:.2}")).collect();
    verdict(
        largest <= best_mid + 1.0,
        format!("weak-only mean F1 over {} seeds [{}]; largest exceeds best mid-size by {:.2}", config.grid.seeds.len(), curve.join(", "), largest - best_mid),
    )
}

// AC9 ----------------------------------------------------------------------

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 0.1 + 1e-9
}

fn ac9() -> Outcome {
    let Some(dir) = std::env::var_os("CONTROSTER_DATASET") else {
        return Outcome::Skip("CONTROSTER_DATASET not set".into());
    };
    let dir = Path::new(&dir);
    let (weak_path, strong_path) = (dir.join("weak.jsonl"), dir.join("strong.jsonl"));
    if !weak_path.exists() || !strong_path.exists() {
        return Outcome::Skip(format!("weak.jsonl or strong.jsonl missing in {}", dir.display()));
    }
    let scheme = Arc::new(TagScheme::covidnews());
    let weak = read_corpus(&weak_path, CorpusFormat::JsonLines, &scheme).unwrap();
    let strong = read_corpus(&strong_path, CorpusFormat::JsonLines, &scheme).unwrap();
    let mut problems = Vec::new();
    let mut check = |what: &str, got: f64, want: f64, exact_places: usize| {
        let tol = 0.5 * 10f64.powi(-(exact_places as i32));
        if (got - want).abs() > tol + 1e-12 {
            problems.push(format!("{what} {got:.4} != {want}"));
        }
    };
    // Weak-3k mean length is 9327 / 6263 = 1.489, checked to three places.
    for (name, c, src, want) in [
        ("weak", &weak, LabelSource::Weak, [13000.0, 349913.0, 42692.0, 28431.0, 1.50, 12.2, 2.19]),
        ("weak-3k", &strong, LabelSource::Weak, [3000.0, 80539.0, 9327.0, 6263.0, 1.489, 11.6, 2.09]),
        ("strong", &strong, LabelSource::Gold, [3000.0, 80539.0, 14786.0, 7823.0, 1.89, 18.4, 2.61]),
    ] {
        let s = corpus_stats(c, src).unwrap();
        let got = [
            s.total_entries as f64,
            s.total_words as f64,
            s.total_labelled_words as f64,
            s.total_entities as f64,
            s.mean_entity_length,
            s.percent_labelled_words,
            s.mean_entities_per_entry,
        ];
        let places = [0, 0, 0, 0, if name == "weak-3k" { 3 } else { 2 }, 1, 2];
        for ((g, w), (p, row)) in got.iter().zip(want).zip(places.iter().zip(controster::data::CorpusStats::ROWS)) {
            check(&format!("{name} {row}"), *g, w, *p);
        }
    }
    let report = span_prf(SpanSource::weak(&strong), SpanSource::gold(&strong)).unwrap();
    if !close(report.weighted.f1, 46.2) {
        problems.push(format!("weighted F1 {:.2} != 46.2", report.weighted.f1));
    }
    let table3 = [
        ("Animal", 62.2, 70.6, 66.1),
        ("Bacterium", 33.3, 16.0, 21.6),
        ("Disease", 66.2, 63.2, 64.6),
        ("Location", 57.0, 52.4, 54.6),
        ("Organisation", 33.3, 8.4, 13.4),
        ("Person", 46.7, 41.7, 44.0),
        ("Product", 63.1, 54.9, 58.7),
        ("Symptom", 46.6, 56.2, 50.9),
        ("Time", 68.4, 59.7, 63.8),
        ("Virus", 49.5, 23.0, 31.4),
    ];
    for (t, p, r, f) in table3 {
        match report.row(t) {
            Some(row) if close(row.scores.precision, p) && close(row.scores.recall, r) && close(row.scores.f1, f) => {}
            Some(row) => problems.push(format!("{t} {:?}", row.scores)),
            None => problems.push(format!("{t} missing")),
        }
    }
    // The combined row is the weighted average already checked above.
    let langs = compare_by_language(SpanSource::weak(&strong), SpanSource::gold(&strong)).unwrap();
    for (l, p, r, f) in [
        ("English", 60.3, 41.0, 47.5),
        ("French", 62.3, 53.3, 56.5),
        ("Indonesian", 62.6, 49.4, 54.1),
        ("Mandarin", 53.9, 42.6, 46.1),
    ] {
        match langs.row(l) {
            Some(row) if close(row.report.weighted.precision, p) && close(row.report.weighted.recall, r) && close(row.report.weighted.f1, f) => {}
            Some(row) => problems.push(format!("{l} {:?}", row.report.weighted)),
            None => problems.push(format!("{l} missing")),
        }
    }
    let detail = if problems.is_empty() {
        "dataset statistics, weak-vs-strong per-type scores and per-language scores match".to_owned()
    } else {
        format!("{} mismatches: {}", problems.len(), problems.join("; "))
    };
    verdict(problems.is_empty(), detail)
}

// AC10 ---------------------------------------------------------------------

fn bits(m: &Tagger) -> Vec<u32> {
    m.params().iter().flat_map(|s| s.iter().map(|v| v.to_bits())).collect()
}

fn ac10() -> Outcome {
    let gold = common::toy_corpus(60, 8);
    let profile = NoiseProfile::from_toml("miss_rate = 0.3\ntruncate_rate = 0.3\nseed = 3\n[confusion.Virus]\nLocation = 0.2\n").unwrap();
    let weak = corrupt_gold(&gold, &profile).unwrap();
    let model_cfg = common::small_config();
    let init: Tagger = common::tagger(&[&weak], &model_cfg, 4);
    let cfg = TrainConfig {
        epochs_per_phase: 2,
        k: 2,
        seed: 12,
        ..Default::default()
    };
    let mut same = Vec::new();
    let nr = || bits(&train_noise_robust(&init, &weak, &cfg).unwrap());
    same.push(("train_noise_robust", nr() == nr()));
    let ens = || {
        let e = train_ensemble(&init, &weak, &cfg).unwrap();
        let mut v: Vec<u32> = e.members.iter().flat_map(bits).collect();
        v.extend(bits(&e.student));
        v
    };
    same.push(("train_ensemble", ens() == ens()));
    let st = || bits(&self_train(&init, &weak, &cfg).unwrap());
    same.push(("self_train", st() == st()));
    let plan = StagePlan::new(vec![Stage::new("weak", weak.clone()), Stage::new("strong", gold.head(20))]);
    let run = || bits(&run_controster::<f32>(&plan, &cfg, &model_cfg, &[]).unwrap().params);
    same.push(("run_controster", run() == run()));
    let spec = SplitSpec {
        iterations: 500,
        ..SplitSpec::proportional(gold.len(), 7)
    };
    let split = || monte_carlo_split(&gold, &spec, LabelSource::Gold).unwrap().indices;
    same.push(("monte_carlo_split", split() == split()));
    let differing: Vec<&str> = same.iter().filter(|x| !x.1).map(|x| x.0).collect();
    verdict(
        differing.is_empty(),
        if differing.is_empty() {
            "all five operations bitwise identical across repeated runs".to_owned()
        } else {
            format!("non-deterministic: {}", differing.join(", "))
        },
    )
}

// --------------------------------------------------------------------------

type Criterion = (&'static str, &'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1", "GCE limits", ac1, Duration::from_secs(5)),
        ("AC2", "gradient check", ac2, Duration::from_secs(120)),
        ("AC3", "metrics oracle", ac3, Duration::from_secs(30)),
        ("AC4", "BIO codec", ac4, Duration::from_secs(10)),
        ("AC5", "splitter", ac5, Duration::from_secs(60)),
        ("AC6", "sharpening and KL", ac6, Duration::from_secs(5)),
        ("AC7", "backbone trend", ac7, Duration::from_secs(20 * 60)),
        ("AC8", "weak saturation", ac8, Duration::from_secs(15 * 60)),
        ("AC9", "dataset statistics", ac9, Duration::from_secs(60)),
        ("AC10", "determinism", ac10, Duration::from_secs(10 * 60)),
    ];
    let wanted: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC")).collect();
    let mut failed = 0;
    for (id, name, run, budget) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Outcome::Pass(d) if elapsed > budget => {
                Outcome::Fail(format!("{d}; took {:.1}s, budget {}s", elapsed.as_secs_f64(), budget.as_secs()))
            }
            o => o,
        };
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {id} {name} ({:.1}s): {detail}", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
