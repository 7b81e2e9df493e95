//! Gradient-descent loops: noise-robust GCE training, soft-target
//! distillation and the seed ensemble built from both.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bio::encode_labels;
use crate::corpus::{Corpus, LabelQuality, LabelSource};
use crate::error::{Error, Result};
use crate::model::{Adam, Encoder, PredictionBatch, TaggerParams};
use crate::scalar::Scalar;
use crate::train::config::TrainConfig;
use crate::train::loss::{compute_label_weights, gce_logit_grad, kl_divergence, SampleWeights};

/// The label layer a corpus of the given quality trains on.
pub fn training_source(corpus: &Corpus) -> Result<LabelSource> {
    match corpus.quality {
        LabelQuality::Strong => Ok(LabelSource::Gold),
        LabelQuality::Weak => Ok(LabelSource::Weak),
        LabelQuality::Unlabeled => Err(Error::validation(format!(
            "corpus `{}` has no labels to train on",
            corpus.domain
        ))),
    }
}

/// Tag indices of every sentence's training layer.
pub fn training_labels(corpus: &Corpus) -> Result<Vec<Vec<usize>>> {
    let source = training_source(corpus)?;
    let layers = corpus.span_layers(source)?;
    Ok(layers
        .iter()
        .zip(&corpus.sentences)
        .map(|(spans, s)| encode_labels(spans, s.len(), &corpus.scheme))
        .collect())
}

fn check_trainable<T: Scalar, E: Encoder<T>>(params: &TaggerParams<T, E>, corpus: &Corpus) -> Result<()> {
    if corpus.is_empty() {
        return Err(Error::validation(format!("corpus `{}` is empty", corpus.domain)));
    }
    if *corpus.scheme != *params.scheme {
        return Err(Error::validation(format!(
            "corpus `{}` uses a different tag scheme than the model head",
            corpus.domain
        )));
    }
    if let Some(i) = corpus.sentences.iter().position(|s| s.is_empty()) {
        return Err(Error::validation(format!("sentence {i} of `{}` is empty", corpus.domain)));
    }
    Ok(())
}

pub(crate) fn optimizer<T: Scalar>(config: &TrainConfig) -> Adam<T> {
    let mut opt = Adam::new(config.learning_rate);
    opt.clip_norm = (config.clip_norm > 0.0).then_some(config.clip_norm);
    opt
}

/// One pass over `order` in mini-batches. `token_grad(i, probs, d_logits)`
/// fills the logit gradient of sentence `i` and returns its loss and its
/// contribution to the batch normalizer. Returns the summed loss.
pub(crate) fn run_epoch<T, E, F>(
    params: &mut TaggerParams<T, E>,
    opt: &mut Adam<T>,
    tokens: &[&[String]],
    order: &[usize],
    batch_size: usize,
    mut token_grad: F,
) -> Result<f64>
where
    T: Scalar,
    E: Encoder<T>,
    F: FnMut(usize, &Array2<T>, &mut Array2<T>) -> (f64, f64),
{
    let mut grad = params.zero_grad();
    let mut total = 0.0;
    for chunk in order.chunks(batch_size) {
        grad.clear();
        let mut norm = 0.0;
        for &i in chunk {
            let pass = params.forward_sentence(tokens[i])?;
            let mut d = Array2::zeros(pass.probs.raw_dim());
            let (loss, n) = token_grad(i, &pass.probs, &mut d);
            total += loss;
            if n > 0.0 {
                norm += n;
                params.backward(&pass, d.view(), &mut grad);
            }
        }
        if norm > 0.0 {
            opt.update(params.params_mut(), grad.slices(), 1.0 / norm);
        }
    }
    Ok(total)
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Mini-batch GCE training with per-epoch noisy-label removal.
///
/// Weights come from the current model at the start of each epoch; the
/// first `warmup_epochs` epochs keep every label.
pub fn train_noise_robust<T: Scalar, E: Encoder<T>>(
    init: &TaggerParams<T, E>,
    corpus: &Corpus,
    config: &TrainConfig,
) -> Result<TaggerParams<T, E>> {
    config.validate()?;
    check_trainable(init, corpus)?;
    let labels = training_labels(corpus)?;
    let tokens: Vec<&[String]> = corpus.sentences.iter().map(|s| s.tokens()).collect();
    let mut params = init.clone();
    let mut opt = optimizer(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let q = T::of(config.q);
    for epoch in 0..config.epochs_per_phase {
        let weights: SampleWeights = if epoch < config.warmup_epochs.max(1) || config.tau <= 0.0 {
            labels.iter().map(|y| vec![true; y.len()]).collect()
        } else {
            compute_label_weights(&params.forward(&corpus.sentences)?, &labels, config.tau)
        };
        let kept: usize = weights.iter().flatten().filter(|&&w| w).count();
        let order = shuffled(corpus.len(), &mut rng);
        let loss = run_epoch(&mut params, &mut opt, &tokens, &order, config.batch_size, |i, probs, d| {
            let mut loss = 0.0;
            let mut n = 0.0;
            for (t, (&y, &w)) in labels[i].iter().zip(&weights[i]).enumerate() {
                if w {
                    gce_logit_grad(probs.row(t), y, T::one(), q, d.row_mut(t));
                    loss += (1.0 - probs[[t, y]].as_f64().powf(config.q)) / config.q;
                    n += 1.0;
                }
            }
            (loss, n)
        })?;
        log::debug!(
            "noise-robust epoch {}: loss {:.4} over {kept} kept tokens",
            epoch + 1,
            loss / kept.max(1) as f64
        );
    }
    Ok(params)
}

/// Trains `init` towards fixed per-token distributions by minimizing
/// `KL(target || model)` over the tokens whose mask entry is set.
pub fn fit_soft_targets<T: Scalar, E: Encoder<T>>(
    init: &TaggerParams<T, E>,
    tokens: &[&[String]],
    targets: &[Array2<T>],
    mask: &[Vec<bool>],
    config: &TrainConfig,
) -> Result<TaggerParams<T, E>> {
    config.validate()?;
    if tokens.len() != targets.len() || tokens.len() != mask.len() {
        return Err(Error::validation("tokens, targets and mask differ in sentence count"));
    }
    for (i, ((tk, tg), m)) in tokens.iter().zip(targets).zip(mask).enumerate() {
        if tk.len() != tg.nrows() || tk.len() != m.len() || tg.ncols() != init.label_count() {
            return Err(Error::Misaligned {
                index: i,
                reason: "soft targets do not match the sentence or label space".into(),
            });
        }
    }
    let mut params = init.clone();
    if !mask.iter().flatten().any(|&m| m) {
        return Ok(params);
    }
    let mut opt = optimizer(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for epoch in 0..config.epochs_per_phase {
        let order = shuffled(tokens.len(), &mut rng);
        let loss = run_epoch(&mut params, &mut opt, tokens, &order, config.batch_size, |i, probs, d| {
            let mut loss = 0.0;
            let mut n = 0.0;
            for (t, &keep) in mask[i].iter().enumerate() {
                if keep {
                    let target = targets[i].row(t);
                    loss += kl_divergence(target, probs.row(t));
                    let mut row = d.row_mut(t);
                    row.assign(&probs.row(t));
                    row -= &target;
                    n += 1.0;
                }
            }
            (loss, n)
        })?;
        log::debug!("distillation epoch {}: loss {loss:.4}", epoch + 1);
    }
    Ok(params)
}

/// Mean `KL(target || model)` per masked token.
pub fn mean_kl<T: Scalar, E: Encoder<T>>(
    params: &TaggerParams<T, E>,
    tokens: &[&[String]],
    targets: &[Array2<T>],
    mask: &[Vec<bool>],
) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for ((tk, tg), m) in tokens.iter().zip(targets).zip(mask) {
        let probs = params.forward_sentence(tk)?.probs;
        for (t, &keep) in m.iter().enumerate() {
            if keep {
                total += kl_divergence(tg.row(t), probs.row(t));
                n += 1;
            }
        }
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

/// Element-wise mean of the members' probability rows.
pub fn average_predictions<T: Scalar>(members: &[PredictionBatch<T>]) -> Result<PredictionBatch<T>> {
    let first = members.first().ok_or_else(|| Error::validation("no ensemble members"))?;
    let k = T::of(members.len() as f64);
    let mut mean: PredictionBatch<T> = first.clone();
    for other in &members[1..] {
        if other.len() != mean.len() {
            return Err(Error::validation("ensemble members predicted different batches"));
        }
        for (m, o) in mean.iter_mut().zip(other) {
            if m.dim() != o.dim() {
                return Err(Error::validation("ensemble members disagree on shapes"));
            }
            *m += o;
        }
    }
    for m in &mut mean {
        m.mapv_inplace(|v| v / k);
    }
    Ok(mean)
}

pub struct Ensemble<T, E> {
    pub members: Vec<TaggerParams<T, E>>,
    pub student: TaggerParams<T, E>,
}

/// Trains `config.k` members with seeds `seed+1..=seed+K` from the same
/// initialization, then distills their mean prediction into a student.
pub fn train_ensemble<T: Scalar, E: Encoder<T>>(
    init: &TaggerParams<T, E>,
    corpus: &Corpus,
    config: &TrainConfig,
) -> Result<Ensemble<T, E>> {
    config.validate()?;
    check_trainable(init, corpus)?;
    let members = (1..=config.k as u64)
        .map(|k| train_noise_robust(init, corpus, &config.with_seed(config.seed.wrapping_add(k))))
        .collect::<Result<Vec<_>>>()?;
    let preds = members
        .iter()
        .map(|m| m.forward(&corpus.sentences))
        .collect::<Result<Vec<_>>>()?;
    let teacher = average_predictions(&preds)?;
    let tokens: Vec<&[String]> = corpus.sentences.iter().map(|s| s.tokens()).collect();
    let mask: Vec<Vec<bool>> = teacher.iter().map(|p| vec![true; p.len_of(Axis(0))]).collect();
    let student = fit_soft_targets(init, &tokens, &teacher, &mask, config)?;
    Ok(Ensemble { members, student })
}
