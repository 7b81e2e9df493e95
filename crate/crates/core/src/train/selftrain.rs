//! Sharpened-target self-training over original and augmented views.

use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bio::{decode_labels, encode_labels};
use crate::corpus::{Corpus, EntitySpan, LabelSource, Sentence};
use crate::error::{Error, Result};
use crate::model::{argmax_rows, Encoder, TaggerParams};
use crate::scalar::Scalar;
use crate::scheme::TagScheme;
use crate::train::config::TrainConfig;
use crate::train::derive_seed;
use crate::train::fit::fit_soft_targets;

/// Squares and renormalizes a probability vector: `t_j = p_j^2 / sum_k p_k^2`.
pub fn sharpen<T: Scalar>(p: &[T]) -> Result<Vec<T>> {
    let sum: f64 = p.iter().map(|v| v.as_f64()).sum();
    if p.is_empty() || (sum - 1.0).abs() > 1e-6 || p.iter().any(|v| v.as_f64().is_nan() || v.as_f64() < 0.0) {
        return Err(Error::validation(format!(
            "sharpen expects a probability vector, got one summing to {sum}"
        )));
    }
    let z: T = p.iter().map(|&v| v * v).sum();
    Ok(p.iter().map(|&v| v * v / z).collect())
}

/// Entity phrases per type, used for same-type substitution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gazetteers {
    phrases: Vec<Vec<Vec<String>>>,
}

impl Gazetteers {
    pub fn new(scheme: &TagScheme) -> Self {
        Gazetteers {
            phrases: vec![Vec::new(); scheme.type_count()],
        }
    }

    /// Distinct entity phrases of a corpus layer, in first-occurrence order.
    pub fn from_corpus(corpus: &Corpus, source: LabelSource) -> Result<Self> {
        let mut g = Gazetteers::new(&corpus.scheme);
        let mut seen = HashSet::new();
        for (s, spans) in corpus.sentences.iter().zip(corpus.span_layers(source)?) {
            for span in spans {
                let phrase = s.tokens()[span.start..span.end].to_vec();
                if seen.insert((span.etype, phrase.clone())) {
                    g.phrases[span.etype.0].push(phrase);
                }
            }
        }
        Ok(g)
    }

    pub fn add(&mut self, etype: crate::scheme::TypeIdx, phrase: Vec<String>) {
        if !phrase.is_empty() && !self.phrases[etype.0].contains(&phrase) {
            self.phrases[etype.0].push(phrase);
        }
    }

    pub fn phrases(&self, etype: crate::scheme::TypeIdx) -> &[Vec<String>] {
        self.phrases.get(etype.0).map_or(&[], Vec::as_slice)
    }
}

/// An augmented sentence plus, for each of its tokens, the original position
/// it was copied from (`None` for substituted entity tokens).
#[derive(Clone, Debug, PartialEq)]
pub struct Augmented {
    pub sentence: Sentence,
    pub alignment: Vec<Option<usize>>,
}

/// Label-preserving augmentation of one sentence's `source` layer: each
/// entity is swapped for a same-type gazetteer phrase with probability
/// `replace_prob`, and each `O` token is dropped with probability `drop_rate`.
pub fn augment_sentence(
    sentence: &Sentence,
    source: LabelSource,
    gazetteers: &Gazetteers,
    drop_rate: f64,
    replace_prob: f64,
    seed: u64,
) -> Result<Augmented> {
    let spans = sentence
        .spans(source)
        .ok_or(Error::MissingLabels(0, source.name()))?;
    let type_count = gazetteers.phrases.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens = sentence.tokens();
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    let mut alignment = Vec::with_capacity(tokens.len());
    let mut new_spans = Vec::with_capacity(spans.len());
    let mut next = spans.iter().peekable();
    let mut t = 0;
    while t < tokens.len() {
        if let Some(span) = next.next_if(|s| s.start == t) {
            let start = out.len();
            let pool = gazetteers.phrases(span.etype);
            let swap = rng.gen::<f64>() < replace_prob;
            match pool.choose(&mut rng).filter(|_| swap) {
                Some(phrase) => {
                    out.extend(phrase.iter().cloned());
                    alignment.extend(std::iter::repeat_n(None, phrase.len()));
                }
                None => {
                    out.extend(tokens[span.start..span.end].iter().cloned());
                    alignment.extend((span.start..span.end).map(Some));
                }
            }
            new_spans.push(EntitySpan::new(start, out.len(), span.etype));
            t = span.end;
        } else {
            if rng.gen::<f64>() >= drop_rate {
                out.push(tokens[t].clone());
                alignment.push(Some(t));
            }
            t += 1;
        }
    }
    if out.is_empty() {
        return Ok(Augmented {
            sentence: sentence.clone(),
            alignment: (0..tokens.len()).map(Some).collect(),
        });
    }
    let mut s = Sentence::new(out).with_spans(source, new_spans, type_count)?;
    s.set_origin_language(sentence.origin_language());
    Ok(Augmented { sentence: s, alignment })
}

fn selected(row: &[f64], gamma: f64, strict: bool) -> bool {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if strict {
        max > gamma
    } else {
        max >= gamma
    }
}

/// Self-training rounds on the corpus text (its labels are ignored).
///
/// Each round snapshots predictions, keeps tokens whose top probability
/// clears `gamma`, and fits the sharpened snapshot rows on the original
/// sentences and on one augmented view of each.
pub fn self_train<T: Scalar, E: Encoder<T>>(
    params: &TaggerParams<T, E>,
    corpus: &Corpus,
    config: &TrainConfig,
) -> Result<TaggerParams<T, E>> {
    config.validate()?;
    let scheme = &params.scheme;
    let mut current = params.clone();
    for round in 0..config.self_train_rounds {
        let snapshot = current.forward(&corpus.sentences)?;
        let mut targets: Vec<Array2<T>> = Vec::with_capacity(2 * corpus.len());
        let mut masks: Vec<Vec<bool>> = Vec::with_capacity(2 * corpus.len());
        let mut predicted = Vec::with_capacity(corpus.len());
        for probs in &snapshot {
            let mut target = Array2::zeros(probs.raw_dim());
            let mut mask = Vec::with_capacity(probs.nrows());
            for (t, row) in probs.rows().into_iter().enumerate() {
                let row: Vec<T> = row.to_vec();
                let as64: Vec<f64> = row.iter().map(|v| v.as_f64()).collect();
                mask.push(selected(&as64, config.gamma, config.strict_gamma));
                let sharp = sharpen(&row)?;
                target.row_mut(t).assign(&ndarray::ArrayView1::from(&sharp[..]));
            }
            predicted.push(decode_labels(&argmax_rows(probs), scheme));
            targets.push(target);
            masks.push(mask);
        }
        let chosen: usize = masks.iter().flatten().filter(|&&m| m).count();
        log::debug!("self-training round {}: {chosen} tokens selected", round + 1);
        if chosen == 0 {
            continue;
        }

        let mut gaz = Gazetteers::new(scheme);
        for (s, spans) in corpus.sentences.iter().zip(&predicted) {
            for span in spans {
                gaz.add(span.etype, s.tokens()[span.start..span.end].to_vec());
            }
        }
        let mut aug_tokens: Vec<Vec<String>> = Vec::with_capacity(corpus.len());
        for (i, s) in corpus.sentences.iter().enumerate() {
            let view = Sentence::new(s.tokens().iter().cloned()).with_spans(
                LabelSource::Weak,
                predicted[i].clone(),
                scheme.type_count(),
            )?;
            let aug = augment_sentence(
                &view,
                LabelSource::Weak,
                &gaz,
                config.drop_rate,
                config.replace_prob,
                derive_seed(config.seed, &[round as u64, i as u64]),
            )?;
            let spans = aug.sentence.weak().unwrap_or(&[]);
            let labels = encode_labels(spans, aug.sentence.len(), scheme);
            let mut target = Array2::zeros((aug.sentence.len(), scheme.label_count()));
            let mut mask = Vec::with_capacity(aug.sentence.len());
            for (j, src) in aug.alignment.iter().enumerate() {
                match *src {
                    Some(o) => {
                        target.row_mut(j).assign(&targets[i].row(o));
                        mask.push(masks[i][o]);
                    }
                    None => {
                        // substituted entity token: one-hot on its new tag, trusted
                        // only when the whole original span was selected
                        let k = spans
                            .iter()
                            .position(|sp| sp.start <= j && j < sp.end)
                            .expect("substituted tokens lie inside a span");
                        let orig = predicted[i][k];
                        target[[j, labels[j]]] = T::one();
                        mask.push((orig.start..orig.end).all(|o| masks[i][o]));
                    }
                }
            }
            aug_tokens.push(aug.sentence.tokens().to_vec());
            targets.push(target);
            masks.push(mask);
        }
        let mut tokens: Vec<&[String]> = corpus.sentences.iter().map(|s| s.tokens()).collect();
        tokens.extend(aug_tokens.iter().map(Vec::as_slice));
        current = fit_soft_targets(
            &current,
            &tokens,
            &targets,
            &masks,
            &config.with_seed(derive_seed(config.seed, &[round as u64, u64::MAX])),
        )?;
    }
    Ok(current)
}
