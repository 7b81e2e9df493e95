//! Token classifier: a contextual encoder plus a linear softmax head bound to
//! one tag scheme.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bio::decode_labels;
use crate::corpus::{Corpus, LabelQuality, LabelSource, Sentence};
use crate::error::{Error, Result};
use crate::model::encoder::{uniform, xavier_bound, BiRnnEncoder, Encoder, Gradient};
use crate::model::vocab::Vocab;
use crate::scalar::Scalar;
use crate::scheme::TagScheme;

/// Probability rows, one `len x label_count` matrix per sentence.
pub type PredictionBatch<T> = Vec<Array2<T>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub lowercase: bool,
    /// Initial logit bias of the `O` label.
    pub o_bias: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embedding_dim: 64,
            hidden_dim: 128,
            lowercase: false,
            o_bias: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Head<T> {
    /// `encoder_dim x label_count`.
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Head<T> {
    pub fn init(input: usize, labels: usize, o_bias: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bias = Array1::zeros(labels);
        bias[0] = T::of(o_bias);
        Head {
            weight: uniform(input, labels, xavier_bound(input, labels), &mut rng),
            bias,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TaggerGrad<T, G> {
    pub encoder: G,
    pub head_weight: Array2<T>,
    pub head_bias: Array1<T>,
}

impl<T: Scalar, G: Gradient<T>> TaggerGrad<T, G> {
    pub fn clear(&mut self) {
        self.encoder.clear();
        self.head_weight.fill(T::zero());
        self.head_bias.fill(T::zero());
    }

    pub fn slices(&self) -> Vec<&[T]> {
        let mut v = self.encoder.slices();
        v.push(self.head_weight.as_slice().expect("standard layout"));
        v.push(self.head_bias.as_slice().expect("standard layout"));
        v
    }
}

/// Activations kept from a forward pass for back-propagation.
pub struct ForwardPass<T, C> {
    pub probs: Array2<T>,
    encoded: Array2<T>,
    cache: C,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaggerParams<T, E = BiRnnEncoder<T>> {
    pub encoder: E,
    pub head: Head<T>,
    pub scheme: Arc<TagScheme>,
}

impl<T: Scalar> TaggerParams<T, BiRnnEncoder<T>> {
    /// Fresh recurrent tagger over `vocab`.
    pub fn new(vocab: Arc<Vocab>, scheme: Arc<TagScheme>, config: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = BiRnnEncoder::init(vocab, config.embedding_dim, config.hidden_dim, &mut rng);
        let head = Head::init(
            encoder.output_dim(),
            scheme.label_count(),
            config.o_bias,
            seed ^ 0x4845_4144,
        );
        TaggerParams { encoder, head, scheme }
    }
}

pub(crate) fn softmax_rows<T: Scalar>(logits: &mut Array2<T>) {
    for mut row in logits.rows_mut() {
        let max = row.fold(T::neg_infinity(), |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let z = row.sum();
        row.mapv_inplace(|v| v / z);
    }
}

impl<T: Scalar, E: Encoder<T>> TaggerParams<T, E> {
    pub fn label_count(&self) -> usize {
        self.scheme.label_count()
    }

    pub fn forward_sentence(&self, tokens: &[String]) -> Result<ForwardPass<T, E::Cache>> {
        if tokens.is_empty() {
            return Err(Error::validation("cannot tag an empty sentence"));
        }
        let (encoded, cache) = self.encoder.encode(tokens);
        let mut probs = encoded.dot(&self.head.weight);
        probs += &self.head.bias;
        softmax_rows(&mut probs);
        Ok(ForwardPass { probs, encoded, cache })
    }

    /// Per-token label distributions for each sentence.
    pub fn forward(&self, sentences: &[Sentence]) -> Result<PredictionBatch<T>> {
        sentences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                self.forward_sentence(s.tokens())
                    .map(|p| p.probs)
                    .map_err(|_| Error::validation(format!("sentence {i} is empty")))
            })
            .collect()
    }

    pub fn zero_grad(&self) -> TaggerGrad<T, E::Grad> {
        TaggerGrad {
            encoder: self.encoder.zero_grad(),
            head_weight: Array2::zeros(self.head.weight.raw_dim()),
            head_bias: Array1::zeros(self.head.bias.raw_dim()),
        }
    }

    /// Accumulates gradients given `d_logits`, the loss gradient with respect
    /// to the pre-softmax scores of `pass`.
    pub fn backward(
        &self,
        pass: &ForwardPass<T, E::Cache>,
        d_logits: ArrayView2<'_, T>,
        grad: &mut TaggerGrad<T, E::Grad>,
    ) {
        general_mat_mul(T::one(), &pass.encoded.t(), &d_logits, T::one(), &mut grad.head_weight);
        grad.head_bias += &d_logits.sum_axis(Axis(0));
        let d_encoded = d_logits.dot(&self.head.weight.t());
        self.encoder.backward(&pass.cache, d_encoded.view(), &mut grad.encoder);
    }

    pub fn params(&self) -> Vec<&[T]> {
        let mut v = self.encoder.params();
        v.push(self.head.weight.as_slice().expect("standard layout"));
        v.push(self.head.bias.as_slice().expect("standard layout"));
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut v = self.encoder.params_mut();
        v.push(self.head.weight.as_slice_mut().expect("standard layout"));
        v.push(self.head.bias.as_slice_mut().expect("standard layout"));
        v
    }

    /// Hash of the encoder's parameter bits.
    pub fn encoder_fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for slice in self.encoder.params() {
            slice.len().hash(&mut h);
            for v in slice {
                v.bits().hash(&mut h);
            }
        }
        h.finish()
    }

    /// Same encoder, fresh seeded head for `scheme`.
    pub fn reinit_head(&self, scheme: Arc<TagScheme>, o_bias: f64, seed: u64) -> Self {
        TaggerParams {
            encoder: self.encoder.clone(),
            head: Head::init(self.encoder.output_dim(), scheme.label_count(), o_bias, seed),
            scheme,
        }
    }

    /// Argmax labels per token of one sentence.
    pub fn predict_labels(&self, tokens: &[String]) -> Result<Vec<usize>> {
        let pass = self.forward_sentence(tokens)?;
        Ok(argmax_rows(&pass.probs))
    }

    /// Copy of `corpus` whose weak layer holds this model's predictions.
    pub fn predict_tags(&self, corpus: &Corpus) -> Result<Corpus> {
        if *corpus.scheme != *self.scheme {
            return Err(Error::validation("corpus and model use different tag schemes"));
        }
        let mut sentences = corpus.sentences.clone();
        for (i, s) in sentences.iter_mut().enumerate() {
            let labels = self
                .predict_labels(s.tokens())
                .map_err(|_| Error::validation(format!("sentence {i} is empty")))?;
            let spans = decode_labels(&labels, &self.scheme);
            s.set_spans(LabelSource::Weak, Some(spans), self.scheme.type_count())?;
        }
        Ok(Corpus {
            sentences,
            scheme: Arc::clone(&corpus.scheme),
            quality: LabelQuality::Weak,
            domain: corpus.domain.clone(),
        })
    }
}

pub fn argmax_rows<T: Scalar>(probs: &Array2<T>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
