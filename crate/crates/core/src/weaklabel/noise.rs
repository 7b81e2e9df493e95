//! Controlled corruption of gold spans into realistic weak labels.
//!
//! Each gold span is treated independently: it is dropped with `miss_rate`;
//! otherwise a multi-token span loses trailing tokens with `truncate_rate`
//! (new length uniform over `1..len`), and finally its type is redrawn from
//! the confusion row of its gold type.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EntitySpan, LabelQuality, LabelSource};
use crate::error::{Error, Result};
use crate::scheme::{TagScheme, TypeIdx};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseProfile {
    pub miss_rate: f64,
    pub truncate_rate: f64,
    /// Off-diagonal replacement probabilities per gold type. A type's keep
    /// probability is one minus its row sum unless listed explicitly.
    #[serde(default)]
    pub confusion: BTreeMap<String, BTreeMap<String, f64>>,
    pub seed: u64,
}

impl NoiseProfile {
    pub fn identity(seed: u64) -> Self {
        NoiseProfile {
            miss_rate: 0.0,
            truncate_rate: 0.0,
            confusion: BTreeMap::new(),
            seed,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profile serializes")
    }

    /// Dense row-stochastic confusion matrix over `scheme`'s types.
    pub fn confusion_matrix(&self, scheme: &TagScheme) -> Result<Vec<Vec<f64>>> {
        for (name, p) in [("miss_rate", self.miss_rate), ("truncate_rate", self.truncate_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        let n = scheme.type_count();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for (from, row) in &self.confusion {
            let i = scheme.type_idx(from)?.0;
            let mut explicit_keep = None;
            let mut off = 0.0;
            m[i][i] = 0.0;
            for (to, &p) in row {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::validation(format!(
                        "confusion {from} -> {to} must lie in [0, 1], got {p}"
                    )));
                }
                let j = scheme.type_idx(to)?.0;
                if i == j {
                    explicit_keep = Some(p);
                } else {
                    off += p;
                }
                m[i][j] = p;
            }
            let keep = explicit_keep.unwrap_or(1.0 - off);
            if keep < -1e-9 || (off + keep - 1.0).abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "confusion row for {from} does not sum to 1"
                )));
            }
            m[i][i] = keep.max(0.0);
        }
        Ok(m)
    }
}

fn draw(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    // rounding left `u` beyond the cumulative sum: take the last non-zero entry
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Corrupted copies of one sentence's gold spans.
pub fn corrupt_spans(
    gold: &[EntitySpan],
    profile: &NoiseProfile,
    matrix: &[Vec<f64>],
    rng: &mut impl Rng,
) -> Vec<EntitySpan> {
    let mut out = Vec::with_capacity(gold.len());
    for s in gold {
        // fixed number of draws per span keeps streams aligned across profiles
        let u_miss: f64 = rng.gen();
        let u_trunc: f64 = rng.gen();
        let u_len: f64 = rng.gen();
        let u_type: f64 = rng.gen();
        if u_miss < profile.miss_rate {
            continue;
        }
        let mut span = *s;
        if span.len() > 1 && u_trunc < profile.truncate_rate {
            let shorter = 1 + ((u_len * (span.len() - 1) as f64) as usize).min(span.len() - 2);
            span.end = span.start + shorter;
        }
        span.etype = TypeIdx(draw(&matrix[s.etype.0], u_type));
        out.push(span);
    }
    out
}

pub(crate) fn sentence_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Replaces the weak layer of every sentence with corrupted gold spans.
pub fn corrupt_gold(corpus: &Corpus, profile: &NoiseProfile) -> Result<Corpus> {
    let matrix = profile.confusion_matrix(&corpus.scheme)?;
    let types = corpus.scheme.type_count();
    let gold = corpus.span_layers(LabelSource::Gold)?;
    let mut sentences = corpus.sentences.clone();
    for (i, (s, g)) in sentences.iter_mut().zip(gold).enumerate() {
        let mut rng = sentence_rng(profile.seed, i);
        let weak = corrupt_spans(g, profile, &matrix, &mut rng);
        s.set_spans(LabelSource::Weak, Some(weak), types)?;
    }
    Ok(Corpus {
        sentences,
        scheme: Arc::clone(&corpus.scheme),
        quality: LabelQuality::Weak,
        domain: corpus.domain.clone(),
    })
}
