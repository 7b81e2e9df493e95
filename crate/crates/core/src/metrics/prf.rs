//! Exact-match span precision, recall and F1.

use crate::corpus::{Corpus, EntitySpan, LabelSource};
use crate::error::{Error, Result};
use crate::scheme::TagScheme;
use crate::table::Table;

/// One label layer of a corpus.
#[derive(Clone, Copy, Debug)]
pub struct SpanSource<'a> {
    pub corpus: &'a Corpus,
    pub source: LabelSource,
}

impl<'a> SpanSource<'a> {
    pub fn new(corpus: &'a Corpus, source: LabelSource) -> Self {
        SpanSource { corpus, source }
    }

    pub fn gold(corpus: &'a Corpus) -> Self {
        Self::new(corpus, LabelSource::Gold)
    }

    pub fn weak(corpus: &'a Corpus) -> Self {
        Self::new(corpus, LabelSource::Weak)
    }
}

/// Percentages in `[0, 100]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Scores from counts. Nothing predicted against nothing expected is
    /// perfect agreement.
    pub fn from_counts(tp: usize, predicted: usize, gold: usize) -> Self {
        if predicted == 0 && gold == 0 {
            return Prf::perfect();
        }
        let precision = if predicted > 0 { 100.0 * tp as f64 / predicted as f64 } else { 0.0 };
        let recall = if gold > 0 { 100.0 * tp as f64 / gold as f64 } else { 0.0 };
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }

    pub fn perfect() -> Self {
        Prf {
            precision: 100.0,
            recall: 100.0,
            f1: 100.0,
        }
    }

    pub fn zero() -> Self {
        Prf {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        }
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeRow {
    pub etype: String,
    pub scores: Prf,
    /// Gold spans of this type.
    pub support: usize,
    pub predicted: usize,
    pub true_positives: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrfReport {
    /// Types that occur in gold or prediction, in scheme order.
    pub per_type: Vec<TypeRow>,
    pub micro: Prf,
    /// Per-type scores averaged with gold support as weights.
    pub weighted: Prf,
    pub total_support: usize,
    pub total_predicted: usize,
    pub true_positives: usize,
}

impl PrfReport {
    pub fn row(&self, etype: &str) -> Option<&TypeRow> {
        self.per_type.iter().find(|r| r.etype == etype)
    }

    /// Per-type table closed by a `Weighted Avg` row.
    pub fn table(&self) -> Table {
        let mut t = Table::new(["Entity Type", "Pre.", "Rec.", "F1", "Support"]);
        for r in &self.per_type {
            t.push([
                r.etype.clone(),
                format!("{:.1}", r.scores.precision),
                format!("{:.1}", r.scores.recall),
                format!("{:.1}", r.scores.f1),
                r.support.to_string(),
            ]);
        }
        t.push([
            "Weighted Avg".to_owned(),
            format!("{:.1}", self.weighted.precision),
            format!("{:.1}", self.weighted.recall),
            format!("{:.1}", self.weighted.f1),
            self.total_support.to_string(),
        ]);
        t
    }
}

/// Number of spans present in both sorted, duplicate-free lists.
fn intersect_sorted(a: &[EntitySpan], b: &[EntitySpan], mut hit: impl FnMut(&EntitySpan)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                hit(&a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Scores aligned span layers. Layers must be sorted (as stored in
/// [`crate::Sentence`]).
pub fn prf_from_layers(pred: &[&[EntitySpan]], gold: &[&[EntitySpan]], scheme: &TagScheme) -> PrfReport {
    debug_assert_eq!(pred.len(), gold.len());
    let n = scheme.type_count();
    let mut tp = vec![0usize; n];
    let mut npred = vec![0usize; n];
    let mut ngold = vec![0usize; n];
    for (p, g) in pred.iter().zip(gold) {
        for s in p.iter() {
            npred[s.etype.0] += 1;
        }
        for s in g.iter() {
            ngold[s.etype.0] += 1;
        }
        intersect_sorted(p, g, |s| tp[s.etype.0] += 1);
    }

    let mut per_type = Vec::new();
    for t in 0..n {
        if ngold[t] == 0 && npred[t] == 0 {
            continue;
        }
        per_type.push(TypeRow {
            etype: scheme.types()[t].clone(),
            scores: Prf::from_counts(tp[t], npred[t], ngold[t]),
            support: ngold[t],
            predicted: npred[t],
            true_positives: tp[t],
        });
    }
    let total_tp: usize = tp.iter().sum();
    let total_pred: usize = npred.iter().sum();
    let total_gold: usize = ngold.iter().sum();

    let weighted = if total_gold > 0 {
        let mut acc = [0.0f64; 3];
        for r in &per_type {
            let w = r.support as f64;
            acc[0] += w * r.scores.precision;
            acc[1] += w * r.scores.recall;
            acc[2] += w * r.scores.f1;
        }
        let z = total_gold as f64;
        Prf {
            precision: acc[0] / z,
            recall: acc[1] / z,
            f1: acc[2] / z,
        }
    } else if total_pred == 0 {
        Prf::perfect()
    } else {
        Prf::zero()
    };

    PrfReport {
        per_type,
        micro: Prf::from_counts(total_tp, total_pred, total_gold),
        weighted,
        total_support: total_gold,
        total_predicted: total_pred,
        true_positives: total_tp,
    }
}

pub(crate) fn check_aligned(a: &Corpus, b: &Corpus) -> Result<()> {
    if a.scheme != b.scheme {
        return Err(Error::validation(
            "span sources use different tag schemes; map one onto the other first",
        ));
    }
    if a.len() != b.len() {
        return Err(Error::Misaligned {
            index: a.len().min(b.len()),
            reason: format!("corpora have {} and {} sentences", a.len(), b.len()),
        });
    }
    for (i, (x, y)) in a.sentences.iter().zip(&b.sentences).enumerate() {
        if x.tokens() != y.tokens() {
            return Err(Error::Misaligned {
                index: i,
                reason: "token sequences differ".into(),
            });
        }
    }
    Ok(())
}

pub fn span_prf(pred: SpanSource<'_>, gold: SpanSource<'_>) -> Result<PrfReport> {
    check_aligned(pred.corpus, gold.corpus)?;
    let p = pred.corpus.span_layers(pred.source)?;
    let g = gold.corpus.span_layers(gold.source)?;
    Ok(prf_from_layers(&p, &g, &gold.corpus.scheme))
}
