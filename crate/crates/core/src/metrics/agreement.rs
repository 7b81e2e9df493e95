//! Pairwise inter-annotator agreement and per-language weak-label diagnostics.

use std::collections::BTreeMap;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::prf::{check_aligned, span_prf, PrfReport, SpanSource};
use crate::scheme::Language;
use crate::table::Table;

#[derive(Clone, Debug, PartialEq)]
pub struct AgreementReport {
    pub mean_f1: f64,
    /// Population standard deviation of the pairwise scores.
    pub std_dev: f64,
    /// `(i, j, micro F1)` for every pair `i < j`.
    pub pair_scores: Vec<(usize, usize, f64)>,
}

impl AgreementReport {
    pub fn table(rows: &[(&str, &AgreementReport)]) -> Table {
        let mut t = Table::new(["Test", "F1", "Std. Dev"]);
        for (name, r) in rows {
            let std = if r.pair_scores.len() > 1 {
                format!("{:.2}", r.std_dev)
            } else {
                "-".to_owned()
            };
            t.push([name.to_string(), format!("{:.1}", r.mean_f1), std]);
        }
        t
    }
}

pub fn mean_and_population_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Micro span F1 between every unordered pair of annotations.
pub fn pairwise_agreement(annotations: &[SpanSource<'_>]) -> Result<AgreementReport> {
    if annotations.len() < 2 {
        return Err(Error::validation("agreement needs at least two annotations"));
    }
    let mut pair_scores = Vec::new();
    for i in 0..annotations.len() {
        for j in i + 1..annotations.len() {
            let r = span_prf(annotations[j], annotations[i])?;
            pair_scores.push((i, j, r.micro.f1));
        }
    }
    let scores: Vec<f64> = pair_scores.iter().map(|p| p.2).collect();
    let (mean_f1, std_dev) = mean_and_population_std(&scores);
    Ok(AgreementReport {
        mean_f1,
        std_dev,
        pair_scores,
    })
}

#[derive(Clone, Debug)]
pub struct LanguageRow {
    /// `Combined` or a language name.
    pub name: String,
    pub entries: usize,
    pub report: PrfReport,
}

#[derive(Clone, Debug)]
pub struct LanguageReport {
    pub rows: Vec<LanguageRow>,
    /// Languages with no sentences.
    pub omitted: Vec<Language>,
}

impl LanguageReport {
    pub fn row(&self, name: &str) -> Option<&LanguageRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Uses the support-weighted average of each subset.
    pub fn table(&self) -> Table {
        let mut t = Table::new(["Entry Language", "Entries", "Pre.", "Rec.", "F1"]);
        for r in &self.rows {
            let w = &r.report.weighted;
            t.push([
                r.name.clone(),
                r.entries.to_string(),
                format!("{:.1}", w.precision),
                format!("{:.1}", w.recall),
                format!("{:.1}", w.f1),
            ]);
        }
        t
    }
}

/// Scores `pred` against `gold` on the whole corpus and on each
/// origin-language subset. Languages read from `gold`.
pub fn compare_by_language(pred: SpanSource<'_>, gold: SpanSource<'_>) -> Result<LanguageReport> {
    check_aligned(pred.corpus, gold.corpus)?;
    let mut groups: BTreeMap<Language, Vec<usize>> = BTreeMap::new();
    for (i, s) in gold.corpus.sentences.iter().enumerate() {
        let lang = s.origin_language().ok_or_else(|| {
            Error::validation(format!("sentence {i} has no origin language"))
        })?;
        groups.entry(lang).or_default().push(i);
    }
    let mut rows = vec![LanguageRow {
        name: "Combined".to_owned(),
        entries: gold.corpus.len(),
        report: span_prf(pred, gold)?,
    }];
    let mut omitted = Vec::new();
    for lang in Language::ALL {
        let Some(idx) = groups.get(&lang) else {
            log::warn!("no {lang} sentences; row omitted");
            omitted.push(lang);
            continue;
        };
        let p: Corpus = pred.corpus.subset(idx);
        let g: Corpus = gold.corpus.subset(idx);
        rows.push(LanguageRow {
            name: lang.name().to_owned(),
            entries: idx.len(),
            report: span_prf(SpanSource::new(&p, pred.source), SpanSource::new(&g, gold.source))?,
        });
    }
    Ok(LanguageReport { rows, omitted })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::corpus::{EntitySpan, LabelQuality, LabelSource, Sentence};
    use crate::scheme::{TagScheme, TypeIdx};

    fn corpus(layers: &[Vec<(usize, usize)>], lang: Option<Language>) -> Corpus {
        let sentences = layers
            .iter()
            .map(|spans| {
                let spans = spans.iter().map(|&(s, e)| EntitySpan::new(s, e, TypeIdx(0))).collect();
                let mut s = Sentence::new(["a", "b", "c", "d", "e", "f"])
                    .with_spans(LabelSource::Gold, spans, 10)
                    .unwrap();
                s.set_origin_language(lang);
                s
            })
            .collect();
        Corpus::new(Arc::new(TagScheme::covidnews()), LabelQuality::Strong, "t")
            .with_sentences(sentences)
            .unwrap()
    }

    #[test]
    fn self_agreement_is_perfect() {
        let c = corpus(&[vec![(0, 1), (2, 4)], vec![(5, 6)]], None);
        let r = pairwise_agreement(&[SpanSource::gold(&c), SpanSource::gold(&c)]).unwrap();
        assert_eq!(r.mean_f1, 100.0);
        assert_eq!(r.std_dev, 0.0);
    }

    #[test]
    fn missing_half_gives_two_thirds() {
        let a = corpus(&[vec![(0, 1), (2, 4)], vec![(4, 5), (5, 6)]], None);
        let b = corpus(&[vec![(0, 1)], vec![(5, 6)]], None);
        let r = pairwise_agreement(&[SpanSource::gold(&a), SpanSource::gold(&b)]).unwrap();
        assert!((r.mean_f1 - 66.666_666_666).abs() < 1e-6);
        assert_eq!(format!("{:.2}", r.mean_f1), "66.67");
    }

    #[test]
    fn agreement_is_symmetric_and_needs_two_sources() {
        let a = corpus(&[vec![(0, 1), (2, 4)]], None);
        let b = corpus(&[vec![(0, 1), (2, 3)]], None);
        let ab = pairwise_agreement(&[SpanSource::gold(&a), SpanSource::gold(&b)]).unwrap();
        let ba = pairwise_agreement(&[SpanSource::gold(&b), SpanSource::gold(&a)]).unwrap();
        assert_eq!(ab.mean_f1, ba.mean_f1);
        assert!(pairwise_agreement(&[SpanSource::gold(&a)]).is_err());
    }

    #[test]
    fn single_language_matches_combined() {
        let gold = corpus(&[vec![(0, 1), (2, 4)], vec![(5, 6)]], Some(Language::French));
        let pred = corpus(&[vec![(0, 1)], vec![(5, 6), (1, 2)]], Some(Language::French));
        let r = compare_by_language(SpanSource::gold(&pred), SpanSource::gold(&gold)).unwrap();
        let combined = &r.row("Combined").unwrap().report;
        let french = &r.row("French").unwrap().report;
        assert_eq!(combined, french);
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.omitted.len(), 3);
    }

    #[test]
    fn missing_language_tag_is_an_error() {
        let c = corpus(&[vec![]], None);
        assert!(compare_by_language(SpanSource::gold(&c), SpanSource::gold(&c)).is_err());
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_and_population_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert_eq!(s, 2.0);
    }
}
