//! Sentences, entity spans and corpora.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheme::{Language, TagScheme, TypeIdx};

/// A flat entity mention over token positions `start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub etype: TypeIdx,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, etype: TypeIdx) -> Self {
        EntitySpan { start, end, etype }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    fn describe(&self) -> String {
        format!("({}, {}, #{})", self.start, self.end, self.etype.0)
    }
}

/// Sorts `spans` by start and checks bounds and pairwise disjointness.
pub fn validate_spans(spans: &mut [EntitySpan], len: usize, type_count: usize) -> Result<()> {
    spans.sort();
    for s in spans.iter() {
        if s.start >= s.end || s.end > len {
            return Err(Error::InvalidSpan {
                span: s.describe(),
                reason: format!("out of bounds for sentence of length {len}"),
            });
        }
        if s.etype.0 >= type_count {
            return Err(Error::InvalidSpan {
                span: s.describe(),
                reason: "entity type not in scheme".into(),
            });
        }
    }
    for w in spans.windows(2) {
        if w[1].start < w[0].end {
            return Err(Error::InvalidSpan {
                span: w[1].describe(),
                reason: format!("overlaps {}", w[0].describe()),
            });
        }
    }
    Ok(())
}

/// Which label layer of a sentence to read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Gold,
    Weak,
}

impl LabelSource {
    pub fn name(self) -> &'static str {
        match self {
            LabelSource::Gold => "gold",
            LabelSource::Weak => "weak",
        }
    }
}

impl FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gold" | "strong" => Ok(LabelSource::Gold),
            "weak" => Ok(LabelSource::Weak),
            other => Err(Error::validation(format!("unknown label source `{other}`"))),
        }
    }
}

/// How trustworthy a corpus' labels are.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelQuality {
    Strong,
    Weak,
    Unlabeled,
}

impl fmt::Display for LabelQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelQuality::Strong => "strong",
            LabelQuality::Weak => "weak",
            LabelQuality::Unlabeled => "unlabeled",
        })
    }
}

impl FromStr for LabelQuality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strong" => Ok(LabelQuality::Strong),
            "weak" => Ok(LabelQuality::Weak),
            "unlabeled" => Ok(LabelQuality::Unlabeled),
            other => Err(Error::validation(format!("unknown label quality `{other}`"))),
        }
    }
}

/// A tokenized sentence with optional gold and weak span layers.
///
/// Span layers are kept sorted by start position and are always disjoint and
/// within bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<String>,
    gold: Option<Vec<EntitySpan>>,
    weak: Option<Vec<EntitySpan>>,
    origin_language: Option<Language>,
}

impl Sentence {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        Sentence {
            tokens: tokens.into_iter().map(Into::into).collect(),
            gold: None,
            weak: None,
            origin_language: None,
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn gold(&self) -> Option<&[EntitySpan]> {
        self.gold.as_deref()
    }

    pub fn weak(&self) -> Option<&[EntitySpan]> {
        self.weak.as_deref()
    }

    pub fn spans(&self, source: LabelSource) -> Option<&[EntitySpan]> {
        match source {
            LabelSource::Gold => self.gold(),
            LabelSource::Weak => self.weak(),
        }
    }

    pub fn origin_language(&self) -> Option<Language> {
        self.origin_language
    }

    pub fn set_origin_language(&mut self, lang: Option<Language>) {
        self.origin_language = lang;
    }

    /// Replaces one label layer. `None` removes it.
    pub fn set_spans(
        &mut self,
        source: LabelSource,
        spans: Option<Vec<EntitySpan>>,
        type_count: usize,
    ) -> Result<()> {
        let spans = match spans {
            Some(mut s) => {
                validate_spans(&mut s, self.tokens.len(), type_count)?;
                Some(s)
            }
            None => None,
        };
        match source {
            LabelSource::Gold => self.gold = spans,
            LabelSource::Weak => self.weak = spans,
        }
        Ok(())
    }

    pub fn with_spans(
        mut self,
        source: LabelSource,
        spans: Vec<EntitySpan>,
        type_count: usize,
    ) -> Result<Self> {
        self.set_spans(source, Some(spans), type_count)?;
        Ok(self)
    }
}

/// An ordered collection of sentences sharing one tag scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub scheme: Arc<TagScheme>,
    pub quality: LabelQuality,
    pub domain: String,
}

impl Corpus {
    pub fn new(scheme: Arc<TagScheme>, quality: LabelQuality, domain: impl Into<String>) -> Self {
        Corpus {
            sentences: Vec::new(),
            scheme,
            quality,
            domain: domain.into(),
        }
    }

    pub fn with_sentences(mut self, sentences: Vec<Sentence>) -> Result<Self> {
        self.sentences = sentences;
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Checks that every span references a type of the scheme.
    pub fn validate(&self) -> Result<()> {
        let types = self.scheme.type_count();
        for s in &self.sentences {
            for layer in [s.gold(), s.weak()].into_iter().flatten() {
                let mut copy = layer.to_vec();
                validate_spans(&mut copy, s.len(), types)?;
            }
        }
        Ok(())
    }

    /// Span layer of every sentence, failing on the first sentence without it.
    pub fn span_layers(&self, source: LabelSource) -> Result<Vec<&[EntitySpan]>> {
        self.sentences
            .iter()
            .enumerate()
            .map(|(i, s)| s.spans(source).ok_or(Error::MissingLabels(i, source.name())))
            .collect()
    }

    /// A corpus holding the sentences at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            sentences: indices.iter().map(|&i| self.sentences[i].clone()).collect(),
            scheme: Arc::clone(&self.scheme),
            quality: self.quality,
            domain: self.domain.clone(),
        }
    }

    /// The first `n` sentences (or all, if fewer).
    pub fn head(&self, n: usize) -> Corpus {
        let n = n.min(self.len());
        Corpus {
            sentences: self.sentences[..n].to_vec(),
            scheme: Arc::clone(&self.scheme),
            quality: self.quality,
            domain: self.domain.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlapping_spans_are_rejected() {
        let mut spans = vec![
            EntitySpan::new(0, 2, TypeIdx(0)),
            EntitySpan::new(1, 3, TypeIdx(1)),
        ];
        let err = validate_spans(&mut spans, 4, 2).unwrap_err();
        assert!(err.to_string().contains("(1, 3, #1)"), "{err}");
    }

    #[test]
    fn out_of_bounds_spans_are_rejected() {
        let mut spans = vec![EntitySpan::new(2, 5, TypeIdx(0))];
        assert!(validate_spans(&mut spans, 4, 1).is_err());
        let mut empty = vec![EntitySpan::new(2, 2, TypeIdx(0))];
        assert!(validate_spans(&mut empty, 4, 1).is_err());
    }

    #[test]
    fn span_layers_reports_missing_sentence() {
        let scheme = Arc::new(TagScheme::covidnews());
        let corpus = Corpus::new(scheme, LabelQuality::Strong, "t")
            .with_sentences(vec![
                Sentence::new(["a"]).with_spans(LabelSource::Gold, vec![], 10).unwrap(),
                Sentence::new(["b"]),
            ])
            .unwrap();
        assert!(matches!(
            corpus.span_layers(LabelSource::Gold),
            Err(Error::MissingLabels(1, "gold"))
        ));
    }
}
