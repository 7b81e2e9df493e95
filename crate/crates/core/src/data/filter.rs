//! Sentence filtering cascade: length limits, non-ASCII text, duplicates and
//! a pluggable quality check.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::corpus::{Corpus, Sentence};
use crate::error::{Error, Result};
use crate::table::Table;

/// Sentence-level acceptance hook, e.g. an external grammar checker.
pub type QualityPredicate = Arc<dyn Fn(&Sentence) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct FilterConfig {
    pub min_words: usize,
    pub min_chars: usize,
    pub max_chars: usize,
    pub reject_non_ascii: bool,
    pub dedupe: bool,
    pub quality_predicate: Option<QualityPredicate>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_words: 4,
            min_chars: 15,
            max_chars: 500,
            reject_non_ascii: true,
            dedupe: true,
            quality_predicate: None,
        }
    }
}

impl fmt::Debug for FilterConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilterConfig")
            .field("min_words", &self.min_words)
            .field("min_chars", &self.min_chars)
            .field("max_chars", &self.max_chars)
            .field("reject_non_ascii", &self.reject_non_ascii)
            .field("dedupe", &self.dedupe)
            .field("quality_predicate", &self.quality_predicate.is_some())
            .finish()
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_words < 1 {
            return Err(Error::validation("min_words must be at least 1"));
        }
        if self.min_chars >= self.max_chars {
            return Err(Error::validation("min_chars must be below max_chars"));
        }
        Ok(())
    }
}

/// Rules in the order they are applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FilterRule {
    LengthWords,
    LengthCharsMin,
    LengthCharsMax,
    NonAscii,
    Duplicate,
    Predicate,
}

impl FilterRule {
    pub const ORDER: [FilterRule; 6] = [
        FilterRule::LengthWords,
        FilterRule::LengthCharsMin,
        FilterRule::LengthCharsMax,
        FilterRule::NonAscii,
        FilterRule::Duplicate,
        FilterRule::Predicate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterRule::LengthWords => "length-words",
            FilterRule::LengthCharsMin => "length-chars-min",
            FilterRule::LengthCharsMax => "length-chars-max",
            FilterRule::NonAscii => "non-ascii",
            FilterRule::Duplicate => "duplicate",
            FilterRule::Predicate => "predicate",
        }
    }
}

/// Rejection count per rule; each rejected sentence is charged to the first
/// rule it failed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub rejected: [usize; 6],
}

impl FilterReport {
    pub fn count(&self, rule: FilterRule) -> usize {
        self.rejected[FilterRule::ORDER.iter().position(|r| *r == rule).unwrap()]
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(["Rule", "Rejected"]);
        for (rule, n) in FilterRule::ORDER.iter().zip(self.rejected) {
            t.push([rule.name().to_owned(), n.to_string()]);
        }
        t.push(["kept".to_owned(), self.kept.to_string()]);
        t
    }
}

/// Whitespace-normalized text used for duplicate detection.
pub fn dedupe_key(sentence: &Sentence) -> String {
    sentence
        .tokens()
        .iter()
        .flat_map(|t| t.split_whitespace())
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_printable_ascii(c: char) -> bool {
    (' '..='~').contains(&c)
}

fn first_failure(
    s: &Sentence,
    config: &FilterConfig,
    seen: &mut HashSet<String>,
) -> Option<FilterRule> {
    let key = dedupe_key(s);
    let chars = key.chars().count();
    if s.len() < config.min_words {
        return Some(FilterRule::LengthWords);
    }
    if chars < config.min_chars {
        return Some(FilterRule::LengthCharsMin);
    }
    if chars > config.max_chars {
        return Some(FilterRule::LengthCharsMax);
    }
    if config.reject_non_ascii && !key.chars().all(is_printable_ascii) {
        return Some(FilterRule::NonAscii);
    }
    if config.dedupe && !seen.insert(key) {
        return Some(FilterRule::Duplicate);
    }
    if let Some(pred) = &config.quality_predicate {
        if !pred(s) {
            return Some(FilterRule::Predicate);
        }
    }
    None
}

pub fn filter_corpus(corpus: &Corpus, config: &FilterConfig) -> (Corpus, FilterReport) {
    let mut seen = HashSet::new();
    let mut report = FilterReport {
        input: corpus.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for s in &corpus.sentences {
        match first_failure(s, config, &mut seen) {
            None => kept.push(s.clone()),
            Some(rule) => {
                let i = FilterRule::ORDER.iter().position(|r| *r == rule).unwrap();
                report.rejected[i] += 1;
            }
        }
    }
    report.kept = kept.len();
    let out = Corpus {
        sentences: kept,
        scheme: Arc::clone(&corpus.scheme),
        quality: corpus.quality,
        domain: corpus.domain.clone(),
    };
    (out, report)
}
