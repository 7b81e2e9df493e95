//! Gazetteer and token-regex rules producing weak entity spans.
//!
//! A phrase rule matches a literal token sequence. A pattern rule is a
//! whitespace-separated list of regular expressions, each of which must match
//! one whole token. Overlapping matches are resolved longest first, then by
//! higher priority, then leftmost, so the result does not depend on the order
//! rules are listed in.

use std::path::Path;
use std::sync::Arc;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EntitySpan, LabelQuality, LabelSource, Sentence};
use crate::error::{Error, Result};
use crate::io::read_to_string;
use crate::scheme::{TagScheme, TypeIdx};

/// One line of a rule file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrase: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    #[serde(rename = "type")]
    pub etype: String,
    #[serde(default)]
    pub priority: i32,
    #[serde(default = "yes")]
    pub case_sensitive: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug)]
pub enum Matcher {
    Phrase(Vec<String>),
    Pattern(Vec<Regex>),
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub name: String,
    pub matcher: Matcher,
    pub etype: TypeIdx,
    pub priority: i32,
    pub case_sensitive: bool,
}

impl Rule {
    pub fn phrase(phrase: &str, etype: TypeIdx, priority: i32) -> Self {
        Rule {
            name: phrase.to_owned(),
            matcher: Matcher::Phrase(phrase.split_whitespace().map(str::to_owned).collect()),
            etype,
            priority,
            case_sensitive: true,
        }
    }

    pub fn compile(spec: &RuleSpec, scheme: &TagScheme) -> Result<Self> {
        let etype = scheme.type_idx(&spec.etype)?;
        let (name, matcher) = match (&spec.phrase, &spec.pattern) {
            (Some(p), None) => {
                let toks: Vec<String> = p
                    .split_whitespace()
                    .map(|t| if spec.case_sensitive { t.to_owned() } else { t.to_lowercase() })
                    .collect();
                (p.clone(), Matcher::Phrase(toks))
            }
            (None, Some(p)) => {
                let flags = if spec.case_sensitive { "" } else { "(?i)" };
                let regexes = p
                    .split_whitespace()
                    .map(|t| {
                        Regex::new(&format!("{flags}^(?:{t})$")).map_err(|source| Error::Rule {
                            rule: p.clone(),
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                (p.clone(), Matcher::Pattern(regexes))
            }
            _ => {
                return Err(Error::validation(format!(
                    "rule for type {} needs exactly one of `phrase` or `pattern`",
                    spec.etype
                )))
            }
        };
        let empty = match &matcher {
            Matcher::Phrase(t) => t.is_empty(),
            Matcher::Pattern(r) => r.is_empty(),
        };
        if empty {
            return Err(Error::validation(format!("rule `{name}` has an empty matcher")));
        }
        Ok(Rule {
            name,
            matcher,
            etype,
            priority: spec.priority,
            case_sensitive: spec.case_sensitive,
        })
    }

    fn width(&self) -> usize {
        match &self.matcher {
            Matcher::Phrase(t) => t.len(),
            Matcher::Pattern(r) => r.len(),
        }
    }

    fn matches_at(&self, tokens: &[String], lowered: &[String], start: usize) -> bool {
        let w = self.width();
        if start + w > tokens.len() {
            return false;
        }
        match &self.matcher {
            Matcher::Phrase(words) => {
                let src = if self.case_sensitive { tokens } else { lowered };
                src[start..start + w].iter().zip(words).all(|(a, b)| a == b)
            }
            Matcher::Pattern(res) => tokens[start..start + w]
                .iter()
                .zip(res)
                .all(|(t, re)| re.is_match(t)),
        }
    }
}

pub fn parse_rules(text: &str, scheme: &TagScheme) -> Result<Vec<Rule>> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let spec: RuleSpec = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: "<rules>".into(),
            line: i + 1,
            message: e.to_string(),
        })?;
        rules.push(Rule::compile(&spec, scheme)?);
    }
    Ok(rules)
}

pub fn load_rules(path: &Path, scheme: &TagScheme) -> Result<Vec<Rule>> {
    parse_rules(&read_to_string(path)?, scheme).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

/// Non-overlapping weak spans for `tokens`.
pub fn apply_rules(tokens: &[String], rules: &[Rule]) -> Vec<EntitySpan> {
    let lowered: Vec<String> = if rules.iter().any(|r| !r.case_sensitive) {
        tokens.iter().map(|t| t.to_lowercase()).collect()
    } else {
        Vec::new()
    };
    // (len, priority, start, type)
    let mut cands: Vec<(usize, i32, usize, usize)> = Vec::new();
    for rule in rules {
        for start in 0..tokens.len() {
            if rule.matches_at(tokens, &lowered, start) {
                cands.push((rule.width(), rule.priority, start, rule.etype.0));
            }
        }
    }
    cands.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    cands.dedup();
    let mut taken = vec![false; tokens.len()];
    let mut spans = Vec::new();
    for (len, _, start, t) in cands {
        if taken[start..start + len].iter().any(|&x| x) {
            continue;
        }
        taken[start..start + len].iter_mut().for_each(|x| *x = true);
        spans.push(EntitySpan::new(start, start + len, TypeIdx(t)));
    }
    spans.sort();
    spans
}

/// Attaches rule output to every sentence as its weak layer.
pub fn weak_label_corpus(corpus: &Corpus, rules: &[Rule]) -> Corpus {
    let types = corpus.scheme.type_count();
    let sentences: Vec<Sentence> = corpus
        .sentences
        .iter()
        .map(|s| {
            let mut s = s.clone();
            let spans = apply_rules(s.tokens(), rules);
            s.set_spans(LabelSource::Weak, Some(spans), types)
                .expect("rule output is a valid span list");
            s
        })
        .collect();
    Corpus {
        sentences,
        scheme: Arc::clone(&corpus.scheme),
        quality: if corpus.quality == LabelQuality::Unlabeled {
            LabelQuality::Weak
        } else {
            corpus.quality
        },
        domain: corpus.domain.clone(),
    }
}
