//! Corpus serialization: BIO columns and JSON lines.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bio::{decode_labels, encode_labels};
use crate::corpus::{Corpus, EntitySpan, LabelQuality, LabelSource, Sentence};
use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};
use crate::scheme::{Language, TagScheme};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `token TAG` per line, blank line between sentences. The tag column
    /// fills one label layer.
    BioColumns(LabelSource),
    JsonLines,
}

impl CorpusFormat {
    /// Guesses from the extension: `.jsonl`/`.json` are JSON lines, anything
    /// else BIO columns holding gold labels.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CorpusFormat::JsonLines,
            _ => CorpusFormat::BioColumns(LabelSource::Gold),
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json-lines" | "jsonl" => Ok(CorpusFormat::JsonLines),
            "bio-columns" | "bio" => Ok(CorpusFormat::BioColumns(LabelSource::Gold)),
            "bio-columns:weak" => Ok(CorpusFormat::BioColumns(LabelSource::Weak)),
            other => Err(Error::validation(format!("unknown corpus format `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_spans: Option<Vec<(usize, usize, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weak_spans: Option<Vec<(usize, usize, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin_language: Option<String>,
}

fn domain_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn infer_quality(sentences: &[Sentence]) -> LabelQuality {
    if sentences.iter().any(|s| s.gold().is_some()) {
        LabelQuality::Strong
    } else if sentences.iter().any(|s| s.weak().is_some()) {
        LabelQuality::Weak
    } else {
        LabelQuality::Unlabeled
    }
}

pub fn read_corpus(path: &Path, format: CorpusFormat, scheme: &Arc<TagScheme>) -> Result<Corpus> {
    let text = read_to_string(path)?;
    let sentences = match format {
        CorpusFormat::JsonLines => parse_json_lines(&text, path, scheme)?,
        CorpusFormat::BioColumns(layer) => parse_bio_columns(&text, path, scheme, layer)?,
    };
    Ok(Corpus {
        quality: infer_quality(&sentences),
        sentences,
        scheme: Arc::clone(scheme),
        domain: domain_of(path),
    })
}

pub fn parse_json_lines(text: &str, path: &Path, scheme: &TagScheme) -> Result<Vec<Sentence>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        let rec: Record = serde_json::from_str(line).map_err(|e| perr(e.to_string()))?;
        let mut sentence = Sentence::new(rec.tokens);
        for (source, spans) in [
            (LabelSource::Gold, rec.gold_spans),
            (LabelSource::Weak, rec.weak_spans),
        ] {
            let Some(spans) = spans else { continue };
            let spans = spans
                .into_iter()
                .map(|(start, end, name)| {
                    let etype = scheme
                        .type_idx(&name)
                        .map_err(|_| perr(format!("unknown entity type `{name}`")))?;
                    Ok(EntitySpan::new(start, end, etype))
                })
                .collect::<Result<Vec<_>>>()?;
            sentence
                .set_spans(source, Some(spans), scheme.type_count())
                .map_err(|e| perr(e.to_string()))?;
        }
        if let Some(lang) = rec.origin_language {
            let lang: Language = lang.parse().map_err(|e: Error| perr(e.to_string()))?;
            sentence.set_origin_language(Some(lang));
        }
        out.push(sentence);
    }
    Ok(out)
}

pub fn parse_bio_columns(
    text: &str,
    path: &Path,
    scheme: &TagScheme,
    layer: LabelSource,
) -> Result<Vec<Sentence>> {
    let mut out = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut labelled: Option<bool> = None;

    let mut flush = |tokens: &mut Vec<String>, labels: &mut Vec<usize>, labelled: &mut Option<bool>| {
        if tokens.is_empty() {
            return;
        }
        let mut s = Sentence::new(std::mem::take(tokens));
        if labelled.take() == Some(true) {
            let spans = decode_labels(labels, scheme);
            s.set_spans(layer, Some(spans), scheme.type_count())
                .expect("decoded spans are valid");
        }
        labels.clear();
        out.push(s);
    };

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let perr = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        if line.trim().is_empty() {
            flush(&mut tokens, &mut labels, &mut labelled);
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let has_tag = match fields.len() {
            1 => false,
            2 => true,
            n => return Err(perr(format!("expected `token TAG`, found {n} fields"))),
        };
        if *labelled.get_or_insert(has_tag) != has_tag {
            return Err(perr("sentence mixes tagged and untagged lines".into()));
        }
        tokens.push(fields[0].to_owned());
        if has_tag {
            let tag = fields[1];
            let label = scheme.parse_label(tag).map_err(|_| {
                match tag.split_once('-') {
                    Some((_, name)) if scheme.type_idx(name).is_err() => {
                        perr(format!("unknown entity type `{name}`"))
                    }
                    _ => perr(format!("unknown tag `{tag}`")),
                }
            })?;
            labels.push(label);
        }
    }
    flush(&mut tokens, &mut labels, &mut labelled);
    Ok(out)
}

/// Canonical text for `corpus`; equal corpora always render identically.
pub fn render_corpus(corpus: &Corpus, format: CorpusFormat) -> Result<String> {
    let scheme = &corpus.scheme;
    let mut out = String::new();
    match format {
        CorpusFormat::JsonLines => {
            let named = |spans: Option<&[EntitySpan]>| {
                spans.map(|ss| {
                    ss.iter()
                        .map(|s| (s.start, s.end, scheme.type_name(s.etype).to_owned()))
                        .collect::<Vec<_>>()
                })
            };
            for s in &corpus.sentences {
                let rec = Record {
                    tokens: s.tokens().to_vec(),
                    gold_spans: named(s.gold()),
                    weak_spans: named(s.weak()),
                    origin_language: s.origin_language().map(|l| l.name().to_owned()),
                };
                out.push_str(&serde_json::to_string(&rec)?);
                out.push('\n');
            }
        }
        CorpusFormat::BioColumns(layer) => {
            for (i, s) in corpus.sentences.iter().enumerate() {
                if s.is_empty() {
                    return Err(Error::validation(format!(
                        "sentence {i} is empty and cannot be written as columns"
                    )));
                }
                if let Some(tok) = s.tokens().iter().find(|t| t.is_empty() || t.contains(char::is_whitespace)) {
                    return Err(Error::validation(format!(
                        "sentence {i}: token {tok:?} cannot be written as a column"
                    )));
                }
                match s.spans(layer) {
                    Some(spans) => {
                        let labels = encode_labels(spans, s.len(), scheme);
                        for (tok, l) in s.tokens().iter().zip(labels) {
                            let _ = writeln!(out, "{tok} {}", scheme.label_name(l));
                        }
                    }
                    None => {
                        for tok in s.tokens() {
                            let _ = writeln!(out, "{tok}");
                        }
                    }
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn write_corpus(corpus: &Corpus, path: &Path, format: CorpusFormat) -> Result<()> {
    let text = render_corpus(corpus, format)?;
    write_atomic(path, text.as_bytes())
}
