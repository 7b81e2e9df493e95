//! Template-and-gazetteer generator for gold-labelled synthetic corpora.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EntitySpan, LabelQuality, LabelSource, Sentence};
use crate::error::{Error, Result};
use crate::scheme::{Language, TagScheme, TypeIdx};
use crate::weaklabel::noise::sentence_rng;

/// Generator settings. Templates are whitespace-tokenized; a `{Type}` token
/// is a slot filled with a phrase from that type's gazetteer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub sentence_count: usize,
    pub target_entities_per_entry: f64,
    pub seed: u64,
    /// Scheme types; defaults to the ten-type in-domain scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub types: Option<Vec<String>>,
    pub templates: Vec<String>,
    pub gazetteers: BTreeMap<String, Vec<String>>,
    /// Relative weights for tagging sentences with an origin language.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub languages: BTreeMap<String, f64>,
    #[serde(default = "default_domain")]
    pub domain: String,
}

fn default_domain() -> String {
    "synthetic".to_owned()
}

/// Tokenized gazetteer phrases of one type.
type Phrases = Vec<Vec<String>>;

enum Piece {
    Word(String),
    Slot(TypeIdx),
}

struct Template {
    pieces: Vec<Piece>,
    slots: usize,
}

impl SynthSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn scheme(&self) -> Result<TagScheme> {
        match &self.types {
            Some(t) => TagScheme::new(t.iter().cloned()),
            None => Ok(TagScheme::covidnews()),
        }
    }

    fn compile(&self, scheme: &TagScheme) -> Result<(Vec<Template>, Vec<Phrases>)> {
        if !(self.target_entities_per_entry >= 0.0 && self.target_entities_per_entry.is_finite()) {
            return Err(Error::validation("target_entities_per_entry must be non-negative"));
        }
        let mut gaz = vec![Vec::new(); scheme.type_count()];
        for (name, phrases) in &self.gazetteers {
            let t = scheme.type_idx(name)?;
            gaz[t.0] = phrases
                .iter()
                .map(|p| p.split_whitespace().map(str::to_owned).collect::<Vec<_>>())
                .filter(|p| !p.is_empty())
                .collect();
        }
        let mut templates = Vec::new();
        for text in &self.templates {
            let mut pieces = Vec::new();
            let mut slots = 0;
            for tok in text.split_whitespace() {
                if let Some(name) = tok.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
                    let t = scheme.type_idx(name)?;
                    if gaz[t.0].is_empty() {
                        return Err(Error::validation(format!(
                            "template `{text}` uses slot {name} with an empty gazetteer"
                        )));
                    }
                    pieces.push(Piece::Slot(t));
                    slots += 1;
                } else {
                    pieces.push(Piece::Word(tok.to_owned()));
                }
            }
            if pieces.is_empty() {
                return Err(Error::validation("empty template"));
            }
            templates.push(Template { pieces, slots });
        }
        if templates.is_empty() && self.sentence_count > 0 {
            return Err(Error::validation("no templates"));
        }
        if self.target_entities_per_entry > 0.0 && !templates.iter().any(|t| t.slots == 1) {
            return Err(Error::validation(
                "at least one single-slot template is needed to reach the entity target",
            ));
        }
        Ok((templates, gaz))
    }
}

/// Generates `spec.sentence_count` gold-labelled sentences.
///
/// Each sentence draws an entity budget of `floor(target)` or `ceil(target)`
/// (matching the target in expectation) and chains templates until it is met.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Corpus> {
    let scheme = Arc::new(spec.scheme()?);
    let (templates, gaz) = spec.compile(&scheme)?;
    let languages: Vec<(Language, f64)> = spec
        .languages
        .iter()
        .map(|(k, &w)| Ok((k.parse::<Language>()?, w)))
        .collect::<Result<_>>()?;
    let lang_total: f64 = languages.iter().map(|l| l.1).sum();

    let base = spec.target_entities_per_entry.floor();
    let frac = spec.target_entities_per_entry - base;
    let min_slots = templates.iter().map(|t| t.slots).min().unwrap_or(0);

    let mut sentences = Vec::with_capacity(spec.sentence_count);
    for i in 0..spec.sentence_count {
        let mut rng = sentence_rng(spec.seed, i);
        let mut need = base as usize + usize::from(rng.gen::<f64>() < frac);
        let mut chosen: Vec<&Template> = Vec::new();
        loop {
            let fitting: Vec<&Template> = templates
                .iter()
                .filter(|t| t.slots > 0 && t.slots <= need)
                .collect();
            if need == 0 || fitting.is_empty() {
                if chosen.is_empty() {
                    let fallback: Vec<&Template> =
                        templates.iter().filter(|t| t.slots == min_slots).collect();
                    chosen.push(fallback.choose(&mut rng).expect("templates exist"));
                }
                break;
            }
            let t = *fitting.choose(&mut rng).expect("non-empty");
            need -= t.slots;
            chosen.push(t);
        }

        let mut tokens: Vec<String> = Vec::new();
        let mut spans = Vec::new();
        for (k, t) in chosen.iter().enumerate() {
            if k > 0 {
                tokens.push("and".to_owned());
            }
            for p in &t.pieces {
                match p {
                    Piece::Word(w) => tokens.push(w.clone()),
                    Piece::Slot(ty) => {
                        let phrase = gaz[ty.0].choose(&mut rng).expect("validated non-empty");
                        let start = tokens.len();
                        tokens.extend(phrase.iter().cloned());
                        spans.push(EntitySpan::new(start, tokens.len(), *ty));
                    }
                }
            }
        }
        let mut s = Sentence::new(tokens).with_spans(LabelSource::Gold, spans, scheme.type_count())?;
        if lang_total > 0.0 {
            let mut u = rng.gen::<f64>() * lang_total;
            let mut pick = languages.last().map(|l| l.0);
            for (l, w) in &languages {
                if u < *w {
                    pick = Some(*l);
                    break;
                }
                u -= w;
            }
            s.set_origin_language(pick);
        }
        sentences.push(s);
    }
    Ok(Corpus {
        sentences,
        scheme,
        quality: LabelQuality::Strong,
        domain: spec.domain.clone(),
    })
}
