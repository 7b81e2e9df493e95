use std::collections::BTreeMap;
use std::sync::Arc;

use crate::corpus::{Corpus, EntitySpan, LabelSource};
use crate::error::{Error, Result};
use crate::scheme::{TagScheme, TypeIdx};

/// Partial type map between two schemes; unmapped types become `O`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMapping {
    pub source: Arc<TagScheme>,
    pub target: Arc<TagScheme>,
    map: Vec<Option<TypeIdx>>,
}

impl LabelMapping {
    pub fn new(
        source: Arc<TagScheme>,
        target: Arc<TagScheme>,
        pairs: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut map = vec![None; source.type_count()];
        for (from, to) in pairs {
            let f = source
                .type_idx(from)
                .map_err(|_| Error::validation(format!("mapping source type `{from}` is not in the source scheme")))?;
            let t = target
                .type_idx(to)
                .map_err(|_| Error::validation(format!("mapping target type `{to}` is not in the target scheme")))?;
            map[f.0] = Some(t);
        }
        Ok(LabelMapping { source, target, map })
    }

    pub fn identity(scheme: Arc<TagScheme>) -> Self {
        let map = (0..scheme.type_count()).map(|i| Some(TypeIdx(i))).collect();
        LabelMapping {
            source: Arc::clone(&scheme),
            target: scheme,
            map,
        }
    }

    pub fn get(&self, t: TypeIdx) -> Option<TypeIdx> {
        self.map.get(t.0).copied().flatten()
    }
}

/// Renames mapped spans into the target scheme and drops the rest, in both
/// label layers.
pub fn map_label_scheme(corpus: &Corpus, mapping: &LabelMapping) -> Result<Corpus> {
    if *corpus.scheme != *mapping.source {
        return Err(Error::validation("corpus scheme differs from the mapping's source scheme"));
    }
    let mut sentences = corpus.sentences.clone();
    for s in &mut sentences {
        for source in [LabelSource::Gold, LabelSource::Weak] {
            let mapped: Option<Vec<EntitySpan>> = s.spans(source).map(|spans| {
                spans
                    .iter()
                    .filter_map(|sp| mapping.get(sp.etype).map(|t| EntitySpan::new(sp.start, sp.end, t)))
                    .collect()
            });
            s.set_spans(source, mapped, mapping.target.type_count())?;
        }
    }
    Ok(Corpus {
        sentences,
        scheme: Arc::clone(&mapping.target),
        quality: corpus.quality,
        domain: corpus.domain.clone(),
    })
}
