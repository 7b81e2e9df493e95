//! Lossless BIO codec between span lists and per-token label sequences.

use std::sync::Arc;

use crate::corpus::{validate_spans, EntitySpan};
use crate::error::Result;
use crate::scheme::{Label, TagScheme};

/// Label indices bound to the scheme they index into.
///
/// Equality compares the scheme as well, so sequences from different label
/// spaces never compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagSequence {
    scheme: Arc<TagScheme>,
    labels: Vec<usize>,
}

impl TagSequence {
    pub fn scheme(&self) -> &Arc<TagScheme> {
        &self.scheme
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Parses tag strings such as `B-Virus`; fails on tags outside the scheme.
    pub fn parse<S: AsRef<str>>(scheme: Arc<TagScheme>, tags: &[S]) -> Result<Self> {
        let labels = tags
            .iter()
            .map(|t| scheme.parse_label(t.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(TagSequence { scheme, labels })
    }

    /// Wraps raw label indices. Panics if an index is outside the scheme.
    pub fn from_labels(scheme: Arc<TagScheme>, labels: Vec<usize>) -> Self {
        let n = scheme.label_count();
        assert!(labels.iter().all(|&l| l < n), "label index out of range");
        TagSequence { scheme, labels }
    }

    pub fn names(&self) -> Vec<String> {
        self.labels.iter().map(|&l| self.scheme.label_name(l)).collect()
    }
}

/// Encodes spans as a BIO sequence of length `len`.
pub fn encode_bio(spans: &[EntitySpan], len: usize, scheme: &Arc<TagScheme>) -> Result<TagSequence> {
    let mut checked = spans.to_vec();
    validate_spans(&mut checked, len, scheme.type_count())?;
    Ok(TagSequence {
        scheme: Arc::clone(scheme),
        labels: encode_labels(&checked, len, scheme),
    })
}

/// Encodes already validated spans without re-checking them.
pub(crate) fn encode_labels(spans: &[EntitySpan], len: usize, scheme: &TagScheme) -> Vec<usize> {
    let mut labels = vec![0; len];
    for s in spans {
        labels[s.start] = scheme.begin(s.etype);
        for l in &mut labels[s.start + 1..s.end] {
            *l = scheme.inside(s.etype);
        }
    }
    labels
}

/// Decodes a BIO sequence into spans.
///
/// An `I-X` that does not continue a span of type `X` opens a new span, as if
/// it were `B-X`.
pub fn decode_bio(tags: &TagSequence) -> Vec<EntitySpan> {
    decode_labels(&tags.labels, &tags.scheme)
}

pub(crate) fn decode_labels(labels: &[usize], scheme: &TagScheme) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<EntitySpan> = None;
    for (i, &l) in labels.iter().enumerate() {
        match scheme.label(l) {
            Label::Outside => spans.extend(open.take()),
            Label::Begin(t) => {
                spans.extend(open.take());
                open = Some(EntitySpan::new(i, i + 1, t));
            }
            Label::Inside(t) => match open.as_mut() {
                Some(s) if s.etype == t => s.end = i + 1,
                _ => {
                    spans.extend(open.take());
                    open = Some(EntitySpan::new(i, i + 1, t));
                }
            },
        }
    }
    spans.extend(open);
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::scheme::TypeIdx;

    fn scheme() -> Arc<TagScheme> {
        Arc::new(TagScheme::covidnews())
    }

    fn ty(s: &TagScheme, name: &str) -> TypeIdx {
        s.type_idx(name).unwrap()
    }

    #[test]
    fn encodes_definition_examples() {
        let s = scheme();
        let virus = ty(&s, "Virus");
        let tags = encode_bio(&[EntitySpan::new(0, 2, virus)], 3, &s).unwrap();
        assert_eq!(tags.names(), ["B-Virus", "I-Virus", "O"]);

        assert_eq!(encode_bio(&[], 2, &s).unwrap().names(), ["O", "O"]);

        let disease = ty(&s, "Disease");
        let tags = encode_bio(&[EntitySpan::new(1, 2, disease)], 2, &s).unwrap();
        assert_eq!(tags.names(), ["O", "B-Disease"]);
    }

    #[test]
    fn encode_rejects_overlap_and_out_of_bounds() {
        let s = scheme();
        let t = ty(&s, "Person");
        let err = encode_bio(&[EntitySpan::new(0, 2, t), EntitySpan::new(1, 3, t)], 4, &s);
        assert!(matches!(err, Err(Error::InvalidSpan { .. })));
        let err = encode_bio(&[EntitySpan::new(2, 5, t)], 4, &s);
        assert!(matches!(err, Err(Error::InvalidSpan { .. })));
    }

    #[test]
    fn decodes_definition_examples() {
        let s = scheme();
        let virus = ty(&s, "Virus");
        let tags = TagSequence::parse(s.clone(), &["B-Virus", "I-Virus", "O"]).unwrap();
        assert_eq!(decode_bio(&tags), [EntitySpan::new(0, 2, virus)]);

        let disease = ty(&s, "Disease");
        let tags = TagSequence::parse(s.clone(), &["I-Disease"]).unwrap();
        assert_eq!(decode_bio(&tags), [EntitySpan::new(0, 1, disease)]);

        let person = ty(&s, "Person");
        let tags = TagSequence::parse(s.clone(), &["B-Person", "B-Person"]).unwrap();
        assert_eq!(
            decode_bio(&tags),
            [EntitySpan::new(0, 1, person), EntitySpan::new(1, 2, person)]
        );
    }

    #[test]
    fn inside_of_other_type_starts_new_span() {
        let s = scheme();
        let tags = TagSequence::parse(s.clone(), &["B-Virus", "I-Disease", "I-Disease"]).unwrap();
        assert_eq!(
            decode_bio(&tags),
            [
                EntitySpan::new(0, 1, ty(&s, "Virus")),
                EntitySpan::new(1, 3, ty(&s, "Disease"))
            ]
        );
    }

    #[test]
    fn unknown_tag_string_is_an_error() {
        let err = TagSequence::parse(scheme(), &["B-Virus", "B-Planet"]).unwrap_err();
        assert!(matches!(err, Error::UnknownTag(t) if t == "B-Planet"));
    }

    #[test]
    fn sequences_from_different_schemes_differ() {
        let a = TagSequence::from_labels(scheme(), vec![0, 1]);
        let other = Arc::new(TagScheme::new(["PER", "LOC"]).unwrap());
        let b = TagSequence::from_labels(other, vec![0, 1]);
        assert_ne!(a, b);
    }
}
