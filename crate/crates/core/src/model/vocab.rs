use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

pub const PAD: usize = 0;
pub const UNK: usize = 1;

/// Token vocabulary; index 0 is padding, 1 the unknown token.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    lowercase: bool,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
    lowercase: bool,
}

impl From<VocabRepr> for Vocab {
    fn from(r: VocabRepr) -> Self {
        let index = r.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab {
            tokens: r.tokens,
            index,
            lowercase: r.lowercase,
        }
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr {
            tokens: v.tokens,
            lowercase: v.lowercase,
        }
    }
}

impl Vocab {
    /// Every token seen at least once, in first-occurrence order.
    pub fn build<'a>(corpora: impl IntoIterator<Item = &'a Corpus>, lowercase: bool) -> Self {
        let mut v = Vocab {
            tokens: vec!["<pad>".to_owned(), "<unk>".to_owned()],
            index: HashMap::new(),
            lowercase,
        };
        v.index.insert(v.tokens[PAD].clone(), PAD);
        v.index.insert(v.tokens[UNK].clone(), UNK);
        for c in corpora {
            for s in &c.sentences {
                for t in s.tokens() {
                    let key = v.normalize(t);
                    if !v.index.contains_key(key.as_ref()) {
                        v.index.insert(key.clone().into_owned(), v.tokens.len());
                        v.tokens.push(key.into_owned());
                    }
                }
            }
        }
        v
    }

    fn normalize<'t>(&self, token: &'t str) -> std::borrow::Cow<'t, str> {
        if self.lowercase {
            token.to_lowercase().into()
        } else {
            token.into()
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(self.normalize(token).as_ref()).copied().unwrap_or(UNK)
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}
