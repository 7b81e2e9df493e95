//! Entity ontology and the BIO label space built over it.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ten entity types of the pandemic-news ontology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityType {
    Animal,
    Bacterium,
    Disease,
    Location,
    Organisation,
    Person,
    Product,
    Symptom,
    Time,
    Virus,
}

impl EntityType {
    pub const ALL: [EntityType; 10] = [
        EntityType::Animal,
        EntityType::Bacterium,
        EntityType::Disease,
        EntityType::Location,
        EntityType::Organisation,
        EntityType::Person,
        EntityType::Product,
        EntityType::Symptom,
        EntityType::Time,
        EntityType::Virus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityType::Animal => "Animal",
            EntityType::Bacterium => "Bacterium",
            EntityType::Disease => "Disease",
            EntityType::Location => "Location",
            EntityType::Organisation => "Organisation",
            EntityType::Person => "Person",
            EntityType::Product => "Product",
            EntityType::Symptom => "Symptom",
            EntityType::Time => "Time",
            EntityType::Virus => "Virus",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EntityType::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownType(s.to_owned()))
    }
}

/// Index of an entity type within a [`TagScheme`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeIdx(pub usize);

/// A decoded BIO label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Outside,
    Begin(TypeIdx),
    Inside(TypeIdx),
}

/// Ordered entity types plus the derived BIO label space.
///
/// Label 0 is `O`; type `k` owns `B-k = 1 + 2k` and `I-k = 2 + 2k`.
#[derive(Clone, Debug)]
pub struct TagScheme {
    types: Vec<String>,
    index: HashMap<String, usize>,
}

impl PartialEq for TagScheme {
    fn eq(&self, other: &Self) -> bool {
        self.types == other.types
    }
}

impl Eq for TagScheme {}

impl TagScheme {
    pub fn new<S: Into<String>>(types: impl IntoIterator<Item = S>) -> Result<Self> {
        let types: Vec<String> = types.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(types.len());
        for (i, t) in types.iter().enumerate() {
            if t.is_empty() || t.contains(char::is_whitespace) {
                return Err(Error::validation(format!("invalid entity type name `{t}`")));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::validation(format!("duplicate entity type `{t}`")));
            }
        }
        Ok(TagScheme { types, index })
    }

    /// The in-domain ten-type scheme.
    pub fn covidnews() -> Self {
        Self::new(EntityType::ALL.iter().map(|t| t.name())).expect("canonical scheme is valid")
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    pub fn label_count(&self) -> usize {
        2 * self.types.len() + 1
    }

    pub fn type_idx(&self, name: &str) -> Result<TypeIdx> {
        self.index
            .get(name)
            .map(|&i| TypeIdx(i))
            .ok_or_else(|| Error::UnknownType(name.to_owned()))
    }

    pub fn type_name(&self, t: TypeIdx) -> &str {
        &self.types[t.0]
    }

    pub fn begin(&self, t: TypeIdx) -> usize {
        1 + 2 * t.0
    }

    pub fn inside(&self, t: TypeIdx) -> usize {
        2 + 2 * t.0
    }

    pub fn label(&self, idx: usize) -> Label {
        debug_assert!(idx < self.label_count());
        match idx {
            0 => Label::Outside,
            i if i % 2 == 1 => Label::Begin(TypeIdx((i - 1) / 2)),
            i => Label::Inside(TypeIdx((i - 2) / 2)),
        }
    }

    pub fn label_name(&self, idx: usize) -> String {
        match self.label(idx) {
            Label::Outside => "O".to_owned(),
            Label::Begin(t) => format!("B-{}", self.type_name(t)),
            Label::Inside(t) => format!("I-{}", self.type_name(t)),
        }
    }

    pub fn parse_label(&self, tag: &str) -> Result<usize> {
        if tag == "O" {
            return Ok(0);
        }
        let (prefix, name) = tag
            .split_once('-')
            .ok_or_else(|| Error::UnknownTag(tag.to_owned()))?;
        let t = self
            .index
            .get(name)
            .map(|&i| TypeIdx(i))
            .ok_or_else(|| Error::UnknownTag(tag.to_owned()))?;
        match prefix {
            "B" => Ok(self.begin(t)),
            "I" => Ok(self.inside(t)),
            _ => Err(Error::UnknownTag(tag.to_owned())),
        }
    }
}

/// Language a sentence was originally written in before translation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Language {
    English,
    French,
    Indonesian,
    Mandarin,
}

impl Language {
    pub const ALL: [Language; 4] = [
        Language::English,
        Language::French,
        Language::Indonesian,
        Language::Mandarin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Language::English => "English",
            Language::French => "French",
            Language::Indonesian => "Indonesian",
            Language::Mandarin => "Mandarin",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Language::ALL
            .iter()
            .copied()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation(format!("unknown language `{s}`")))
    }
}
