//! Continual weak-then-strong training for named-entity taggers.

pub mod bio;
pub mod cli;
pub mod corpus;
pub mod data;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod scheme;
pub mod table;
pub mod train;
pub mod weaklabel;

pub use bio::{decode_bio, encode_bio, TagSequence};
pub use corpus::{Corpus, EntitySpan, LabelQuality, LabelSource, Sentence};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use scheme::{EntityType, Label, Language, TagScheme, TypeIdx};

/// Single-precision tagger used by the command-line tools.
pub type Tagger = model::TaggerParams<f32>;
/// Double-precision tagger, used for gradient checks.
pub type Tagger64 = model::TaggerParams<f64>;
