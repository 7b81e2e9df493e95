//! Weak label sources: rule matching, gold corruption and synthetic corpora.

pub mod noise;
pub mod rules;
pub mod synth;

pub use noise::{corrupt_gold, NoiseProfile};
pub use rules::{apply_rules, load_rules, parse_rules, weak_label_corpus, Matcher, Rule, RuleSpec};
pub use synth::{generate_synthetic, SynthSpec};
