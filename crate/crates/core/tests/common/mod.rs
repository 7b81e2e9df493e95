#![allow(dead_code)]

use std::sync::Arc;

use controster::model::{ModelConfig, TaggerParams, Vocab};
use controster::weaklabel::{generate_synthetic, SynthSpec};
use controster::{Corpus, Scalar};

/// Small two-type synthetic corpus with clean gold labels.
pub fn toy_corpus(n: usize, seed: u64) -> Corpus {
    let spec = SynthSpec::from_toml(&format!(
        r#"
sentence_count = {n}
target_entities_per_entry = 1.2
seed = {seed}
templates = [
  "{{Virus}} cases rise in {{Location}}",
  "officials in {{Location}} report new infections",
  "the {{Virus}} outbreak worries doctors",
  "doctors study {{Virus}} samples",
]
[gazetteers]
Virus = ["Zika virus", "H5N1", "SARS-CoV-2", "Ebola"]
Location = ["Wuhan", "New York City", "Lagos", "Lima"]
"#
    ))
    .unwrap();
    generate_synthetic(&spec).unwrap()
}

pub fn small_config() -> ModelConfig {
    ModelConfig {
        embedding_dim: 16,
        hidden_dim: 16,
        ..Default::default()
    }
}

pub fn tagger<T: Scalar>(corpora: &[&Corpus], cfg: &ModelConfig, seed: u64) -> TaggerParams<T> {
    let vocab = Arc::new(Vocab::build(corpora.iter().copied(), cfg.lowercase));
    TaggerParams::new(vocab, Arc::clone(&corpora[0].scheme), cfg, seed)
}
