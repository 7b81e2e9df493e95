//! Corpus IO, filtering, statistics and splitting.

pub mod filter;
pub mod format;
pub mod split;
pub mod stats;

pub use filter::{filter_corpus, FilterConfig, FilterReport, FilterRule, QualityPredicate};
pub use format::{read_corpus, render_corpus, write_corpus, CorpusFormat};
pub use split::{monte_carlo_split, SplitOutcome, SplitSpec};
pub use stats::{corpus_stats, entity_counts, CorpusStats};
