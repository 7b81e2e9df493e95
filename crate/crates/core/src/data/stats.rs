//! Corpus-level statistics and per-type entity counts.

use crate::corpus::{Corpus, LabelSource};
use crate::error::Result;
use crate::table::Table;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorpusStats {
    pub total_entries: usize,
    pub total_words: usize,
    pub total_labelled_words: usize,
    pub total_entities: usize,
    /// Words per entity.
    pub mean_entity_length: f64,
    /// Percentage of words inside an entity.
    pub percent_labelled_words: f64,
    pub mean_entities_per_entry: f64,
}

impl CorpusStats {
    pub const ROWS: [&'static str; 7] = [
        "Total Entries (Sentences)",
        "Total Words",
        "Total Labelled Words",
        "Total Entities",
        "Mean Entity Length",
        "Percent Labelled Words",
        "Mean Entities Per Entry",
    ];

    fn cells(&self) -> [String; 7] {
        [
            self.total_entries.to_string(),
            self.total_words.to_string(),
            self.total_labelled_words.to_string(),
            self.total_entities.to_string(),
            format!("{:.2}", self.mean_entity_length),
            format!("{:.1}%", self.percent_labelled_words),
            format!("{:.2}", self.mean_entities_per_entry),
        ]
    }

    /// One column per named statistics set, rows as in the dataset summary.
    pub fn table(columns: &[(&str, &CorpusStats)]) -> Table {
        let mut t = Table::new(std::iter::once("Metric").chain(columns.iter().map(|c| c.0)));
        let cells: Vec<[String; 7]> = columns.iter().map(|c| c.1.cells()).collect();
        for (i, row) in Self::ROWS.iter().enumerate() {
            t.push(std::iter::once(row.to_string()).chain(cells.iter().map(|c| c[i].clone())));
        }
        t
    }
}

fn ratio(num: f64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

pub fn corpus_stats(corpus: &Corpus, source: LabelSource) -> Result<CorpusStats> {
    let layers = corpus.span_layers(source)?;
    let total_entries = corpus.len();
    let total_words: usize = corpus.sentences.iter().map(|s| s.len()).sum();
    let total_entities: usize = layers.iter().map(|l| l.len()).sum();
    let total_labelled_words: usize = layers.iter().flat_map(|l| l.iter()).map(|s| s.len()).sum();
    Ok(CorpusStats {
        total_entries,
        total_words,
        total_labelled_words,
        total_entities,
        mean_entity_length: ratio(total_labelled_words as f64, total_entities),
        percent_labelled_words: ratio(100.0 * total_labelled_words as f64, total_words),
        mean_entities_per_entry: ratio(total_entities as f64, total_entries),
    })
}

/// Span counts per scheme type, in scheme order.
pub fn entity_counts(corpus: &Corpus, source: LabelSource) -> Result<Vec<(String, usize)>> {
    let layers = corpus.span_layers(source)?;
    let mut counts = vec![0usize; corpus.scheme.type_count()];
    for s in layers.iter().flat_map(|l| l.iter()) {
        counts[s.etype.0] += 1;
    }
    Ok(corpus
        .scheme
        .types()
        .iter()
        .cloned()
        .zip(counts)
        .collect())
}

pub fn entity_count_table(columns: &[(&str, &[(String, usize)])]) -> Table {
    let mut t = Table::new(std::iter::once("Entity Type").chain(columns.iter().map(|c| c.0)));
    if let Some((_, first)) = columns.first() {
        for (i, (name, _)) in first.iter().enumerate() {
            t.push(
                std::iter::once(name.clone()).chain(columns.iter().map(|c| c.1[i].1.to_string())),
            );
        }
    }
    t.push(std::iter::once("Total".to_owned()).chain(
        columns
            .iter()
            .map(|c| c.1.iter().map(|x| x.1).sum::<usize>().to_string()),
    ));
    t
}
