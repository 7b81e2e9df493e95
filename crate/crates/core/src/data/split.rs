//! Monte Carlo train/validation/test splitting that keeps every entity type
//! spread across partitions in proportion to partition size.
//!
//! Each candidate is a seeded uniform shuffle cut at the requested sizes. Its
//! score is the L1 deviation
//!
//! ```text
//! sum over types t, partitions p of | count(t, p) / count(t) - size(p) / N |
//! ```
//!
//! skipping types that never occur. The lowest score wins; ties go to the
//! earliest candidate.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, LabelSource};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    /// Train, validation and test sentence counts.
    pub sizes: [usize; 3],
    pub iterations: usize,
    pub seed: u64,
}

impl SplitSpec {
    /// 70/10/20 sizes for a corpus of `n` sentences, 10000 candidates.
    pub fn proportional(n: usize, seed: u64) -> Self {
        let train = (n as f64 * 0.7).round() as usize;
        let val = ((n as f64 * 0.1).round() as usize).min(n - train);
        SplitSpec {
            sizes: [train, val, n - train - val],
            iterations: 10_000,
            seed,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let total: usize = self.sizes.iter().sum();
        if total != n {
            return Err(Error::validation(format!(
                "split sizes {:?} sum to {total}, corpus has {n} sentences",
                self.sizes
            )));
        }
        if self.iterations == 0 {
            return Err(Error::validation("split needs at least one iteration"));
        }
        Ok(())
    }
}

/// Sentence indices of the three partitions of candidate `iteration`, each
/// sorted ascending.
pub fn candidate_partition(n: usize, sizes: [usize; 3], seed: u64, iteration: usize) -> [Vec<usize>; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut parts: [Vec<usize>; 3] = Default::default();
    let mut rest = order.as_slice();
    for (p, &size) in parts.iter_mut().zip(&sizes) {
        let (head, tail) = rest.split_at(size);
        *p = head.to_vec();
        p.sort_unstable();
        rest = tail;
    }
    parts
}

/// Per-sentence entity counts by type, the input to [`partition_score`].
pub fn type_counts(corpus: &Corpus, source: LabelSource) -> Result<Vec<Vec<usize>>> {
    let types = corpus.scheme.type_count();
    Ok(corpus
        .span_layers(source)?
        .into_iter()
        .map(|spans| {
            let mut c = vec![0; types];
            for s in spans {
                c[s.etype.0] += 1;
            }
            c
        })
        .collect())
}

pub fn partition_score(counts: &[Vec<usize>], parts: &[Vec<usize>; 3]) -> f64 {
    let n = counts.len();
    let types = counts.first().map_or(0, Vec::len);
    if n == 0 {
        return 0.0;
    }
    let mut per_part = vec![[0usize; 3]; types];
    for (p, idx) in parts.iter().enumerate() {
        for &i in idx {
            for (t, &c) in counts[i].iter().enumerate() {
                per_part[t][p] += c;
            }
        }
    }
    let mut score = 0.0;
    for row in &per_part {
        let total: usize = row.iter().sum();
        if total == 0 {
            continue;
        }
        for (p, idx) in parts.iter().enumerate() {
            score += (row[p] as f64 / total as f64 - idx.len() as f64 / n as f64).abs();
        }
    }
    score
}

#[derive(Clone, Debug)]
pub struct SplitOutcome {
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
    pub indices: [Vec<usize>; 3],
    pub chosen_iteration: usize,
    pub score: f64,
}

pub fn monte_carlo_split(corpus: &Corpus, spec: &SplitSpec, source: LabelSource) -> Result<SplitOutcome> {
    spec.validate(corpus.len())?;
    let counts = type_counts(corpus, source)?;
    let mut best: Option<(usize, f64, [Vec<usize>; 3])> = None;
    for it in 0..spec.iterations {
        let parts = candidate_partition(corpus.len(), spec.sizes, spec.seed, it);
        let score = partition_score(&counts, &parts);
        if best.as_ref().is_none_or(|b| score < b.1) {
            best = Some((it, score, parts));
        }
    }
    let (chosen_iteration, score, indices) = best.expect("at least one iteration");
    Ok(SplitOutcome {
        train: corpus.subset(&indices[0]),
        validation: corpus.subset(&indices[1]),
        test: corpus.subset(&indices[2]),
        indices,
        chosen_iteration,
        score,
    })
}
