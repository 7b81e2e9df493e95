//! Resumable sweep over backbone variants, weak sizes, strong sizes and seeds.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cli::presets;
use crate::corpus::Corpus;
use crate::data::format::{read_corpus, CorpusFormat};
use crate::error::{Error, Result};
use crate::io::read_to_string;
use crate::metrics::agreement::mean_and_population_std;
use crate::metrics::{span_prf, SpanSource};
use crate::model::ModelConfig;
use crate::scheme::TagScheme;
use crate::table::Table;
use crate::train::{derive_seed, run_controster, Stage, StagePlan, TrainConfig};
use crate::weaklabel::{corrupt_gold, generate_synthetic};

/// Which weak stages precede strong finetuning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Variant {
    /// Strong data only.
    None,
    /// In-domain weak, then strong.
    IndomainWeak,
    /// Out-of-domain weak, in-domain weak, then strong.
    OodIndomainWeak,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::None, Variant::IndomainWeak, Variant::OodIndomainWeak];

    pub fn name(self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::IndomainWeak => "indomain_weak",
            Variant::OodIndomainWeak => "ood_weak+indomain_weak",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown backbone variant `{s}`")))
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.name().to_owned()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    pub variants: Vec<Variant>,
    pub weak_sizes: Vec<usize>,
    pub strong_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
}

/// One grid point. `none` cells always have `weak_size` 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub variant: Variant,
    pub weak_size: usize,
    pub strong_size: usize,
    pub seed: u64,
}

impl Cell {
    pub fn key(&self) -> String {
        format!("{},{},{},{}", self.variant, self.weak_size, self.strong_size, self.seed)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (weak {}, strong {}, seed {})",
            self.variant, self.weak_size, self.strong_size, self.seed
        )
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("variants", self.variants.is_empty()),
            ("weak_sizes", self.weak_sizes.is_empty()),
            ("strong_sizes", self.strong_sizes.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("experiment grid axis `{name}` is empty")));
            }
        }
        Ok(())
    }

    /// Cells in output order. Strong-only cells ignore the weak axis, and a
    /// cell with neither weak nor strong data is skipped.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &variant in &self.variants {
            let weak: Vec<usize> = if variant == Variant::None {
                vec![0]
            } else {
                self.weak_sizes.clone()
            };
            for &weak_size in &weak {
                for &strong_size in &self.strong_sizes {
                    if variant == Variant::None && strong_size == 0 {
                        continue;
                    }
                    for &seed in &self.seeds {
                        out.push(Cell {
                            variant,
                            weak_size,
                            strong_size,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Corpora a sweep draws from. The weak corpora carry weak layers; strong
/// and test carry gold.
#[derive(Clone, Debug)]
pub struct ExperimentCorpora {
    pub ood_weak: Option<Corpus>,
    pub weak: Corpus,
    pub strong: Corpus,
    pub test: Corpus,
}

/// Sizes for the frozen synthetic corpora.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticData {
    pub weak: usize,
    pub strong: usize,
    pub test: usize,
    pub ood: usize,
}

impl Default for SyntheticData {
    fn default() -> Self {
        SyntheticData {
            weak: 3000,
            strong: 1000,
            test: 1000,
            ood: 3000,
        }
    }
}

impl SyntheticData {
    /// In-domain text is generated once and cut into weak, strong and test
    /// parts; the weak part is corrupted with the frozen noise profile.
    pub fn build(&self) -> Result<ExperimentCorpora> {
        let mut spec = presets::indomain_spec()?;
        spec.sentence_count = self.weak + self.strong + self.test;
        let all = generate_synthetic(&spec)?;
        let range = |a: usize, b: usize| all.subset(&(a..b).collect::<Vec<_>>());
        let mut gold_weak = range(0, self.weak);
        gold_weak.domain = "indomain_weak".into();
        let weak = corrupt_gold(&gold_weak, &presets::noise_profile()?)?;
        let mut strong = range(self.weak, self.weak + self.strong);
        strong.domain = "strong".into();
        let mut test = range(self.weak + self.strong, spec.sentence_count);
        test.domain = "test".into();
        let ood_weak = if self.ood > 0 {
            let mut ood = presets::ood_spec()?;
            ood.sentence_count = self.ood;
            let mut c = corrupt_gold(&generate_synthetic(&ood)?, &presets::ood_noise_profile()?)?;
            c.domain = "ood_weak".into();
            Some(c)
        } else {
            None
        };
        Ok(ExperimentCorpora {
            ood_weak,
            weak,
            strong,
            test,
        })
    }
}

/// Corpora read from disk; paths resolve against the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFiles {
    #[serde(default)]
    pub ood_weak: Option<PathBuf>,
    /// Types of the out-of-domain corpus.
    #[serde(default)]
    pub ood_types: Option<Vec<String>>,
    pub weak: PathBuf,
    pub strong: PathBuf,
    pub test: PathBuf,
}

impl DataFiles {
    pub fn load(&self, base: &Path) -> Result<ExperimentCorpora> {
        let scheme = Arc::new(TagScheme::covidnews());
        let read = |p: &Path, s: &Arc<TagScheme>| {
            let full = base.join(p);
            read_corpus(&full, CorpusFormat::from_path(&full), s)
        };
        let mut weak = read(&self.weak, &scheme)?;
        weak.quality = crate::corpus::LabelQuality::Weak;
        let ood_weak = match &self.ood_weak {
            Some(p) => {
                let s = Arc::new(match &self.ood_types {
                    Some(t) => TagScheme::new(t.iter().cloned())?,
                    None => TagScheme::covidnews(),
                });
                let mut c = read(p, &s)?;
                c.quality = crate::corpus::LabelQuality::Weak;
                Some(c)
            }
            None => None,
        };
        let mut strong = read(&self.strong, &scheme)?;
        strong.quality = crate::corpus::LabelQuality::Strong;
        Ok(ExperimentCorpora {
            ood_weak,
            weak,
            strong,
            test: read(&self.test, &scheme)?,
        })
    }
}

/// Epoch budgets per stage kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageEpochs {
    pub ood: usize,
    pub weak: usize,
    pub strong: usize,
}

impl Default for StageEpochs {
    fn default() -> Self {
        StageEpochs {
            ood: 3,
            weak: 3,
            strong: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: ExperimentGrid,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub epochs: StageEpochs,
    #[serde(default)]
    pub synthetic: Option<SyntheticData>,
    #[serde(default)]
    pub files: Option<DataFiles>,
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.grid.validate()?;
        c.train.validate()?;
        if c.synthetic.is_some() && c.files.is_some() {
            return Err(Error::Config("choose either [synthetic] or [files] data, not both".into()));
        }
        Ok(c)
    }

    pub fn corpora(&self, base: &Path) -> Result<ExperimentCorpora> {
        match &self.files {
            Some(f) => f.load(base),
            None => self.synthetic.clone().unwrap_or_default().build(),
        }
    }
}

/// Scores of one trained cell on the test corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// One entry per scheme type; `None` when the type is absent from both
    /// prediction and gold.
    pub per_type_f1: Vec<Option<f64>>,
}

/// The first `strong_size` sentences of a seed-dependent shuffle, so
/// subsets grow by nesting within one seed.
pub fn strong_subset(strong: &Corpus, strong_size: usize, seed: u64) -> Corpus {
    let mut order: Vec<usize> = (0..strong.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x5354])));
    order.truncate(strong_size);
    order.sort_unstable();
    strong.subset(&order)
}

/// The stage plan a cell trains.
pub fn cell_plan(cell: &Cell, corpora: &ExperimentCorpora, epochs: &StageEpochs) -> Result<StagePlan> {
    let missing = |what: &str| Error::validation(format!("cell {cell}: {what}"));
    let mut stages = Vec::new();
    if cell.variant == Variant::OodIndomainWeak {
        let ood = corpora
            .ood_weak
            .as_ref()
            .ok_or_else(|| missing("no out-of-domain weak corpus configured"))?;
        let mut s = Stage::new("ood_weak", ood.clone());
        s.epochs = Some(epochs.ood);
        stages.push(s);
    }
    if cell.variant != Variant::None {
        if cell.weak_size > corpora.weak.len() {
            return Err(missing(&format!(
                "weak size exceeds the {} available sentences",
                corpora.weak.len()
            )));
        }
        let mut s = Stage::new("indomain_weak", corpora.weak.head(cell.weak_size));
        s.epochs = Some(epochs.weak);
        stages.push(s);
    }
    if cell.strong_size > 0 {
        if cell.strong_size > corpora.strong.len() {
            return Err(missing(&format!(
                "strong size exceeds the {} available sentences",
                corpora.strong.len()
            )));
        }
        let mut s = Stage::new("strong", strong_subset(&corpora.strong, cell.strong_size, cell.seed));
        s.epochs = Some(epochs.strong);
        stages.push(s);
    }
    Ok(StagePlan::new(stages))
}

/// Trains and scores one cell; a pure function of its inputs.
pub fn run_cell(cell: &Cell, corpora: &ExperimentCorpora, config: &ExperimentConfig) -> Result<CellResult> {
    let plan = cell_plan(cell, corpora, &config.epochs)?;
    let train = TrainConfig {
        seed: cell.seed,
        ..config.train.clone()
    };
    let run = run_controster::<f32>(&plan, &train, &config.model, &[])?;
    let pred = run.params.predict_tags(&corpora.test)?;
    let report = span_prf(SpanSource::weak(&pred), SpanSource::gold(&corpora.test))?;
    Ok(CellResult {
        cell: *cell,
        precision: report.weighted.precision,
        recall: report.weighted.recall,
        f1: report.weighted.f1,
        per_type_f1: corpora
            .test
            .scheme
            .types()
            .iter()
            .map(|t| report.row(t).map(|r| r.scores.f1))
            .collect(),
    })
}

pub fn results_header(scheme: &TagScheme) -> Vec<String> {
    let mut h: Vec<String> = ["variant", "weak_size", "strong_size", "seed", "precision", "recall", "f1"]
        .map(str::to_owned)
        .to_vec();
    h.extend(scheme.types().iter().map(|t| format!("f1_{t}")));
    h
}

fn result_row(r: &CellResult) -> Vec<String> {
    let mut row = vec![
        r.cell.variant.to_string(),
        r.cell.weak_size.to_string(),
        r.cell.strong_size.to_string(),
        r.cell.seed.to_string(),
        format!("{:.4}", r.precision),
        format!("{:.4}", r.recall),
        format!("{:.4}", r.f1),
    ];
    row.extend(r.per_type_f1.iter().map(|f| f.map_or_else(String::new, |f| format!("{f:.4}"))));
    row
}

/// Completed cells, keyed by [`Cell::key`], mapping to their CSV row.
pub fn read_ledger(path: &Path) -> Result<HashMap<String, Vec<String>>> {
    if !path.exists() {
        return Ok(HashMap::new());
    }
    let mut done = HashMap::new();
    for (i, line) in read_to_string(path)?.lines().enumerate() {
        // a torn final line from a crash is ignored; the cell is simply rerun
        let Some((key, row)) = line.split_once('\t') else {
            log::warn!("{}:{}: ignoring malformed ledger line", path.display(), i + 1);
            continue;
        };
        done.insert(key.to_owned(), row.split(',').map(str::to_owned).collect());
    }
    Ok(done)
}

fn append_ledger(path: &Path, key: &str, row: &[String]) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    writeln!(f, "{key}\t{}", row.join(",")).map_err(|e| Error::io(path, e))?;
    f.sync_data().map_err(|e| Error::io(path, e))
}

pub const LEDGER_FILE: &str = "cells.ledger";
pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Output of a sweep: per-cell rows and per-(variant, sizes) aggregates.
pub struct ExperimentOutput {
    pub results: Table,
    pub summary: Table,
    pub ran: usize,
    pub skipped: usize,
}

/// Runs every cell not yet in `out_dir`'s ledger, then rewrites the results
/// and summary CSVs in grid order.
pub fn run_experiment(config: &ExperimentConfig, corpora: &ExperimentCorpora, out_dir: &Path) -> Result<ExperimentOutput> {
    config.grid.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ledger_path = out_dir.join(LEDGER_FILE);
    let done = read_ledger(&ledger_path)?;
    let cells = config.grid.cells();
    for c in &cells {
        cell_plan(c, corpora, &config.epochs)?;
    }
    let todo: Vec<&Cell> = cells.iter().filter(|c| !done.contains_key(&c.key())).collect();
    let skipped = cells.len() - todo.len();
    if skipped > 0 {
        log::info!("resuming: {skipped} of {} cells already complete", cells.len());
    }

    let finished: Mutex<HashMap<String, Vec<String>>> = Mutex::new(done);
    let next = AtomicUsize::new(0);
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let workers = config.workers.clamp(1, todo.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if failure.lock().expect("lock").is_some() {
                    return;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cell) = todo.get(i) else { return };
                log::info!("cell {}/{}: {cell}", i + 1, todo.len());
                let outcome = run_cell(cell, corpora, config).and_then(|r| {
                    let row = result_row(&r);
                    let mut map = finished.lock().expect("lock");
                    append_ledger(&ledger_path, &cell.key(), &row)?;
                    map.insert(cell.key(), row);
                    Ok(())
                });
                if let Err(e) = outcome {
                    failure.lock().expect("lock").get_or_insert(e);
                    return;
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().expect("lock") {
        return Err(e);
    }

    let finished = finished.into_inner().expect("lock");
    let mut results = Table::new(results_header(&corpora.test.scheme));
    for c in &cells {
        results.push(finished[&c.key()].clone());
    }
    let summary = summarize(&results)?;
    results.write_csv(&out_dir.join(RESULTS_FILE))?;
    summary.write_csv(&out_dir.join(SUMMARY_FILE))?;
    Ok(ExperimentOutput {
        results,
        summary,
        ran: todo.len(),
        skipped,
    })
}

/// Parsed results row used for aggregation and plotting.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub variant: String,
    pub weak_size: usize,
    pub strong_size: usize,
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn parse_field<T: FromStr>(row: &[String], i: usize, name: &str) -> Result<T> {
    row.get(i)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::validation(format!("results row has a bad `{name}` field")))
}

pub fn parse_results(table: &Table) -> Result<Vec<ResultRow>> {
    table
        .rows
        .iter()
        .map(|r| {
            Ok(ResultRow {
                variant: r.first().cloned().unwrap_or_default(),
                weak_size: parse_field(r, 1, "weak_size")?,
                strong_size: parse_field(r, 2, "strong_size")?,
                seed: parse_field(r, 3, "seed")?,
                precision: parse_field(r, 4, "precision")?,
                recall: parse_field(r, 5, "recall")?,
                f1: parse_field(r, 6, "f1")?,
            })
        })
        .collect()
}

pub fn read_results_csv(path: &Path) -> Result<Table> {
    let text = read_to_string(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut t = Table::new(header);
    for rec in reader.records() {
        t.push(rec?.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    Ok(t)
}

/// Mean and population standard deviation of F1 (plus mean P and R) per
/// (variant, weak size, strong size), in first-appearance order.
pub fn aggregate(rows: &[ResultRow]) -> Vec<(String, usize, usize, Vec<&ResultRow>)> {
    let mut groups: Vec<(String, usize, usize, Vec<&ResultRow>)> = Vec::new();
    let mut index: BTreeMap<(String, usize, usize), usize> = BTreeMap::new();
    for r in rows {
        let key = (r.variant.clone(), r.weak_size, r.strong_size);
        let i = *index.entry(key).or_insert_with(|| {
            groups.push((r.variant.clone(), r.weak_size, r.strong_size, Vec::new()));
            groups.len() - 1
        });
        groups[i].3.push(r);
    }
    groups
}

pub fn summarize(results: &Table) -> Result<Table> {
    let rows = parse_results(results)?;
    let mut t = Table::new([
        "variant",
        "weak_size",
        "strong_size",
        "runs",
        "precision_mean",
        "recall_mean",
        "f1_mean",
        "f1_std",
    ]);
    for (variant, weak, strong, members) in aggregate(&rows) {
        let f1: Vec<f64> = members.iter().map(|r| r.f1).collect();
        let (mean, std) = mean_and_population_std(&f1);
        let avg = |f: fn(&ResultRow) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / members.len() as f64;
        t.push([
            variant,
            weak.to_string(),
            strong.to_string(),
            members.len().to_string(),
            format!("{:.2}", avg(|r| r.precision)),
            format!("{:.2}", avg(|r| r.recall)),
            format!("{mean:.2}"),
            format!("{std:.2}"),
        ]);
    }
    Ok(t)
}

/// Human-readable summary with `mean ± std` F1 cells.
pub fn summary_display(summary: &Table) -> Table {
    let mut t = Table::new(["Variant", "Weak", "Strong", "Runs", "F1"]);
    for r in &summary.rows {
        t.push([
            r[0].clone(),
            r[1].clone(),
            r[2].clone(),
            r[3].clone(),
            format!("{} ± {}", r[6], r[7]),
        ]);
    }
    t
}
