//! Command-line front end. Each subcommand wraps one library operation and
//! writes its outputs atomically.

pub mod experiment;
pub mod plot;
pub mod presets;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::corpus::{Corpus, LabelSource};
use crate::data::format::{read_corpus, write_corpus, CorpusFormat};
use crate::data::split::{monte_carlo_split, SplitSpec};
use crate::data::stats::{corpus_stats, entity_count_table, entity_counts, CorpusStats};
use crate::data::{filter_corpus, FilterConfig};
use crate::io::read_to_string;
use crate::metrics::agreement::AgreementReport;
use crate::metrics::{compare_by_language, pairwise_agreement, span_prf, SpanSource};
use crate::model::checkpoint::{load_checkpoint, save_checkpoint};
use crate::scheme::TagScheme;
use crate::table::Table;
use crate::train::{eval_log_table, run_controster, PlanFile};
use crate::weaklabel::{corrupt_gold, generate_synthetic, load_rules, weak_label_corpus, NoiseProfile, SynthSpec};

use experiment::{parse_results, read_results_csv, run_experiment, summary_display, ExperimentConfig, RESULTS_FILE};

#[derive(Parser, Debug)]
#[command(name = "controster", version, about = "Weak-then-strong NER training toolkit")]
pub struct Cli {
    /// Log verbosity (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Corpus statistics in the dataset-summary layout.
    Stats(StatsArgs),
    /// Monte Carlo train/validation/test split.
    Split(SplitArgs),
    /// Sentence filtering cascade.
    Filter(FilterArgs),
    /// Rule-based weak labelling.
    WeakLabel(WeakLabelArgs),
    /// Corrupt gold spans into weak labels with a noise profile.
    Corrupt(CorruptArgs),
    /// Generate a synthetic gold-labelled corpus.
    Gensynth(GensynthArgs),
    /// Run a staged training plan and save the final model.
    Train(TrainArgs),
    /// Span-level precision, recall and F1 against gold labels.
    Evaluate(EvaluateArgs),
    /// Pairwise inter-annotator agreement.
    Iaa(IaaArgs),
    /// Resumable sweep over backbone variants and data sizes.
    Experiment(ExperimentArgs),
}

/// How to read a corpus file.
#[derive(Args, Debug, Clone)]
pub struct CorpusOpts {
    /// `json-lines`, `bio-columns` or `bio-columns:weak`; guessed from the
    /// extension by default.
    #[arg(long)]
    pub format: Option<String>,
    /// Comma-separated entity types; defaults to the ten in-domain types.
    #[arg(long, value_delimiter = ',')]
    pub types: Option<Vec<String>>,
}

impl CorpusOpts {
    fn scheme(&self) -> anyhow::Result<Arc<TagScheme>> {
        Ok(Arc::new(match &self.types {
            Some(t) => TagScheme::new(t.iter().cloned())?,
            None => TagScheme::covidnews(),
        }))
    }

    fn format_for(&self, path: &Path) -> anyhow::Result<CorpusFormat> {
        Ok(match &self.format {
            Some(f) => f.parse()?,
            None => CorpusFormat::from_path(path),
        })
    }

    fn read(&self, path: &Path) -> anyhow::Result<Corpus> {
        let scheme = self.scheme()?;
        read_corpus(path, self.format_for(path)?, &scheme).with_context(|| format!("reading {}", path.display()))
    }

    fn write(&self, corpus: &Corpus, path: &Path) -> anyhow::Result<()> {
        write_corpus(corpus, path, self.format_for(path)?).with_context(|| format!("writing {}", path.display()))
    }
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Corpus files; each becomes one column.
    #[arg(long = "in", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Label layer to count: gold or weak.
    #[arg(long, default_value = "gold")]
    pub labels: LabelSource,
    /// Also print per-type entity counts.
    #[arg(long)]
    pub entities: bool,
    #[command(flatten)]
    pub corpus: CorpusOpts,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Train,validation,test sentence counts; 70/10/20 by default.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "gold")]
    pub labels: LabelSource,
    /// Directory for `<stem>.train`, `.validation` and `.test` files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusOpts,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub min_words: usize,
    #[arg(long, default_value_t = 15)]
    pub min_chars: usize,
    #[arg(long, default_value_t = 500)]
    pub max_chars: usize,
    #[arg(long)]
    pub allow_non_ascii: bool,
    #[arg(long)]
    pub keep_duplicates: bool,
    #[command(flatten)]
    pub corpus: CorpusOpts,
}

#[derive(Args, Debug)]
pub struct WeakLabelArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// JSON-lines rule file.
    #[arg(long)]
    pub rules: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub corpus: CorpusOpts,
}

#[derive(Args, Debug)]
pub struct CorruptArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Noise profile TOML; the frozen profile when omitted.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the profile's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub corpus: CorpusOpts,
}

#[derive(Args, Debug)]
pub struct GensynthArgs {
    /// Generator spec TOML; `--preset` picks a frozen one instead.
    #[arg(long, conflicts_with = "preset")]
    pub spec: Option<PathBuf>,
    /// `indomain` or `ood`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Plan file with `[model]`, `[train]`, `[[stage]]` and `[[eval]]`.
    #[arg(long)]
    pub config: PathBuf,
    /// Checkpoint output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-stage evaluation CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Overrides the config's training seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Gold-labelled corpus.
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted corpus (its weak layer if present, else its gold layer).
    #[arg(long, required_unless_present = "model", conflicts_with = "model")]
    pub pred: Option<PathBuf>,
    /// Checkpoint to tag the gold corpus with.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Also break results down by origin language.
    #[arg(long)]
    pub by_language: bool,
    /// Write the per-type table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub corpus: CorpusOpts,
}

#[derive(Args, Debug)]
pub struct IaaArgs {
    /// One file per annotator, all over the same sentences.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "gold")]
    pub labels: LabelSource,
    #[command(flatten)]
    pub corpus: CorpusOpts,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Experiment TOML; the built-in desk-scale synthetic sweep if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Overrides the config's worker count.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Plot file extension: svg or png.
    #[arg(long, default_value = "svg")]
    pub plot_format: String,
    /// Only redraw plots from an existing results CSV.
    #[arg(long)]
    pub replot: bool,
}

fn print_table(t: &Table) {
    print!("{t}");
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Stats(a) => stats(a),
        Command::Split(a) => split(a),
        Command::Filter(a) => filter(a),
        Command::WeakLabel(a) => weak_label(a),
        Command::Corrupt(a) => corrupt(a),
        Command::Gensynth(a) => gensynth(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Iaa(a) => iaa(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "corpus".into(), |s| s.to_string_lossy().into_owned())
}

fn stats(a: StatsArgs) -> anyhow::Result<()> {
    let corpora: Vec<Corpus> = a.inputs.iter().map(|p| a.corpus.read(p)).collect::<anyhow::Result<_>>()?;
    let names: Vec<String> = a.inputs.iter().map(|p| stem(p)).collect();
    let stats: Vec<CorpusStats> = corpora
        .iter()
        .map(|c| corpus_stats(c, a.labels))
        .collect::<crate::Result<_>>()?;
    let cols: Vec<(&str, &CorpusStats)> = names.iter().map(String::as_str).zip(&stats).collect();
    print_table(&CorpusStats::table(&cols));
    if a.entities {
        let counts: Vec<Vec<(String, usize)>> = corpora
            .iter()
            .map(|c| entity_counts(c, a.labels))
            .collect::<crate::Result<_>>()?;
        let cols: Vec<(&str, &[(String, usize)])> =
            names.iter().map(String::as_str).zip(counts.iter().map(Vec::as_slice)).collect();
        println!();
        print_table(&entity_count_table(&cols));
    }
    Ok(())
}

fn split(a: SplitArgs) -> anyhow::Result<()> {
    let corpus = a.corpus.read(&a.input)?;
    let spec = match &a.sizes {
        Some(s) if s.len() != 3 => bail!("--sizes needs three counts (train,validation,test), got {}", s.len()),
        Some(s) => SplitSpec {
            sizes: [s[0], s[1], s[2]],
            iterations: a.iters,
            seed: a.seed,
        },
        None => SplitSpec {
            iterations: a.iters,
            ..SplitSpec::proportional(corpus.len(), a.seed)
        },
    };
    let out = monte_carlo_split(&corpus, &spec, a.labels)?;
    let ext = a.input.extension().map_or_else(String::new, |e| format!(".{}", e.to_string_lossy()));
    let base = stem(&a.input);
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (part, c) in [("train", &out.train), ("validation", &out.validation), ("test", &out.test)] {
        let path = a.out_dir.join(format!("{base}.{part}{ext}"));
        a.corpus.write(c, &path)?;
        println!("{part}\t{}\t{}", c.len(), path.display());
    }
    println!("chosen iteration {} with score {:.6}", out.chosen_iteration, out.score);
    Ok(())
}

fn filter(a: FilterArgs) -> anyhow::Result<()> {
    let corpus = a.corpus.read(&a.input)?;
    let config = FilterConfig {
        min_words: a.min_words,
        min_chars: a.min_chars,
        max_chars: a.max_chars,
        reject_non_ascii: !a.allow_non_ascii,
        dedupe: !a.keep_duplicates,
        quality_predicate: None,
    };
    config.validate()?;
    let (kept, report) = filter_corpus(&corpus, &config);
    a.corpus.write(&kept, &a.out)?;
    print_table(&report.table());
    Ok(())
}

fn weak_label(a: WeakLabelArgs) -> anyhow::Result<()> {
    let corpus = a.corpus.read(&a.input)?;
    let rules = load_rules(&a.rules, &corpus.scheme)?;
    let out = weak_label_corpus(&corpus, &rules);
    a.corpus.write(&out, &a.out)
}

fn corrupt(a: CorruptArgs) -> anyhow::Result<()> {
    let corpus = a.corpus.read(&a.input)?;
    let mut profile = match &a.profile {
        Some(p) => NoiseProfile::from_toml(&read_to_string(p)?)?,
        None => presets::noise_profile()?,
    };
    if let Some(seed) = a.seed {
        profile.seed = seed;
    }
    let out = corrupt_gold(&corpus, &profile)?;
    a.corpus.write(&out, &a.out)
}

fn gensynth(a: GensynthArgs) -> anyhow::Result<()> {
    let mut spec = match (&a.spec, a.preset.as_deref()) {
        (Some(p), _) => SynthSpec::from_toml(&read_to_string(p)?)?,
        (None, None | Some("indomain")) => presets::indomain_spec()?,
        (None, Some("ood")) => presets::ood_spec()?,
        (None, Some(other)) => bail!("unknown preset `{other}` (use indomain or ood)"),
    };
    if let Some(n) = a.count {
        spec.sentence_count = n;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let corpus = generate_synthetic(&spec)?;
    let format = match &a.format {
        Some(f) => f.parse()?,
        None => CorpusFormat::from_path(&a.out),
    };
    write_corpus(&corpus, &a.out, format)?;
    Ok(())
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let text = read_to_string(&a.config)?;
    let mut plan_file = PlanFile::from_toml(&text).with_context(|| format!("in {}", a.config.display()))?;
    if let Some(seed) = a.seed {
        plan_file.train.seed = seed;
    }
    let base = a.config.parent().unwrap_or(Path::new("."));
    let (plan, evals) = plan_file.resolve(base)?;
    let eval_refs: Vec<&Corpus> = evals.iter().collect();
    let run = run_controster::<f32>(&plan, &plan_file.train, &plan_file.model, &eval_refs)?;
    save_checkpoint(&run.params, &a.out)?;
    let log = eval_log_table(&run.evals);
    if let Some(path) = &a.log {
        log.write_csv(path)?;
    }
    if !run.evals.is_empty() {
        print_table(&log);
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> anyhow::Result<()> {
    let gold = a.corpus.read(&a.gold)?;
    let pred = match (&a.pred, &a.model) {
        (Some(p), _) => {
            let c = a.corpus.read(p)?;
            if c.sentences.iter().all(|s| s.weak().is_some()) {
                c
            } else {
                // prediction file carrying a single (gold) layer
                let mut moved = c.clone();
                for (s, src) in moved.sentences.iter_mut().zip(&c.sentences) {
                    s.set_spans(LabelSource::Weak, src.gold().map(<[_]>::to_vec), c.scheme.type_count())?;
                }
                moved
            }
        }
        (None, Some(m)) => {
            let model: crate::Tagger = load_checkpoint(m)?;
            if *model.scheme != *gold.scheme {
                bail!("model types {:?} differ from the gold corpus types", model.scheme.types());
            }
            let mut g = gold.clone();
            g.scheme = Arc::clone(&model.scheme);
            model.predict_tags(&g)?
        }
        (None, None) => bail!("one of --pred or --model is required"),
    };
    let report = span_prf(SpanSource::weak(&pred), SpanSource::gold(&gold))?;
    let table = report.table();
    print_table(&table);
    println!("weighted F1 {:.1}", report.weighted.f1);
    if let Some(path) = &a.csv {
        table.write_csv(path)?;
    }
    if a.by_language {
        println!();
        print_table(&compare_by_language(SpanSource::weak(&pred), SpanSource::gold(&gold))?.table());
    }
    Ok(())
}

fn iaa(a: IaaArgs) -> anyhow::Result<()> {
    if a.inputs.len() < 2 {
        bail!("agreement needs at least two annotation files");
    }
    let corpora: Vec<Corpus> = a.inputs.iter().map(|p| a.corpus.read(p)).collect::<anyhow::Result<_>>()?;
    let sources: Vec<SpanSource<'_>> = corpora.iter().map(|c| SpanSource::new(c, a.labels)).collect();
    let report = pairwise_agreement(&sources)?;
    print_table(&AgreementReport::table(&[("Annotators", &report)]));
    for (i, j, f) in &report.pair_scores {
        println!("{} vs {}: {f:.1}", stem(&a.inputs[*i]), stem(&a.inputs[*j]));
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> anyhow::Result<()> {
    let ext = a.plot_format.to_ascii_lowercase();
    if ext != "svg" && ext != "png" {
        bail!("--plot-format must be svg or png");
    }
    let strong_plot = a.out_dir.join(format!("f1_by_strong_size.{ext}"));
    let weak_plot = a.out_dir.join(format!("f1_by_weak_size.{ext}"));
    if !a.replot {
        let (mut config, base) = match &a.config {
            Some(path) => (
                ExperimentConfig::from_toml(&read_to_string(path)?).with_context(|| format!("in {}", path.display()))?,
                path.parent().unwrap_or(Path::new(".")),
            ),
            None => (presets::desk_experiment()?, Path::new(".")),
        };
        if let Some(w) = a.workers {
            config.workers = w;
        }
        let corpora = config.corpora(base)?;
        let out = run_experiment(&config, &corpora, &a.out_dir)?;
        eprintln!("{} cells trained, {} reused from the ledger", out.ran, out.skipped);
        print_table(&summary_display(&out.summary));
    }
    let results = read_results_csv(&a.out_dir.join(RESULTS_FILE))?;
    plot::plot_results(&parse_results(&results)?, &strong_plot, &weak_plot)?;
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code
/// (0 success, 1 failure, 2 usage error).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.log_level).try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
