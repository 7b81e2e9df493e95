//! The three-stage weak-then-strong training orchestrator.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LabelQuality};
use crate::data::format::{read_corpus, CorpusFormat};
use crate::error::{Error, Result};
use crate::metrics::{span_prf, PrfReport, SpanSource};
use crate::model::{Encoder, ModelConfig, TaggerParams, Vocab};
use crate::scalar::Scalar;
use crate::scheme::TagScheme;
use crate::table::Table;
use crate::train::config::TrainConfig;
use crate::train::derive_seed;
use crate::train::fit::{train_ensemble, train_noise_robust};
use crate::train::mapping::{map_label_scheme, LabelMapping};
use crate::train::selftrain::self_train;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    NoiseRobust,
    Ensemble,
    SelfTrain,
}

impl Phase {
    pub fn full_stack() -> BTreeSet<Phase> {
        [Phase::NoiseRobust, Phase::Ensemble, Phase::SelfTrain].into()
    }
}

#[derive(Clone, Debug)]
pub struct Stage {
    pub name: String,
    pub corpus: Corpus,
    pub phases: BTreeSet<Phase>,
    /// Overrides `epochs_per_phase`.
    pub epochs: Option<usize>,
    /// Overrides `tau`; strong stages default to 0 (no label removal).
    pub tau: Option<f64>,
}

impl Stage {
    /// A stage with the default phases for the corpus quality: the full
    /// stack for weak data, noise-robust training alone for strong data.
    pub fn new(name: impl Into<String>, corpus: Corpus) -> Self {
        let phases = if corpus.quality == LabelQuality::Strong {
            [Phase::NoiseRobust].into()
        } else {
            Phase::full_stack()
        };
        Stage {
            name: name.into(),
            corpus,
            phases,
            epochs: None,
            tau: None,
        }
    }

    fn config(&self, base: &TrainConfig, index: usize) -> TrainConfig {
        let mut c = base.with_seed(derive_seed(base.seed, &[index as u64]));
        if let Some(e) = self.epochs {
            c.epochs_per_phase = e;
        }
        c.tau = match (self.tau, self.corpus.quality) {
            (Some(t), _) => t,
            (None, LabelQuality::Strong) => 0.0,
            (None, _) => base.tau,
        };
        c
    }
}

#[derive(Clone, Debug, Default)]
pub struct StagePlan {
    pub stages: Vec<Stage>,
}

impl StagePlan {
    pub fn new(stages: Vec<Stage>) -> Self {
        StagePlan { stages }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::validation("stage plan has no stages"));
        }
        for s in &self.stages {
            if s.phases.is_empty() {
                return Err(Error::validation(format!("stage `{}` has no phases", s.name)));
            }
            match s.corpus.quality {
                LabelQuality::Strong if s.phases.iter().any(|&p| p != Phase::NoiseRobust) => {
                    return Err(Error::validation(format!(
                        "strong stage `{}` may only use the noise_robust phase",
                        s.name
                    )));
                }
                LabelQuality::Unlabeled if s.phases.iter().any(|&p| p != Phase::SelfTrain) => {
                    return Err(Error::validation(format!(
                        "unlabeled stage `{}` may only use the self_train phase",
                        s.name
                    )));
                }
                _ => {}
            }
            if s.corpus.is_empty() {
                return Err(Error::validation(format!("stage `{}` has an empty corpus", s.name)));
            }
        }
        Ok(())
    }
}

/// Evaluation of the model after one stage on one held-out corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct StageEval {
    pub stage: String,
    pub corpus: String,
    pub report: PrfReport,
}

pub struct ControsterRun<T, E> {
    pub params: TaggerParams<T, E>,
    pub evals: Vec<StageEval>,
}

/// Runs every stage in order starting from `init`, re-initializing the head
/// whenever a stage's scheme differs from the current head's.
///
/// Held-out corpora are scored on their gold layer after each stage whose
/// scheme they share.
pub fn run_controster_from<T: Scalar, E: Encoder<T>>(
    init: &TaggerParams<T, E>,
    plan: &StagePlan,
    config: &TrainConfig,
    o_bias: f64,
    eval: &[&Corpus],
) -> Result<ControsterRun<T, E>> {
    plan.validate()?;
    config.validate()?;
    let mut params = init.clone();
    let mut evals = Vec::new();
    for (i, stage) in plan.stages.iter().enumerate() {
        let cfg = stage.config(config, i);
        if *stage.corpus.scheme != *params.scheme {
            params = params.reinit_head(
                Arc::clone(&stage.corpus.scheme),
                o_bias,
                derive_seed(config.seed, &[i as u64, 0x4845_4144]),
            );
        }
        log::info!(
            "stage {} `{}`: {} sentences, phases {:?}",
            i + 1,
            stage.name,
            stage.corpus.len(),
            stage.phases
        );
        if stage.phases.contains(&Phase::Ensemble) {
            params = train_ensemble(&params, &stage.corpus, &cfg)?.student;
        } else if stage.phases.contains(&Phase::NoiseRobust) {
            params = train_noise_robust(&params, &stage.corpus, &cfg)?;
        }
        if stage.phases.contains(&Phase::SelfTrain) {
            params = self_train(&params, &stage.corpus, &cfg)?;
        }
        for corpus in eval {
            if *corpus.scheme != *params.scheme {
                continue;
            }
            let pred = params.predict_tags(corpus)?;
            evals.push(StageEval {
                stage: stage.name.clone(),
                corpus: corpus.domain.clone(),
                report: span_prf(SpanSource::weak(&pred), SpanSource::gold(corpus))?,
            });
        }
    }
    Ok(ControsterRun { params, evals })
}

/// Builds a fresh recurrent tagger over the union vocabulary of all stages
/// (bound to the first stage's scheme) and runs the plan.
pub fn run_controster<T: Scalar>(
    plan: &StagePlan,
    config: &TrainConfig,
    model: &ModelConfig,
    eval: &[&Corpus],
) -> Result<ControsterRun<T, crate::model::BiRnnEncoder<T>>> {
    plan.validate()?;
    let vocab = Arc::new(Vocab::build(plan.stages.iter().map(|s| &s.corpus), model.lowercase));
    let init = TaggerParams::<T>::new(
        vocab,
        Arc::clone(&plan.stages[0].corpus.scheme),
        model,
        derive_seed(config.seed, &[u64::MAX]),
    );
    run_controster_from(&init, plan, config, model.o_bias, eval)
}

/// Per-stage evaluation log: one row per entity type plus the weighted
/// average, for every (stage, corpus) pair.
pub fn eval_log_table(evals: &[StageEval]) -> Table {
    let mut t = Table::new(["stage", "corpus", "entity_type", "precision", "recall", "f1", "support"]);
    for e in evals {
        let fmt = |v: f64| format!("{v:.2}");
        for row in &e.report.per_type {
            t.push([
                e.stage.clone(),
                e.corpus.clone(),
                row.etype.clone(),
                fmt(row.scores.precision),
                fmt(row.scores.recall),
                fmt(row.scores.f1),
                row.support.to_string(),
            ]);
        }
        let w = &e.report.weighted;
        t.push([
            e.stage.clone(),
            e.corpus.clone(),
            "Weighted Avg".to_owned(),
            fmt(w.precision),
            fmt(w.recall),
            fmt(w.f1),
            e.report.total_support.to_string(),
        ]);
    }
    t
}

/// One `[[stage]]` entry of a training config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub name: String,
    /// Corpus path, relative to the config file.
    pub corpus: PathBuf,
    /// `json-lines`, `bio-columns` or `bio-columns:weak`; inferred from the
    /// extension when absent.
    #[serde(default)]
    pub format: Option<String>,
    #[serde(default)]
    pub quality: Option<LabelQuality>,
    #[serde(default)]
    pub phases: Option<BTreeSet<Phase>>,
    /// Types of the corpus file; defaults to the ten in-domain types.
    #[serde(default)]
    pub types: Option<Vec<String>>,
    /// Source-to-target type renames applied before training; the target is
    /// `target_types` (default: the in-domain types).
    #[serde(default)]
    pub mapping: Option<BTreeMap<String, String>>,
    #[serde(default)]
    pub target_types: Option<Vec<String>>,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub tau: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    pub corpus: PathBuf,
    #[serde(default)]
    pub format: Option<String>,
    #[serde(default)]
    pub types: Option<Vec<String>>,
}

/// Training config file: model and optimizer settings plus the stage plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(rename = "stage")]
    pub stages: Vec<StageSpec>,
    #[serde(default, rename = "eval")]
    pub evals: Vec<EvalSpec>,
}

fn scheme_of(types: &Option<Vec<String>>) -> Result<Arc<TagScheme>> {
    Ok(Arc::new(match types {
        Some(t) => TagScheme::new(t.iter().cloned())?,
        None => TagScheme::covidnews(),
    }))
}

fn load(base: &Path, path: &Path, format: &Option<String>, scheme: &Arc<TagScheme>) -> Result<Corpus> {
    let full = base.join(path);
    let format = match format {
        Some(f) => f.parse::<CorpusFormat>()?,
        None => CorpusFormat::from_path(&full),
    };
    read_corpus(&full, format, scheme)
}

impl PlanFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: PlanFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.train.validate()?;
        Ok(p)
    }

    /// Reads every referenced corpus; paths resolve against `base`.
    pub fn resolve(&self, base: &Path) -> Result<(StagePlan, Vec<Corpus>)> {
        let mut stages = Vec::new();
        for spec in &self.stages {
            let scheme = scheme_of(&spec.types)?;
            let mut corpus = load(base, &spec.corpus, &spec.format, &scheme)?;
            if let Some(q) = spec.quality {
                corpus.quality = q;
            }
            if let Some(pairs) = &spec.mapping {
                let mapping = LabelMapping::new(scheme, scheme_of(&spec.target_types)?, pairs)?;
                corpus = map_label_scheme(&corpus, &mapping)?;
            }
            let mut stage = Stage::new(spec.name.clone(), corpus);
            if let Some(p) = &spec.phases {
                stage.phases = p.clone();
            }
            stage.epochs = spec.epochs;
            stage.tau = spec.tau;
            stages.push(stage);
        }
        let evals = self
            .evals
            .iter()
            .map(|e| load(base, &e.corpus, &e.format, &scheme_of(&e.types)?))
            .collect::<Result<Vec<_>>>()?;
        let plan = StagePlan::new(stages);
        plan.validate()?;
        Ok((plan, evals))
    }
}
