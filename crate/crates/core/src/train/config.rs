use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::loss::check_q;

/// Hyperparameters shared by every training phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// GCE exponent in (0, 1].
    pub q: f64,
    /// Noisy-label removal threshold in [0, 1].
    pub tau: f64,
    /// Ensemble size.
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    pub epochs_per_phase: usize,
    /// Leading epochs of each noise-robust phase that keep every label
    /// before removal by `tau` starts.
    pub warmup_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub self_train_rounds: usize,
    /// Self-training confidence threshold in [0, 1].
    pub gamma: f64,
    /// Select tokens with confidence strictly above `gamma` instead of at least.
    pub strict_gamma: bool,
    /// O-token dropout probability for augmented views.
    pub drop_rate: f64,
    /// Probability of substituting each entity in an augmented view.
    pub replace_prob: f64,
    /// Gradient global-norm ceiling; 0 disables clipping.
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            q: 0.7,
            tau: 0.7,
            k: 5,
            epochs_per_phase: 3,
            warmup_epochs: 1,
            learning_rate: 0.005,
            batch_size: 16,
            self_train_rounds: 1,
            gamma: 0.9,
            strict_gamma: false,
            drop_rate: 0.1,
            replace_prob: 0.5,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        check_q(self.q).map_err(|_| Error::Config(format!("q must lie in (0, 1], got {}", self.q)))?;
        unit("tau", self.tau)?;
        unit("gamma", self.gamma)?;
        unit("drop_rate", self.drop_rate)?;
        unit("replace_prob", self.replace_prob)?;
        if self.k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.clip_norm.is_nan() || self.clip_norm < 0.0 {
            return Err(Error::Config("clip_norm must be non-negative".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub(crate) fn with_seed(&self, seed: u64) -> Self {
        TrainConfig { seed, ..self.clone() }
    }
}
