//! Noise-robust training, ensembling, self-training and the staged pipeline.

pub mod config;
pub mod fit;
pub mod loss;
pub mod mapping;
pub mod pipeline;
pub mod selftrain;

pub use config::TrainConfig;
pub use fit::{
    average_predictions, fit_soft_targets, mean_kl, train_ensemble, train_noise_robust, training_labels,
    training_source, Ensemble,
};
pub use loss::{compute_label_weights, gce_logit_grad, gce_loss, kl_divergence, SampleWeights};
pub use mapping::{map_label_scheme, LabelMapping};
pub use pipeline::{
    eval_log_table, run_controster, run_controster_from, ControsterRun, Phase, PlanFile, Stage, StageEval,
    StagePlan,
};
pub use selftrain::{augment_sentence, self_train, sharpen, Augmented, Gazetteers};

/// Mixes `parts` into `base` (splitmix64 finalizer per part) to derive
/// independent seeds for sub-tasks.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(p.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
