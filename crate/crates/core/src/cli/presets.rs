//! Frozen synthetic generator specs and noise profiles.

use crate::cli::experiment::ExperimentConfig;
use crate::error::Result;
use crate::weaklabel::{NoiseProfile, SynthSpec};

pub const INDOMAIN_SPEC: &str = include_str!("../../configs/synthetic_indomain.toml");
pub const OOD_SPEC: &str = include_str!("../../configs/synthetic_ood.toml");
pub const NOISE_PROFILE: &str = include_str!("../../configs/noise_profile.toml");
pub const OOD_NOISE_PROFILE: &str = include_str!("../../configs/noise_ood.toml");
pub const DESK_EXPERIMENT: &str = include_str!("../../configs/desk_experiment.toml");

/// Ten-type in-domain generator.
pub fn indomain_spec() -> Result<SynthSpec> {
    SynthSpec::from_toml(INDOMAIN_SPEC)
}

/// Four-type general-news generator.
pub fn ood_spec() -> Result<SynthSpec> {
    SynthSpec::from_toml(OOD_SPEC)
}

pub fn noise_profile() -> Result<NoiseProfile> {
    NoiseProfile::from_toml(NOISE_PROFILE)
}

pub fn ood_noise_profile() -> Result<NoiseProfile> {
    NoiseProfile::from_toml(OOD_NOISE_PROFILE)
}

/// Backbone comparison at desk scale on the synthetic corpora.
pub fn desk_experiment() -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml(DESK_EXPERIMENT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::TagScheme;

    #[test]
    fn presets_parse_and_validate() {
        assert_eq!(indomain_spec().unwrap().scheme().unwrap(), TagScheme::covidnews());
        assert_eq!(ood_spec().unwrap().scheme().unwrap().type_count(), 4);
        noise_profile().unwrap().confusion_matrix(&TagScheme::covidnews()).unwrap();
        ood_noise_profile()
            .unwrap()
            .confusion_matrix(&ood_spec().unwrap().scheme().unwrap())
            .unwrap();
        assert_eq!(desk_experiment().unwrap().grid.cells().len(), 15);
    }
}
