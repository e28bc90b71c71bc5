use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use relpose::io::{from_toml, read_text};
use relpose::synth::SceneSpec;
use relpose::{ConstraintForm, InputMode, MetricConfig, RefStrategy, TargetMode};

/// A whole experiment in one TOML document. Unknown keys are rejected at
/// every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneSpec,
    #[serde(default = "default_scene_count")]
    pub scene_count: u64,
    #[serde(default)]
    pub encode: EncodeSettings,
    #[serde(default)]
    pub solve: SolveSettings,
    #[serde(default)]
    pub metrics: MetricSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

fn default_scene_count() -> u64 {
    100
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scene: SceneSpec::default(),
            scene_count: default_scene_count(),
            encode: EncodeSettings::default(),
            solve: SolveSettings::default(),
            metrics: MetricSettings::default(),
            output: OutputSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        from_toml(&text, &path.display().to_string())
            .with_context(|| format!("invalid config {}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncodeSettings {
    pub strategy: RefStrategy,
    pub input_mode: InputMode,
    pub target_mode: TargetMode,
    pub form: ConstraintForm,
    /// Also emit pixel offsets from the projected reference point.
    pub uv_offsets: bool,
    pub depth_epsilon: f64,
}

impl Default for EncodeSettings {
    fn default() -> Self {
        Self {
            strategy: RefStrategy::MeanVisible,
            input_mode: InputMode::DepthScaled,
            target_mode: TargetMode::RelativeOffset,
            form: ConstraintForm::Corrected,
            uv_offsets: false,
            depth_epsilon: relpose::encoding::DEFAULT_DEPTH_EPSILON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSettings {
    /// Standard deviation of Gaussian noise added to the target offsets.
    pub sigma: f64,
    pub seed: u64,
    pub refine_iterations: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            sigma: 0.0,
            seed: 0,
            refine_iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricSettings {
    pub auc_max_threshold: f64,
    pub threshold_fraction: f64,
}

impl Default for MetricSettings {
    fn default() -> Self {
        Self {
            auc_max_threshold: 0.1,
            threshold_fraction: 0.1,
        }
    }
}

impl MetricSettings {
    pub fn to_config(self) -> Result<MetricConfig<f64>> {
        Ok(MetricConfig::new(
            self.auc_max_threshold,
            self.threshold_fraction,
        )?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSettings {
    pub dataset_dir: Option<PathBuf>,
}
