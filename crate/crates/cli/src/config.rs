//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use limeaudit_core::blackbox::{BoostingParams, ForestParams};
use limeaudit_core::ingest::CompasOptions;
use limeaudit_core::lime::{KernelMode, TabularExplainerConfig, TextExplainerConfig, TEXT_KERNEL_WIDTH};
use limeaudit_core::synthdata::{
    default_partition_4, default_partition_8, AuditPointRule, PartitionSpec, DEFAULT_TEST_SAMPLES,
    DEFAULT_TRAIN_SAMPLES,
};
use limeaudit_core::audit::DEFAULT_CREDIBILITY_GAP;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Synthetic(SyntheticConfig),
    Text(TextConfig),
    Compas(CompasConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub dataset: SyntheticData,
    #[serde(default)]
    pub model: TabularModel,
    #[serde(default)]
    pub explainer: TabularLime,
    #[serde(default = "synthetic_audit")]
    pub audit: SyntheticAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticData {
    pub partition: PartitionChoice,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl Default for SyntheticData {
    fn default() -> Self {
        SyntheticData {
            partition: PartitionChoice::Default8 {},
            n_train: DEFAULT_TRAIN_SAMPLES,
            n_test: DEFAULT_TEST_SAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", deny_unknown_fields)]
pub enum PartitionChoice {
    #[serde(rename = "default_8")]
    Default8 {},
    #[serde(rename = "default_4")]
    Default4 {},
    #[serde(rename = "custom")]
    Custom { spec: PartitionSpec },
}

impl PartitionChoice {
    pub fn resolve(&self) -> PartitionSpec {
        match self {
            PartitionChoice::Default8 {} => default_partition_8(),
            PartitionChoice::Default4 {} => default_partition_4(),
            PartitionChoice::Custom { spec } => spec.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TabularModel {
    GroundTruth {},
    Cart(CartSettings),
    RandomForest(ForestParams),
    GradientBoosting(BoostingParams),
}

impl Default for TabularModel {
    fn default() -> Self {
        TabularModel::RandomForest(ForestParams::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CartSettings {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for CartSettings {
    fn default() -> Self {
        CartSettings {
            max_depth: 10,
            min_leaf: 2,
        }
    }
}

/// Perturbation and kernel settings shared by the tabular experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TabularLime {
    pub n_samples: usize,
    pub proximity_scale: f64,
    pub kernel_width: Option<f64>,
    pub kernel: KernelMode,
    pub class_index: Option<usize>,
}

impl Default for TabularLime {
    fn default() -> Self {
        let d = TabularExplainerConfig::default();
        TabularLime {
            n_samples: d.n_samples,
            proximity_scale: d.proximity_scale,
            kernel_width: None,
            kernel: d.kernel,
            class_index: None,
        }
    }
}

impl TabularLime {
    pub fn to_core(&self, k: usize, default_class: usize) -> TabularExplainerConfig {
        TabularExplainerConfig {
            n_samples: self.n_samples,
            k,
            proximity_scale: self.proximity_scale,
            kernel_width: self.kernel_width,
            kernel: self.kernel,
            class_index: self.class_index.unwrap_or(default_class),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticAudit {
    #[serde(default = "hundred")]
    pub trials: usize,
    #[serde(default = "three")]
    pub k: usize,
    #[serde(default)]
    pub targets: AuditPointRule,
    #[serde(default)]
    pub sweep: Option<SweepSettings>,
    #[serde(default = "default_gap")]
    pub credibility_gap: f64,
}

fn synthetic_audit() -> SyntheticAudit {
    SyntheticAudit {
        trials: 100,
        k: 3,
        targets: AuditPointRule::default(),
        sweep: None,
        credibility_gap: DEFAULT_CREDIBILITY_GAP,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub scales: Vec<f64>,
    /// Leaves to sweep; all leaves when absent.
    #[serde(default)]
    pub leaves: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub dataset: TextData,
    #[serde(default)]
    pub model: NaiveBayesSettings,
    #[serde(default)]
    pub explainer: TextLime,
    #[serde(default = "text_audit")]
    pub audit: TextAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextData {
    /// Archive root holding the by-date train and test directories. When
    /// absent, a bundled miniature corpus is generated.
    pub root: Option<PathBuf>,
    pub categories: Option<[String; 2]>,
    pub bundled_seed: u64,
}

impl Default for TextData {
    fn default() -> Self {
        TextData {
            root: None,
            categories: None,
            bundled_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NaiveBayesSettings {
    pub alpha: f64,
}

impl Default for NaiveBayesSettings {
    fn default() -> Self {
        NaiveBayesSettings { alpha: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextLime {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub kernel: KernelMode,
    pub class_index: usize,
}

impl Default for TextLime {
    fn default() -> Self {
        TextLime {
            n_samples: 1000,
            kernel_width: TEXT_KERNEL_WIDTH,
            kernel: KernelMode::Exponential,
            class_index: 1,
        }
    }
}

impl TextLime {
    pub fn to_core(&self, k: usize) -> TextExplainerConfig {
        TextExplainerConfig {
            n_samples: self.n_samples,
            k,
            kernel_width: self.kernel_width,
            kernel: self.kernel,
            class_index: self.class_index,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextAudit {
    #[serde(default = "hundred")]
    pub trials: usize,
    #[serde(default = "six")]
    pub k: usize,
    /// Indices into the test split.
    #[serde(default = "first_two")]
    pub documents: Vec<usize>,
    /// Human-marked informative words, one list per audited document.
    #[serde(default)]
    pub informative: Option<Vec<Vec<String>>>,
    #[serde(default = "default_gap")]
    pub credibility_gap: f64,
}

fn text_audit() -> TextAudit {
    TextAudit {
        trials: 100,
        k: 6,
        documents: first_two(),
        informative: None,
        credibility_gap: DEFAULT_CREDIBILITY_GAP,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompasConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub dataset: CompasData,
    #[serde(default)]
    pub model: ForestParams,
    #[serde(default)]
    pub explainer: TabularLime,
    #[serde(default = "compas_audit")]
    pub audit: CompasAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompasData {
    /// ProPublica CSV. When absent, a bundled 500-row table is generated.
    pub path: Option<PathBuf>,
    pub bundled_seed: u64,
    pub columns: CompasOptions,
}

impl Default for CompasData {
    fn default() -> Self {
        CompasData {
            path: None,
            bundled_seed: 0,
            columns: CompasOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompasAudit {
    #[serde(default = "fifty")]
    pub trials: usize,
    #[serde(default = "five")]
    pub k: usize,
    /// Row indices into the cleaned table.
    #[serde(default = "first_two")]
    pub rows: Vec<usize>,
    #[serde(default)]
    pub informative: Option<Vec<Vec<String>>>,
    #[serde(default = "default_gap")]
    pub credibility_gap: f64,
}

fn compas_audit() -> CompasAudit {
    CompasAudit {
        trials: 50,
        k: 5,
        rows: first_two(),
        informative: None,
        credibility_gap: DEFAULT_CREDIBILITY_GAP,
    }
}

/// Class explained for COMPAS unless overridden: "High".
pub const COMPAS_DEFAULT_CLASS: usize = 2;

fn hundred() -> usize {
    100
}
fn fifty() -> usize {
    50
}
fn six() -> usize {
    6
}
fn five() -> usize {
    5
}
fn three() -> usize {
    3
}
fn first_two() -> Vec<usize> {
    vec![0, 1]
}
fn default_gap() -> f64 {
    DEFAULT_CREDIBILITY_GAP
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Synthetic(_) => "synthetic",
            ExperimentConfig::Text(_) => "text",
            ExperimentConfig::Compas(_) => "compas",
        }
    }

    pub fn output_dir(&self) -> &Path {
        match self {
            ExperimentConfig::Synthetic(c) => &c.output_dir,
            ExperimentConfig::Text(c) => &c.output_dir,
            ExperimentConfig::Compas(c) => &c.output_dir,
        }
    }

    pub fn set_output_dir(&mut self, dir: PathBuf) {
        match self {
            ExperimentConfig::Synthetic(c) => c.output_dir = dir,
            ExperimentConfig::Text(c) => c.output_dir = dir,
            ExperimentConfig::Compas(c) => c.output_dir = dir,
        }
    }

    pub fn master_seed(&self) -> u64 {
        match self {
            ExperimentConfig::Synthetic(c) => c.master_seed,
            ExperimentConfig::Text(c) => c.master_seed,
            ExperimentConfig::Compas(c) => c.master_seed,
        }
    }

    /// Checks everything that can be checked without touching data.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        match self {
            ExperimentConfig::Synthetic(c) => {
                let spec = c.dataset.partition.resolve();
                spec.validate()?;
                if c.dataset.n_train == 0 {
                    return bad("dataset.n_train must be at least 1".into());
                }
                check_trials(c.audit.trials)?;
                let n = spec.n_features;
                check_k(c.audit.k, n)?;
                c.explainer.to_core(c.audit.k, 1).validate()?;
                check_class(c.explainer.class_index.unwrap_or(1), 2)?;
                if let AuditPointRule::Explicit { points } = &c.audit.targets {
                    if points.len() != spec.n_leaves() {
                        return bad(format!(
                            "explicit targets list {} points for {} leaves",
                            points.len(),
                            spec.n_leaves()
                        ));
                    }
                }
                if let Some(sweep) = &c.audit.sweep {
                    if sweep.scales.is_empty() {
                        return bad("audit.sweep.scales must not be empty".into());
                    }
                    if let Some(s) = sweep.scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                        return bad(format!("sweep scale {s} must be positive and finite"));
                    }
                    if let Some(leaves) = &sweep.leaves {
                        if let Some(l) = leaves.iter().find(|l| **l >= spec.n_leaves()) {
                            return bad(format!("sweep leaf {l} does not exist"));
                        }
                    }
                }
                if matches!(c.model, TabularModel::GradientBoosting(_)) && !matches!(c.explainer.class_index, None | Some(0) | Some(1)) {
                    return bad("gradient boosting is binary".into());
                }
                check_gap(c.audit.credibility_gap)
            }
            ExperimentConfig::Text(c) => {
                check_trials(c.audit.trials)?;
                if c.audit.k == 0 {
                    return bad("audit.k must be at least 1".into());
                }
                c.explainer.to_core(c.audit.k).validate()?;
                check_class(c.explainer.class_index, 2)?;
                if !(c.model.alpha > 0.0) {
                    return bad("model.alpha must be positive".into());
                }
                if c.audit.documents.is_empty() {
                    return bad("audit.documents must not be empty".into());
                }
                if let Some(inf) = &c.audit.informative {
                    if inf.len() != c.audit.documents.len() {
                        return bad("audit.informative needs one list per audited document".into());
                    }
                }
                check_gap(c.audit.credibility_gap)
            }
            ExperimentConfig::Compas(c) => {
                check_trials(c.audit.trials)?;
                if c.audit.k == 0 {
                    return bad("audit.k must be at least 1".into());
                }
                c.explainer.to_core(c.audit.k, COMPAS_DEFAULT_CLASS).validate()?;
                check_class(c.explainer.class_index.unwrap_or(COMPAS_DEFAULT_CLASS), 3)?;
                if c.audit.rows.is_empty() {
                    return bad("audit.rows must not be empty".into());
                }
                if let Some(inf) = &c.audit.informative {
                    if inf.len() != c.audit.rows.len() {
                        return bad("audit.informative needs one list per audited row".into());
                    }
                }
                check_gap(c.audit.credibility_gap)
            }
        }
    }

    /// Data paths the run will read; each must exist.
    pub fn data_paths(&self) -> Vec<(&'static str, &Path)> {
        match self {
            ExperimentConfig::Synthetic(_) => vec![],
            ExperimentConfig::Text(c) => c.dataset.root.iter().map(|p| ("newsgroups archive", p.as_path())).collect(),
            ExperimentConfig::Compas(c) => c.dataset.path.iter().map(|p| ("COMPAS CSV", p.as_path())).collect(),
        }
    }

    pub fn check_data_paths(&self) -> CliResult<()> {
        for (what, path) in self.data_paths() {
            if !path.exists() {
                return Err(CliError::missing_path(what, path));
            }
        }
        Ok(())
    }
}

fn check_trials(t: usize) -> CliResult<()> {
    if t == 0 {
        return Err(CliError::Config("audit.trials must be at least 1".into()));
    }
    Ok(())
}

fn check_k(k: usize, n: usize) -> CliResult<()> {
    if k == 0 || k > n {
        return Err(CliError::Config(format!("audit.k must lie in 1..={n}, got {k}")));
    }
    Ok(())
}

fn check_class(class: usize, n_classes: usize) -> CliResult<()> {
    if class >= n_classes {
        return Err(CliError::Config(format!(
            "class_index {class} out of range for {n_classes} classes"
        )));
    }
    Ok(())
}

fn check_gap(gap: f64) -> CliResult<()> {
    if !(gap >= 0.0 && gap.is_finite()) {
        return Err(CliError::Config("audit.credibility_gap must be nonnegative".into()));
    }
    Ok(())
}
