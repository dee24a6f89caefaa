//! Local surrogate explanations: perturb around a point, weight samples by
//! proximity, fit K-LASSO to the black box's class probability.

mod tabular;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use tabular::{explain_tabular, perturb_tabular, standardize_row, TabularExplainerConfig};
pub use text::{explain_text, feature_words, perturb_text, TextExplainerConfig, TEXT_KERNEL_WIDTH};

use crate::blackbox::Predictor;
use crate::error::{Error, Result};
use crate::lasso::k_lasso_select;
use crate::linalg::Matrix;

/// How perturbed samples are weighted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// exp(−d² / width²)
    #[default]
    Exponential,
    /// Every sample gets weight 1.
    Constant,
}

/// exp(−distance² / width²).
pub fn kernel_weight(distance: f64, width: f64) -> f64 {
    (-(distance * distance) / (width * width)).exp()
}

pub(crate) fn sample_weight(mode: KernelMode, distance: f64, width: f64) -> f64 {
    match mode {
        KernelMode::Exponential => kernel_weight(distance, width),
        KernelMode::Constant => 1.0,
    }
}

/// A feature as reported in explanations: a column index for tabular data,
/// a word for text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureRef {
    Index(usize),
    Token(String),
}

impl fmt::Display for FeatureRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureRef::Index(i) => write!(f, "{i}"),
            FeatureRef::Token(t) => f.write_str(t),
        }
    }
}

impl From<usize> for FeatureRef {
    fn from(i: usize) -> Self {
        FeatureRef::Index(i)
    }
}

impl From<&str> for FeatureRef {
    fn from(t: &str) -> Self {
        FeatureRef::Token(t.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeature {
    pub feature: FeatureRef,
    pub coefficient: f64,
}

/// One explanation trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub target_id: String,
    /// Selected features in path-entry order with refit coefficients.
    pub selected: Vec<SelectedFeature>,
    pub k: usize,
    pub n_samples: usize,
    /// Perturbation scale; absent for text.
    pub proximity_scale: Option<f64>,
    pub kernel_width: f64,
    pub kernel: KernelMode,
    pub class_index: usize,
    pub seed: u64,
    pub intercept: f64,
    pub lambda_at_selection: f64,
}

impl Explanation {
    pub fn features(&self) -> Vec<FeatureRef> {
        self.selected.iter().map(|s| s.feature.clone()).collect()
    }
}

/// Probability of `class_index` for one perturbed sample, with output checks.
pub(crate) fn class_probability(probs: Result<Vec<f64>>, n_classes: usize, class_index: usize) -> Result<f64> {
    let probs = probs?;
    if probs.len() != n_classes {
        return Err(Error::Model(format!(
            "black box returned {} probabilities, expected {n_classes}",
            probs.len()
        )));
    }
    let p = probs[class_index];
    if !p.is_finite() {
        return Err(Error::Model(format!("black box returned non-finite probability {p}")));
    }
    Ok(p)
}

pub(crate) fn check_class<P: Predictor + ?Sized>(model: &P, class_index: usize) -> Result<()> {
    if class_index >= model.n_classes() {
        return Err(Error::arg(format!(
            "class_index {class_index} out of range for a {}-class model",
            model.n_classes()
        )));
    }
    Ok(())
}

pub(crate) fn check_budget(n_samples: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::arg("K must be at least 1"));
    }
    if n_samples < k + 2 {
        return Err(Error::arg(format!("n_samples {n_samples} must be at least K + 2 = {}", k + 2)));
    }
    Ok(())
}

/// Runs K-LASSO on the interpretable features and packages the result.
pub(crate) struct SurrogateFit {
    pub selected: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

pub(crate) fn fit_surrogate(features: &Matrix, target: &[f64], weights: &[f64], k: usize) -> Result<SurrogateFit> {
    let sel = k_lasso_select(features, target, weights, k)?;
    Ok(SurrogateFit {
        selected: sel.selected,
        coefficients: sel.refit_coefficients,
        intercept: sel.refit_intercept,
        lambda: sel.lambda_at_selection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_closed_forms() {
        assert_eq!(kernel_weight(0.0, 2.0), 1.0);
        assert!((kernel_weight(1.5, 1.5) - (-1.0f64).exp()).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 1..100 {
            let w = kernel_weight(i as f64 * 0.05, 0.75);
            assert!(w < prev && w > 0.0);
            prev = w;
        }
        assert_eq!(sample_weight(KernelMode::Constant, 10.0, 0.1), 1.0);
    }

    #[test]
    fn feature_ref_json_is_untagged() {
        assert_eq!(serde_json::to_string(&FeatureRef::Index(3)).unwrap(), "3");
        assert_eq!(serde_json::to_string(&FeatureRef::from("crypto")).unwrap(), "\"crypto\"");
        let back: FeatureRef = serde_json::from_str("\"7\"").unwrap();
        assert_eq!(back, FeatureRef::Token("7".into()));
    }
}
