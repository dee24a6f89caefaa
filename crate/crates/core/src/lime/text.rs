use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    check_budget, check_class, class_probability, fit_surrogate, sample_weight, Explanation, FeatureRef, KernelMode,
    SelectedFeature,
};
use crate::blackbox::Predictor;
use crate::error::{Error, Result};
use crate::ingest::TfidfVocabulary;
use crate::linalg::Matrix;
use crate::rng::{rng_from_seed, Rng};

/// Kernel width on cosine distance between word masks.
pub const TEXT_KERNEL_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextExplainerConfig {
    pub n_samples: usize,
    pub k: usize,
    pub kernel_width: f64,
    pub kernel: KernelMode,
    pub class_index: usize,
    pub seed: u64,
}

impl Default for TextExplainerConfig {
    fn default() -> Self {
        TextExplainerConfig {
            n_samples: 1000,
            k: 6,
            kernel_width: TEXT_KERNEL_WIDTH,
            kernel: KernelMode::Exponential,
            class_index: 1,
            seed: 0,
        }
    }
}

impl TextExplainerConfig {
    pub fn validate(&self) -> Result<()> {
        check_budget(self.n_samples, self.k)?;
        if !(self.kernel_width > 0.0 && self.kernel_width.is_finite()) {
            return Err(Error::arg("kernel_width must be positive and finite"));
        }
        Ok(())
    }
}

/// Presence masks over `n_tokens` words. Row 0 keeps every word; each other
/// row removes `u ~ Uniform{1, …, m−1}` distinct words chosen uniformly.
pub fn perturb_text(n_tokens: usize, n_samples: usize, rng: &mut Rng) -> Result<Matrix> {
    if n_tokens == 0 {
        return Err(Error::arg("document has no feature words"));
    }
    if n_tokens < 2 {
        return Err(Error::arg("text perturbation needs at least two distinct feature words"));
    }
    if n_samples == 0 {
        return Err(Error::arg("n_samples must be at least 1"));
    }
    let mut masks = Matrix::from_vec(n_samples, n_tokens, vec![1.0; n_samples * n_tokens])?;
    for i in 1..n_samples {
        let u = rng.random_range(1..n_tokens);
        let row = masks.row_mut(i);
        for j in sample(rng, n_tokens, u) {
            row[j] = 0.0;
        }
    }
    Ok(masks)
}

/// Distinct in-vocabulary words of a document in first-appearance order,
/// with their raw counts.
pub fn feature_words<S: AsRef<str>>(tokens: &[S], vocab: &TfidfVocabulary) -> Vec<(String, usize, f64)> {
    let mut order: Vec<(String, usize, f64)> = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for t in tokens {
        let t = t.as_ref();
        let Some(idx) = vocab.index_of(t) else { continue };
        match seen.get(t) {
            Some(&pos) => order[pos].2 += 1.0,
            None => {
                seen.insert(t, order.len());
                order.push((t.to_string(), idx, 1.0));
            }
        }
    }
    order
}

/// Explains `model` on a tokenized document. Features are the document's
/// distinct in-vocabulary words; each perturbation drops words and recomputes
/// tf-idf on what remains. Makes exactly `cfg.n_samples` black-box calls.
pub fn explain_text<P: Predictor + ?Sized, S: AsRef<str>>(
    model: &P,
    tokens: &[S],
    vocab: &TfidfVocabulary,
    cfg: &TextExplainerConfig,
    target_id: &str,
) -> Result<Explanation> {
    cfg.validate()?;
    check_class(model, cfg.class_index)?;
    if model.n_features() != vocab.len() {
        return Err(Error::arg(format!(
            "model expects {} terms, vocabulary has {}",
            model.n_features(),
            vocab.len()
        )));
    }
    let words = feature_words(tokens, vocab);
    let m = words.len();
    let mut rng = rng_from_seed(cfg.seed);
    let masks = perturb_text(m, cfg.n_samples, &mut rng)?;
    let n_classes = model.n_classes();
    let mut target = Vec::with_capacity(cfg.n_samples);
    let mut weights = Vec::with_capacity(cfg.n_samples);
    for mask in masks.row_iter() {
        let kept: Vec<(usize, f64)> = words
            .iter()
            .zip(mask)
            .filter(|(_, keep)| **keep > 0.0)
            .map(|((_, idx, count), _)| (*idx, *count))
            .collect();
        let row = vocab.weigh(kept);
        target.push(class_probability(model.predict_proba_sparse(&row), n_classes, cfg.class_index)?);
        let present: f64 = mask.iter().sum();
        // cosine distance to the all-ones mask
        let distance = 1.0 - (present / m as f64).sqrt();
        weights.push(sample_weight(cfg.kernel, distance, cfg.kernel_width));
    }
    let fit = fit_surrogate(&masks, &target, &weights, cfg.k)?;
    Ok(Explanation {
        target_id: target_id.to_string(),
        selected: fit
            .selected
            .iter()
            .zip(&fit.coefficients)
            .map(|(&j, &c)| SelectedFeature {
                feature: FeatureRef::Token(words[j].0.clone()),
                coefficient: c,
            })
            .collect(),
        k: cfg.k,
        n_samples: cfg.n_samples,
        proximity_scale: None,
        kernel_width: cfg.kernel_width,
        kernel: cfg.kernel,
        class_index: cfg.class_index,
        seed: cfg.seed,
        intercept: fit.intercept,
        lambda_at_selection: fit.lambda,
    })
}
