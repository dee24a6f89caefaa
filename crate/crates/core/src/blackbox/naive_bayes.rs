use serde::{Deserialize, Serialize};

use super::{check_dim, Predictor};
use crate::error::{Error, Result};
use crate::linalg::SparseVector;

/// Multinomial naive Bayes over nonnegative term weights (counts or tf-idf).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNbModel {
    pub n_terms: usize,
    pub alpha: f64,
    pub class_log_prior: Vec<f64>,
    /// `feature_log_prob[c][t]` = ln P(term t | class c).
    pub feature_log_prob: Vec<Vec<f64>>,
}

/// `docs[i]` is the term-weight row of document `i` with `dim = n_terms`.
pub fn fit_multinomial_nb(docs: &[SparseVector], labels: &[usize], alpha: f64) -> Result<MultinomialNbModel> {
    if docs.is_empty() {
        return Err(Error::arg("no documents"));
    }
    if docs.len() != labels.len() {
        return Err(Error::arg(format!(
            "{} documents but {} labels",
            docs.len(),
            labels.len()
        )));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::arg("alpha must be positive"));
    }
    let n_terms = docs[0].dim;
    if n_terms == 0 {
        return Err(Error::arg("empty vocabulary"));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1).max(2);
    let mut class_count = vec![0.0; n_classes];
    let mut term_weight = vec![vec![0.0; n_terms]; n_classes];
    for (doc, &c) in docs.iter().zip(labels) {
        if doc.dim != n_terms {
            return Err(Error::arg("documents disagree on vocabulary size"));
        }
        class_count[c] += 1.0;
        for (t, v) in doc.iter() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::arg("term weights must be finite and nonnegative"));
            }
            term_weight[c][t] += v;
        }
    }
    let n_docs = docs.len() as f64;
    // classes absent from training keep a vanishing (but finite) prior
    let class_log_prior = class_count
        .iter()
        .map(|&k: &f64| if k > 0.0 { (k / n_docs).ln() } else { f64::MIN_POSITIVE.ln() })
        .collect();
    let feature_log_prob = term_weight
        .iter()
        .map(|row| {
            let denom = (row.iter().sum::<f64>() + alpha * n_terms as f64).ln();
            row.iter().map(|w| (w + alpha).ln() - denom).collect()
        })
        .collect();
    Ok(MultinomialNbModel {
        n_terms,
        alpha,
        class_log_prior,
        feature_log_prob,
    })
}

fn softmax(mut scores: Vec<f64>) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in &mut scores {
        *s = (*s - max).exp();
        total += *s;
    }
    scores.iter_mut().for_each(|s| *s /= total);
    scores
}

impl MultinomialNbModel {
    fn joint_log_likelihood(&self, terms: impl Iterator<Item = (usize, f64)> + Clone) -> Vec<f64> {
        self.class_log_prior
            .iter()
            .zip(&self.feature_log_prob)
            .map(|(prior, logp)| prior + terms.clone().map(|(t, v)| v * logp[t]).sum::<f64>())
            .collect()
    }
}

impl Predictor for MultinomialNbModel {
    fn n_features(&self) -> usize {
        self.n_terms
    }

    fn n_classes(&self) -> usize {
        self.class_log_prior.len()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(x.len(), self.n_terms)?;
        let terms = x.iter().copied().enumerate().filter(|(_, v)| *v != 0.0);
        Ok(softmax(self.joint_log_likelihood(terms)))
    }

    fn predict_proba_sparse(&self, x: &SparseVector) -> Result<Vec<f64>> {
        check_dim(x.dim, self.n_terms)?;
        Ok(softmax(self.joint_log_likelihood(x.iter())))
    }
}
