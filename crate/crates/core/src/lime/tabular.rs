use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    check_budget, check_class, class_probability, fit_surrogate, sample_weight, Explanation, FeatureRef, KernelMode,
    SelectedFeature,
};
use crate::blackbox::Predictor;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{rng_from_seed, Rng};
use crate::synthdata::FeatureStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TabularExplainerConfig {
    pub n_samples: usize,
    pub k: usize,
    /// Multiplier on each feature's training std for the Gaussian cloud.
    pub proximity_scale: f64,
    /// Kernel width in standardized units; `None` means 0.75·√N.
    pub kernel_width: Option<f64>,
    pub kernel: KernelMode,
    /// Class whose probability the surrogate regresses on.
    pub class_index: usize,
    pub seed: u64,
}

impl Default for TabularExplainerConfig {
    fn default() -> Self {
        TabularExplainerConfig {
            n_samples: 5000,
            k: 3,
            proximity_scale: 1.0,
            kernel_width: None,
            kernel: KernelMode::Exponential,
            class_index: 1,
            seed: 0,
        }
    }
}

impl TabularExplainerConfig {
    pub fn resolved_kernel_width(&self, n_features: usize) -> f64 {
        self.kernel_width.unwrap_or(0.75 * (n_features as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        check_budget(self.n_samples, self.k)?;
        if !(self.proximity_scale > 0.0 && self.proximity_scale.is_finite()) {
            return Err(Error::arg("proximity_scale must be positive and finite"));
        }
        if let Some(w) = self.kernel_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::arg("kernel_width must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Gaussian cloud around `x`: row 0 is `x`, row i is
/// `x + zᵢ ⊙ (proximity_scale · std)`. No clipping.
pub fn perturb_tabular(x: &[f64], stats: &FeatureStats, cfg: &TabularExplainerConfig, rng: &mut Rng) -> Result<Matrix> {
    if x.len() != stats.len() {
        return Err(Error::arg(format!(
            "point has {} features, statistics have {}",
            x.len(),
            stats.len()
        )));
    }
    if cfg.n_samples == 0 {
        return Err(Error::arg("n_samples must be at least 1"));
    }
    let p = x.len();
    let scale: Vec<f64> = stats.stds.iter().map(|s| s * cfg.proximity_scale).collect();
    let mut out = Matrix::zeros(cfg.n_samples, p);
    out.row_mut(0).copy_from_slice(x);
    for i in 1..cfg.n_samples {
        let row = out.row_mut(i);
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            row[j] = x[j] + z * scale[j];
        }
    }
    Ok(out)
}

pub fn standardize_row(row: &[f64], stats: &FeatureStats, out: &mut [f64]) {
    for j in 0..row.len() {
        out[j] = (row[j] - stats.means[j]) / stats.stds[j];
    }
}

/// Explains `model` at `x`. Makes exactly `cfg.n_samples` black-box calls.
pub fn explain_tabular<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    cfg: &TabularExplainerConfig,
    stats: &FeatureStats,
    target_id: &str,
) -> Result<Explanation> {
    cfg.validate()?;
    check_class(model, cfg.class_index)?;
    if model.n_features() != x.len() {
        return Err(Error::arg(format!(
            "point has {} features, model expects {}",
            x.len(),
            model.n_features()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("point to explain has non-finite coordinates"));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let samples = perturb_tabular(x, stats, cfg, &mut rng)?;
    let p = x.len();
    let n = cfg.n_samples;
    let width = cfg.resolved_kernel_width(p);
    let n_classes = model.n_classes();

    let mut z = Matrix::zeros(n, p);
    let mut target = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut z0 = vec![0.0; p];
    standardize_row(x, stats, &mut z0);
    for i in 0..n {
        let row = samples.row(i);
        target.push(class_probability(model.predict_proba(row), n_classes, cfg.class_index)?);
        let zr = z.row_mut(i);
        standardize_row(row, stats, zr);
        let d2: f64 = zr.iter().zip(&z0).map(|(a, b)| (a - b) * (a - b)).sum();
        weights.push(sample_weight(cfg.kernel, d2.sqrt(), width));
    }

    let fit = fit_surrogate(&z, &target, &weights, cfg.k)?;
    Ok(Explanation {
        target_id: target_id.to_string(),
        selected: fit
            .selected
            .iter()
            .zip(&fit.coefficients)
            .map(|(&j, &c)| SelectedFeature {
                feature: FeatureRef::Index(j),
                coefficient: c,
            })
            .collect(),
        k: cfg.k,
        n_samples: n,
        proximity_scale: Some(cfg.proximity_scale),
        kernel_width: width,
        kernel: cfg.kernel,
        class_index: cfg.class_index,
        seed: cfg.seed,
        intercept: fit.intercept,
        lambda_at_selection: fit.lambda,
    })
}
