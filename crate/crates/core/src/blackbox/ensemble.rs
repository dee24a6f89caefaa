use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, presort, DecisionTree, GrowParams, Target};
use super::{check_dim, Predictor};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::synthdata::TabularDataset;

fn check_training_data(data: &TabularDataset, min_leaf: usize) -> Result<()> {
    if data.n_samples() == 0 || data.n_features() == 0 {
        return Err(Error::arg("training data is empty"));
    }
    if min_leaf == 0 {
        return Err(Error::arg("min_leaf must be at least 1"));
    }
    if data.n_samples() < 2 * min_leaf {
        return Err(Error::arg(format!(
            "{} samples cannot support min_leaf {}",
            data.n_samples(),
            min_leaf
        )));
    }
    if !data.x.is_finite() {
        return Err(Error::arg("training data contains non-finite values"));
    }
    if data.y.iter().any(|&c| c >= data.n_classes) {
        return Err(Error::arg("label out of range for n_classes"));
    }
    Ok(())
}

/// Single CART classification tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartModel {
    pub n_features: usize,
    pub n_classes: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub tree: DecisionTree,
}

pub fn fit_cart(data: &TabularDataset, max_depth: usize, min_leaf: usize) -> Result<CartModel> {
    check_training_data(data, min_leaf)?;
    let target = Target::Classes {
        labels: &data.y,
        n_classes: data.n_classes,
    };
    let weights = vec![1.0; data.n_samples()];
    let tree = grow_tree(
        &data.x,
        &target,
        &weights,
        &presort(&data.x),
        GrowParams {
            max_depth,
            min_leaf: min_leaf as f64,
            max_features: None,
        },
        None,
    );
    Ok(CartModel {
        n_features: data.n_features(),
        n_classes: data.n_classes,
        max_depth,
        min_leaf,
        tree,
    })
}

impl Predictor for CartModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(x.len(), self.n_features)?;
        Ok(self.tree.leaf_value(x).to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means ⌈√N⌉.
    pub max_features: Option<usize>,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Resample the training set with replacement for each tree.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: None,
            max_depth: 10,
            min_leaf: 2,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_max_features(&self, n_features: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub n_features: usize,
    pub n_classes: usize,
    pub params: ForestParams,
    pub trees: Vec<DecisionTree>,
}

pub fn fit_random_forest(data: &TabularDataset, params: &ForestParams) -> Result<RandomForestModel> {
    check_training_data(data, params.min_leaf)?;
    if params.n_trees == 0 {
        return Err(Error::arg("n_trees must be at least 1"));
    }
    let p = data.n_features();
    let max_features = params.resolved_max_features(p);
    if max_features == 0 || max_features > p {
        return Err(Error::arg(format!(
            "max_features {max_features} must lie in 1..={p}"
        )));
    }
    let n = data.n_samples();
    let sorted = presort(&data.x);
    let target = Target::Classes {
        labels: &data.y,
        n_classes: data.n_classes,
    };
    let grow = GrowParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf as f64,
        max_features: Some(max_features),
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(params.seed, t as u64);
            let mut weights = vec![0.0; n];
            if params.bootstrap {
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
            } else {
                weights.iter_mut().for_each(|w| *w = 1.0);
            }
            grow_tree(&data.x, &target, &weights, &sorted, grow, Some(&mut rng))
        })
        .collect();
    let mut params = *params;
    params.max_features = Some(max_features);
    Ok(RandomForestModel {
        n_features: p,
        n_classes: data.n_classes,
        params,
        trees,
    })
}

impl Predictor for RandomForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(x.len(), self.n_features)?;
        let mut out = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (o, v) in out.iter_mut().zip(tree.leaf_value(x)) {
                *o += v;
            }
        }
        let k = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= k);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostingParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// Fraction of rows drawn (without replacement) for each stage.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            n_trees: 300,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

/// Binary logistic gradient boosting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingModel {
    pub n_features: usize,
    pub params: BoostingParams,
    /// Log-odds of the training base rate.
    pub base_score: f64,
    pub trees: Vec<DecisionTree>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn log_loss(y: &[usize], score: &[f64]) -> f64 {
    // ln(1 + e^{-s}) for y = 1 and ln(1 + e^{s}) for y = 0, computed stably
    let softplus = |z: f64| if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    let total: f64 = y
        .iter()
        .zip(score)
        .map(|(&c, &s)| if c == 1 { softplus(-s) } else { softplus(s) })
        .sum();
    total / y.len() as f64
}

pub fn fit_gradient_boosting(data: &TabularDataset, params: &BoostingParams) -> Result<GradientBoostingModel> {
    fit_gradient_boosting_traced(data, params).map(|(m, _)| m)
}

/// Also returns the mean training log-loss after the prior and after every
/// stage (`n_trees + 1` values).
pub fn fit_gradient_boosting_traced(
    data: &TabularDataset,
    params: &BoostingParams,
) -> Result<(GradientBoostingModel, Vec<f64>)> {
    check_training_data(data, params.min_leaf)?;
    if data.n_classes != 2 {
        return Err(Error::arg("gradient boosting needs binary labels"));
    }
    if !(params.learning_rate > 0.0) || !params.learning_rate.is_finite() {
        return Err(Error::arg("learning_rate must be positive"));
    }
    if !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(Error::arg("subsample must lie in (0, 1]"));
    }
    let n = data.n_samples();
    let positives = data.y.iter().filter(|&&c| c == 1).count() as f64;
    let rate = (positives / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let base_score = (rate / (1.0 - rate)).ln();
    let sorted = presort(&data.x);
    let grow = GrowParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf as f64,
        max_features: None,
    };
    let mut score = vec![base_score; n];
    let mut residual = vec![0.0; n];
    let mut hessian = vec![0.0; n];
    let mut trace = vec![log_loss(&data.y, &score)];
    let mut trees = Vec::with_capacity(params.n_trees);
    let n_sub = ((params.subsample * n as f64).round() as usize).clamp(1, n);
    for stage in 0..params.n_trees {
        for i in 0..n {
            let p = sigmoid(score[i]);
            residual[i] = data.y[i] as f64 - p;
            hessian[i] = p * (1.0 - p);
        }
        let weights = if n_sub < n {
            let mut rng = substream(params.seed, stage as u64);
            let mut w = vec![0.0; n];
            for i in rand::seq::index::sample(&mut rng, n, n_sub) {
                w[i] = 1.0;
            }
            w
        } else {
            vec![1.0; n]
        };
        let target = Target::Newton {
            residual: &residual,
            hessian: &hessian,
        };
        let tree = grow_tree(&data.x, &target, &weights, &sorted, grow, None);
        for (i, s) in score.iter_mut().enumerate() {
            *s += params.learning_rate * tree.leaf_value(data.x.row(i))[0];
        }
        trace.push(log_loss(&data.y, &score));
        trees.push(tree);
    }
    Ok((
        GradientBoostingModel {
            n_features: data.n_features(),
            params: *params,
            base_score,
            trees,
        },
        trace,
    ))
}

impl GradientBoostingModel {
    pub fn decision_function(&self, x: &[f64]) -> f64 {
        self.base_score
            + self.params.learning_rate * self.trees.iter().map(|t| t.leaf_value(x)[0]).sum::<f64>()
    }
}

impl Predictor for GradientBoostingModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(x.len(), self.n_features)?;
        let z = self.decision_function(x);
        let p1 = sigmoid(z);
        let p0 = sigmoid(-z);
        let s = p0 + p1;
        Ok(vec![p0 / s, p1 / s])
    }
}
