//! The models being explained.
//!
//! Every model implements [`Predictor`]; [`BlackBoxModel`] wraps the concrete
//! kinds for serialization as a versioned JSON document.

mod ensemble;
mod naive_bayes;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use ensemble::{
    fit_cart, fit_gradient_boosting, fit_gradient_boosting_traced, fit_random_forest, BoostingParams, CartModel,
    ForestParams, GradientBoostingModel, RandomForestModel,
};
pub use naive_bayes::{fit_multinomial_nb, MultinomialNbModel};
pub use tree::{DecisionTree, TreeNode};

use crate::error::{Error, Result};
use crate::linalg::SparseVector;
use crate::synthdata::PartitionSpec;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Class-probability prediction. Implementations must be pure.
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;
    fn n_classes(&self) -> usize;
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict_proba_sparse(&self, x: &SparseVector) -> Result<Vec<f64>> {
        check_sparse(x, self.n_features())?;
        self.predict_proba(&x.to_dense())
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).predict_proba(x)
    }

    fn predict_proba_sparse(&self, x: &SparseVector) -> Result<Vec<f64>> {
        (**self).predict_proba_sparse(x)
    }
}

pub(crate) fn check_dim(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::arg(format!(
            "input has {got} features, model expects {expected}"
        )));
    }
    Ok(())
}

pub(crate) fn check_sparse(x: &SparseVector, expected: usize) -> Result<()> {
    check_dim(x.dim, expected)?;
    if x.indices.last().is_some_and(|&i| i >= expected) {
        return Err(Error::arg("sparse index out of range"));
    }
    Ok(())
}

/// The exact classifier defined by a partition: one-hot on the label of the
/// leaf rule the point falls under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthModel {
    pub spec: PartitionSpec,
}

pub fn ground_truth_classifier(spec: &PartitionSpec) -> Result<GroundTruthModel> {
    spec.validate()?;
    Ok(GroundTruthModel { spec: spec.clone() })
}

impl Predictor for GroundTruthModel {
    fn n_features(&self) -> usize {
        self.spec.n_features
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(x.len(), self.spec.n_features)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("non-finite input"));
        }
        Ok(if self.spec.label_of(x) == 1 {
            vec![0.0, 1.0]
        } else {
            vec![1.0, 0.0]
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlackBoxModel {
    GroundTruth(GroundTruthModel),
    Cart(CartModel),
    RandomForest(RandomForestModel),
    GradientBoosting(GradientBoostingModel),
    MultinomialNb(MultinomialNbModel),
}

impl BlackBoxModel {
    pub fn kind(&self) -> &'static str {
        match self {
            BlackBoxModel::GroundTruth(_) => "ground_truth",
            BlackBoxModel::Cart(_) => "cart",
            BlackBoxModel::RandomForest(_) => "random_forest",
            BlackBoxModel::GradientBoosting(_) => "gradient_boosting",
            BlackBoxModel::MultinomialNb(_) => "multinomial_nb",
        }
    }

    fn inner(&self) -> &dyn Predictor {
        match self {
            BlackBoxModel::GroundTruth(m) => m,
            BlackBoxModel::Cart(m) => m,
            BlackBoxModel::RandomForest(m) => m,
            BlackBoxModel::GradientBoosting(m) => m,
            BlackBoxModel::MultinomialNb(m) => m,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocumentRef {
            format_version: MODEL_FORMAT_VERSION,
            model: self,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::arg(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        Ok(doc.model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::input(path, e.to_string()))?;
        Self::from_json(&text).map_err(|e| Error::input(path, e.to_string()))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format_version: u32,
    model: BlackBoxModel,
}

#[derive(Serialize)]
struct ModelDocumentRef<'a> {
    format_version: u32,
    model: &'a BlackBoxModel,
}

impl Predictor for BlackBoxModel {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner().predict_proba(x)
    }

    fn predict_proba_sparse(&self, x: &SparseVector) -> Result<Vec<f64>> {
        self.inner().predict_proba_sparse(x)
    }
}

macro_rules! impl_from {
    ($($t:ident => $v:ident),*) => {
        $(impl From<$t> for BlackBoxModel {
            fn from(m: $t) -> Self {
                BlackBoxModel::$v(m)
            }
        })*
    };
}

impl_from!(
    GroundTruthModel => GroundTruth,
    CartModel => Cart,
    RandomForestModel => RandomForest,
    GradientBoostingModel => GradientBoosting,
    MultinomialNbModel => MultinomialNb
);

/// Fraction of rows whose arg-max class matches the label.
pub fn accuracy<P: Predictor + ?Sized>(model: &P, x: &crate::linalg::Matrix, y: &[usize]) -> Result<f64> {
    if x.rows() != y.len() || y.is_empty() {
        return Err(Error::arg("accuracy needs one label per row"));
    }
    let mut hits = 0usize;
    for (row, &label) in x.row_iter().zip(y) {
        if argmax(&model.predict_proba(row)?) == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / y.len() as f64)
}

/// Index of the largest entry; ties go to the lower index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
