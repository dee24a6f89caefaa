//! Tree-partitioned synthetic data with per-leaf linear label rules.
//!
//! A [`PartitionSpec`] is a binary tree over the unit hypercube. Each leaf
//! carries a coefficient vector `beta` (and an optional intercept) and labels
//! the points that fall into it by the half-space rule
//!
//! ```text
//! y(x) = 1  iff  (x − ½·1)ᵀβ + intercept ≥ 0
//! ```

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::rng_from_seed;

pub const DEFAULT_TRAIN_SAMPLES: usize = 10_000;
pub const DEFAULT_TEST_SAMPLES: usize = 2_500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafSpec {
    pub leaf_id: usize,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub intercept: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl LeafSpec {
    pub fn new(leaf_id: usize, beta: Vec<f64>) -> Self {
        LeafSpec {
            leaf_id,
            beta,
            intercept: 0.0,
        }
    }

    pub fn with_intercept(mut self, intercept: f64) -> Self {
        self.intercept = intercept;
        self
    }

    /// Leaf with coefficient 1 on `active` and 0 elsewhere.
    pub fn indicator(leaf_id: usize, n_features: usize, active: &[usize]) -> Self {
        let mut beta = vec![0.0; n_features];
        for &j in active {
            beta[j] = 1.0;
        }
        LeafSpec::new(leaf_id, beta)
    }

    pub fn active_set(&self) -> Vec<usize> {
        self.beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    /// Label of `x` under this leaf's rule. No cube check.
    pub fn label(&self, x: &[f64]) -> u8 {
        u8::from(centered_score(x, &self.beta) + self.intercept >= 0.0)
    }
}

fn centered_score(x: &[f64], beta: &[f64]) -> f64 {
    x.iter().zip(beta).map(|(xi, b)| (xi - 0.5) * b).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<PartitionNode>,
        right: Box<PartitionNode>,
    },
    Leaf(LeafSpec),
}

impl PartitionNode {
    pub fn split(feature: usize, threshold: f64, left: PartitionNode, right: PartitionNode) -> Self {
        PartitionNode::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// Axis-aligned region `[lo, hi)` per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && (*v < *hi || (*hi == 1.0 && *v <= 1.0)))
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn centroid(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub n_features: usize,
    pub splits: PartitionNode,
}

impl PartitionSpec {
    /// Builds and validates a spec.
    pub fn new(n_features: usize, splits: PartitionNode) -> Result<Self> {
        let spec = PartitionSpec { n_features, splits };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PartitionSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks split features, thresholds, beta lengths and that leaf ids are
    /// `0..L` in left-to-right order.
    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::arg("partition needs at least one feature"));
        }
        let mut next_leaf = 0;
        self.validate_node(&self.splits, &mut next_leaf)
    }

    fn validate_node(&self, node: &PartitionNode, next_leaf: &mut usize) -> Result<()> {
        match node {
            PartitionNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature >= self.n_features {
                    return Err(Error::arg(format!(
                        "split feature {feature} out of range for {} features",
                        self.n_features
                    )));
                }
                if !(*threshold > 0.0 && *threshold < 1.0) {
                    return Err(Error::arg(format!(
                        "split threshold {threshold} must lie in (0, 1)"
                    )));
                }
                self.validate_node(left, next_leaf)?;
                self.validate_node(right, next_leaf)
            }
            PartitionNode::Leaf(leaf) => {
                if leaf.leaf_id != *next_leaf {
                    return Err(Error::arg(format!(
                        "leaf ids must be 0.. in left-to-right order; found {} where {} was expected",
                        leaf.leaf_id, next_leaf
                    )));
                }
                if leaf.beta.len() != self.n_features {
                    return Err(Error::arg(format!(
                        "leaf {} beta has length {}, expected {}",
                        leaf.leaf_id,
                        leaf.beta.len(),
                        self.n_features
                    )));
                }
                if leaf.beta.iter().any(|b| !b.is_finite()) || !leaf.intercept.is_finite() {
                    return Err(Error::arg(format!("leaf {} has non-finite coefficients", leaf.leaf_id)));
                }
                *next_leaf += 1;
                Ok(())
            }
        }
    }

    /// Leaves in left-to-right order (index = leaf id).
    pub fn leaves(&self) -> Vec<&LeafSpec> {
        fn walk<'a>(node: &'a PartitionNode, out: &mut Vec<&'a LeafSpec>) {
            match node {
                PartitionNode::Split { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
                PartitionNode::Leaf(l) => out.push(l),
            }
        }
        let mut out = Vec::new();
        walk(&self.splits, &mut out);
        out
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().len()
    }

    /// Features used by any split, ascending.
    pub fn split_features(&self) -> Vec<usize> {
        fn walk(node: &PartitionNode, out: &mut Vec<usize>) {
            if let PartitionNode::Split {
                feature, left, right, ..
            } = node
            {
                out.push(*feature);
                walk(left, out);
                walk(right, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.splits, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Tree descent for any real point: `x[f] < t` goes left, otherwise
    /// right. Points outside the cube follow the same rule.
    pub fn descend(&self, x: &[f64]) -> &LeafSpec {
        let mut node = &self.splits;
        loop {
            match node {
                PartitionNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] < *threshold { left } else { right };
                }
                PartitionNode::Leaf(l) => return l,
            }
        }
    }

    /// Leaf id of a point of the unit cube.
    pub fn leaf_of(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::arg(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.n_features
            )));
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::arg("point lies outside the unit hypercube"));
        }
        Ok(self.descend(x).leaf_id)
    }

    /// Label of any real point under the rule of the leaf it descends to.
    pub fn label_of(&self, x: &[f64]) -> u8 {
        self.descend(x).label(x)
    }

    /// Bounding box of every leaf, in leaf-id order.
    pub fn regions(&self) -> Vec<Region> {
        fn walk(node: &PartitionNode, region: Region, out: &mut Vec<Region>) {
            match node {
                PartitionNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let mut l = region.clone();
                    l.upper[*feature] = l.upper[*feature].min(*threshold);
                    let mut r = region;
                    r.lower[*feature] = r.lower[*feature].max(*threshold);
                    walk(left, l, out);
                    walk(right, r, out);
                }
                PartitionNode::Leaf(_) => out.push(region),
            }
        }
        let mut out = Vec::new();
        let root = Region {
            lower: vec![0.0; self.n_features],
            upper: vec![1.0; self.n_features],
        };
        walk(&self.splits, root, &mut out);
        out
    }

    /// The split constraints on the path to each leaf, as
    /// `(feature, threshold, goes_right)`.
    pub fn leaf_paths(&self) -> Vec<Vec<(usize, f64, bool)>> {
        fn walk(node: &PartitionNode, path: &mut Vec<(usize, f64, bool)>, out: &mut Vec<Vec<(usize, f64, bool)>>) {
            match node {
                PartitionNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    path.push((*feature, *threshold, false));
                    walk(left, path, out);
                    path.pop();
                    path.push((*feature, *threshold, true));
                    walk(right, path, out);
                    path.pop();
                }
                PartitionNode::Leaf(_) => out.push(path.clone()),
            }
        }
        let mut out = Vec::new();
        walk(&self.splits, &mut Vec::new(), &mut out);
        out
    }
}

/// Canonical eight-feature partition: six leaves from splits on features
/// 0, 1 and 2 at 0.5.
///
/// ```text
///                 x0 < .5
///          ┌─────────┴──────────┐
///       x1 < .5              x1 < .5
///      ┌───┴───┐          ┌─────┴──────┐
///   leaf0    leaf1     x2 < .5      x2 < .5
///                      ┌──┴──┐      ┌──┴──┐
///                   leaf2  leaf3  leaf4  leaf5
/// ```
///
/// Leaves 0–2 use split features in their rules; leaves 3–5 only use the
/// features 3–7, with leaf 5 active on {5, 6, 7}. Intercepts on leaves 1, 3
/// and 4 give neighbouring regions clearly different class rates.
pub fn default_partition_8() -> PartitionSpec {
    let n = 8;
    let leaf = |id: usize, active: &[usize], intercept: f64| {
        PartitionNode::Leaf(LeafSpec::indicator(id, n, active).with_intercept(intercept))
    };
    let splits = PartitionNode::split(
        0,
        0.5,
        PartitionNode::split(1, 0.5, leaf(0, &[0, 1, 3], 0.0), leaf(1, &[0, 2, 4], -0.6)),
        PartitionNode::split(
            1,
            0.5,
            PartitionNode::split(2, 0.5, leaf(2, &[1, 2, 5], 0.0), leaf(3, &[3, 4, 5], 1.0)),
            PartitionNode::split(2, 0.5, leaf(4, &[3, 6, 7], -1.0), leaf(5, &[5, 6, 7], 0.0)),
        ),
    );
    PartitionSpec { n_features: n, splits }
}

/// Four-feature partition: the quadrants of (x0, x1), two active features
/// per leaf.
pub fn default_partition_4() -> PartitionSpec {
    let n = 4;
    let leaf = |id: usize, active: &[usize]| PartitionNode::Leaf(LeafSpec::indicator(id, n, active));
    let splits = PartitionNode::split(
        0,
        0.5,
        PartitionNode::split(1, 0.5, leaf(0, &[0, 2]), leaf(1, &[1, 3])),
        PartitionNode::split(1, 0.5, leaf(2, &[2, 3]), leaf(3, &[0, 3])),
    );
    PartitionSpec { n_features: n, splits }
}

/// Label of `x` under `beta` with no intercept: 1 iff
/// `(x − ½)ᵀβ ≥ 0`.
pub fn assign_label(x: &[f64], beta: &[f64]) -> Result<u8> {
    if x.len() != beta.len() {
        return Err(Error::arg(format!(
            "point has {} coordinates but beta has {}",
            x.len(),
            beta.len()
        )));
    }
    Ok(u8::from(centered_score(x, beta) >= 0.0))
}

/// Distance inside a leaf from its bounding split thresholds used by
/// [`AuditPointRule::NearSplit`].
pub const DEFAULT_NEAR_SPLIT_MARGIN: f64 = 0.1;

/// How the audited point of each leaf is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum AuditPointRule {
    /// Every split feature on the leaf's path sits `margin` inside the leaf
    /// from its nearest bounding threshold; all other features are 0.5.
    NearSplit {
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// Centre of the leaf's bounding box.
    Centroid {},
    /// Training point closest (Euclidean) to the leaf's centroid.
    NearestTraining {},
    /// Caller-supplied points, one per leaf.
    Explicit { points: Vec<Vec<f64>> },
}

fn default_margin() -> f64 {
    DEFAULT_NEAR_SPLIT_MARGIN
}

impl Default for AuditPointRule {
    fn default() -> Self {
        AuditPointRule::NearSplit {
            margin: DEFAULT_NEAR_SPLIT_MARGIN,
        }
    }
}

impl PartitionSpec {
    /// Point `margin` inside each leaf from the thresholds that bound it.
    pub fn near_split_points(&self, margin: f64) -> Result<Vec<Vec<f64>>> {
        if !(margin > 0.0 && margin < 0.5) {
            return Err(Error::arg("near-split margin must lie in (0, 0.5)"));
        }
        let regions = self.regions();
        Ok(self
            .leaf_paths()
            .into_iter()
            .zip(&regions)
            .map(|(path, region)| {
                let mut x = vec![0.5; self.n_features];
                let mut side: Vec<Option<bool>> = vec![None; self.n_features];
                for (f, _, right) in path {
                    side[f] = Some(right);
                }
                for f in 0..self.n_features {
                    let (lo, hi) = (region.lower[f], region.upper[f]);
                    x[f] = match side[f] {
                        None => continue,
                        Some(_) if hi - lo <= 2.0 * margin => 0.5 * (lo + hi),
                        Some(true) => lo + margin,
                        Some(false) => hi - margin,
                    };
                }
                x
            })
            .collect())
    }

    /// One audit point per leaf, in leaf-id order.
    pub fn audit_points(&self, rule: &AuditPointRule, training: Option<&Matrix>) -> Result<Vec<Vec<f64>>> {
        let points = match rule {
            AuditPointRule::NearSplit { margin } => self.near_split_points(*margin)?,
            AuditPointRule::Centroid {} => self.regions().iter().map(Region::centroid).collect(),
            AuditPointRule::NearestTraining {} => {
                let x = training.ok_or_else(|| Error::arg("nearest_training needs training data"))?;
                self.regions()
                    .iter()
                    .map(|r| nearest_row(x, &r.centroid()))
                    .collect::<Result<_>>()?
            }
            AuditPointRule::Explicit { points } => points.clone(),
        };
        if points.len() != self.n_leaves() {
            return Err(Error::arg(format!(
                "{} audit points for {} leaves",
                points.len(),
                self.n_leaves()
            )));
        }
        for (leaf, p) in points.iter().enumerate() {
            let got = self.leaf_of(p)?;
            if got != leaf {
                return Err(Error::arg(format!("audit point for leaf {leaf} lies in leaf {got}")));
            }
        }
        Ok(points)
    }
}

/// Row of `x` closest to `target`; ties keep the lower row index.
pub fn nearest_row(x: &Matrix, target: &[f64]) -> Result<Vec<f64>> {
    if x.rows() == 0 || x.cols() != target.len() {
        return Err(Error::arg("nearest_row needs a nonempty matrix matching the target width"));
    }
    let mut best = (f64::INFINITY, 0);
    for (i, row) in x.row_iter().enumerate() {
        let d: f64 = row.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(x.row(best.1).to_vec())
}

/// Per-feature location and scale of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Features whose observed std was zero; their std is reported as 1.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constant_features: Vec<usize>,
}

impl FeatureStats {
    /// Population (ddof = 0) statistics of the columns of `x`.
    pub fn from_matrix(x: &Matrix) -> Self {
        let n = x.rows().max(1) as f64;
        let p = x.cols();
        let mut means = vec![0.0; p];
        for row in x.row_iter() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; p];
        for row in x.row_iter() {
            for j in 0..p {
                let d = row[j] - means[j];
                vars[j] += d * d;
            }
        }
        let mut constant_features = Vec::new();
        let stds = vars
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    constant_features.push(j);
                    1.0
                }
            })
            .collect();
        if !constant_features.is_empty() {
            log::warn!("constant features {constant_features:?}: std set to 1");
        }
        FeatureStats {
            means,
            stds,
            constant_features,
        }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// Feature matrix with labels and training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub x: Matrix,
    pub y: Vec<usize>,
    pub n_classes: usize,
    pub feature_names: Vec<String>,
    pub stats: FeatureStats,
    pub leaf_ids: Option<Vec<usize>>,
}

impl TabularDataset {
    pub fn new(x: Matrix, y: Vec<usize>, feature_names: Vec<String>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::arg(format!(
                "{} rows but {} labels",
                x.rows(),
                y.len()
            )));
        }
        if feature_names.len() != x.cols() {
            return Err(Error::arg(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.cols()
            )));
        }
        let n_classes = y.iter().max().map_or(0, |m| m + 1).max(2);
        let stats = FeatureStats::from_matrix(&x);
        Ok(TabularDataset {
            x,
            y,
            n_classes,
            feature_names,
            stats,
            leaf_ids: None,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }
}

pub fn default_feature_names(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("x{j}")).collect()
}

/// Uniform sample on `[0,1]^N` labelled by the partition.
pub fn generate_dataset(spec: &PartitionSpec, n_samples: usize, seed: u64) -> Result<TabularDataset> {
    if n_samples == 0 {
        return Err(Error::arg("n_samples must be at least 1"));
    }
    spec.validate()?;
    let p = spec.n_features;
    let mut rng = rng_from_seed(seed);
    let mut x = Matrix::zeros(n_samples, p);
    let mut y = Vec::with_capacity(n_samples);
    let mut leaf_ids = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let row = x.row_mut(i);
        for v in row.iter_mut() {
            *v = rng.random::<f64>();
        }
        let leaf = spec.descend(row);
        leaf_ids.push(leaf.leaf_id);
        y.push(leaf.label(row) as usize);
    }
    let mut data = TabularDataset::new(x, y, default_feature_names(p))?;
    data.leaf_ids = Some(leaf_ids);
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_8_shape() {
        let spec = default_partition_8();
        spec.validate().unwrap();
        let leaves = spec.leaves();
        assert_eq!(leaves.len(), 6);
        for l in &leaves {
            assert_eq!(l.active_set().len(), 3);
        }
        assert_eq!(leaves[5].active_set(), vec![5, 6, 7]);
        assert_eq!(spec.split_features(), vec![0, 1, 2]);
        for l in &leaves[..3] {
            assert!(l.active_set().iter().any(|j| *j < 3));
        }
        for l in &leaves[3..5] {
            assert!(l.active_set().iter().all(|j| *j >= 3));
        }
    }

    #[test]
    fn default_4_quadrants() {
        let spec = default_partition_4();
        assert_eq!(spec.n_leaves(), 4);
        for l in spec.leaves() {
            assert_eq!(l.active_set().len(), 2);
        }
        assert_eq!(spec.leaf_of(&[0.9, 0.9, 0.3, 0.3]).unwrap(), 3);
        assert_eq!(spec.leaf_of(&[0.25, 0.75, 0.0, 1.0]).unwrap(), 1);
        assert_eq!(spec.leaf_of(&[0.1, 0.1, 0.5, 0.5]).unwrap(), 0);
    }

    #[test]
    fn boundary_goes_right() {
        let spec = default_partition_4();
        assert_eq!(spec.leaf_of(&[0.5, 0.2, 0.2, 0.2]).unwrap(), 2);
        assert_eq!(spec.leaf_of(&[0.5, 0.5, 0.2, 0.2]).unwrap(), 3);
    }

    #[test]
    fn leaf_of_rejects_bad_points() {
        let spec = default_partition_4();
        assert!(spec.leaf_of(&[1.2, 0.5, 0.5, 0.5]).is_err());
        assert!(spec.leaf_of(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn label_rule() {
        assert_eq!(assign_label(&[0.5; 8], &[1.0; 8]).unwrap(), 1);
        let e0 = [1.0, 0.0, 0.0];
        assert_eq!(assign_label(&[0.9, 0.1, 0.1], &e0).unwrap(), 1);
        assert_eq!(assign_label(&[0.1, 0.9, 0.9], &e0).unwrap(), 0);
        assert!(assign_label(&[0.1, 0.2], &e0).is_err());
    }

    #[test]
    fn inactive_features_never_flip_4_feature_labels() {
        let spec = default_partition_4();
        let mut rng = rng_from_seed(3);
        for _ in 0..2000 {
            let x: Vec<f64> = (0..4).map(|_| rng.random()).collect();
            let leaf = spec.descend(&x);
            let active = leaf.active_set();
            let mut z = x.clone();
            for j in 0..4 {
                // split features decide the leaf; only perturb free inactive ones
                if !active.contains(&j) && j >= 2 {
                    z[j] = rng.random();
                }
            }
            assert_eq!(spec.descend(&z).leaf_id, leaf.leaf_id);
            assert_eq!(spec.label_of(&z), spec.label_of(&x));
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let spec = default_partition_8();
        let text = spec.to_json().unwrap();
        assert_eq!(PartitionSpec::from_json(&text).unwrap(), spec);
        let bad = r#"{"n_features": 2, "splits": {"feature": 3, "threshold": 0.5,
            "left": {"leaf_id": 0, "beta": [1, 0]}, "right": {"leaf_id": 1, "beta": [0, 1]}}}"#;
        assert!(PartitionSpec::from_json(bad).is_err());
        let bad_order = r#"{"n_features": 2, "splits": {"feature": 0, "threshold": 0.5,
            "left": {"leaf_id": 1, "beta": [1, 0]}, "right": {"leaf_id": 0, "beta": [0, 1]}}}"#;
        assert!(PartitionSpec::from_json(bad_order).is_err());
        let leaf_only = r#"{"n_features": 2, "splits": {"leaf_id": 0, "beta": [1, 1]}}"#;
        assert_eq!(PartitionSpec::from_json(leaf_only).unwrap().n_leaves(), 1);
    }

    #[test]
    fn dataset_is_deterministic_and_consistent() {
        let spec = default_partition_8();
        let a = generate_dataset(&spec, 500, 11).unwrap();
        let b = generate_dataset(&spec, 500, 11).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let leaves = a.leaf_ids.as_ref().unwrap();
        for i in 0..a.n_samples() {
            let row = a.x.row(i);
            assert_eq!(spec.leaf_of(row).unwrap(), leaves[i]);
            assert_eq!(a.y[i], spec.label_of(row) as usize);
        }
        assert!(generate_dataset(&spec, 0, 1).is_err());
    }

    #[test]
    fn near_split_points_sit_inside_their_leaves() {
        let spec = default_partition_8();
        let pts = spec.near_split_points(0.1).unwrap();
        assert_eq!(pts[5][..3], [0.6, 0.6, 0.6]);
        assert_eq!(pts[3][..3], [0.6, 0.4, 0.6]);
        assert_eq!(pts[0][..3], [0.4, 0.4, 0.5]);
        assert!(pts.iter().all(|p| p[3..].iter().all(|v| *v == 0.5)));
        for rule in [AuditPointRule::default(), AuditPointRule::Centroid {}] {
            assert_eq!(spec.audit_points(&rule, None).unwrap().len(), 6);
        }
        let data = generate_dataset(&spec, 3000, 2).unwrap();
        let nearest = spec.audit_points(&AuditPointRule::NearestTraining {}, Some(&data.x)).unwrap();
        assert_eq!(nearest.len(), 6);
        assert!(spec.audit_points(&AuditPointRule::NearestTraining {}, None).is_err());
        let wrong = AuditPointRule::Explicit {
            points: vec![vec![0.9; 8]; 6],
        };
        assert!(spec.audit_points(&wrong, None).is_err());
    }

    #[test]
    fn audit_rule_json() {
        let r: AuditPointRule = serde_json::from_str(r#"{"rule": "near_split"}"#).unwrap();
        assert_eq!(r, AuditPointRule::default());
        let r: AuditPointRule = serde_json::from_str(r#"{"rule": "nearest_training"}"#).unwrap();
        assert_eq!(r, AuditPointRule::NearestTraining {});
        assert!(serde_json::from_str::<AuditPointRule>(r#"{"rule": "centroid", "x": 1}"#).is_err());
    }

    #[test]
    fn constant_feature_gets_unit_std() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 4.0]]).unwrap();
        let stats = FeatureStats::from_matrix(&x);
        assert_eq!(stats.stds[0], 1.0);
        assert_eq!(stats.constant_features, vec![0]);
        assert!((stats.stds[1] - 1.0).abs() < 1e-12);
    }
}
