//! Repeated-trial auditing of explanations: selection probabilities over
//! independent trials, proximity sweeps, and cross-point credibility.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::Predictor;
use crate::error::{Error, Result};
use crate::ingest::TfidfVocabulary;
use crate::lime::{
    explain_tabular, explain_text, feature_words, Explanation, FeatureRef, TabularExplainerConfig,
    TextExplainerConfig,
};
use crate::rng::substream_seed;
use crate::synthdata::FeatureStats;

pub const DEFAULT_CREDIBILITY_GAP: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub feature: FeatureRef,
    pub name: String,
}

/// Something that can produce one explanation per trial seed.
pub trait TrialExplainer: Sync {
    fn target_id(&self) -> &str;
    fn k(&self) -> usize;
    /// Every feature that could be selected, in report order.
    fn feature_universe(&self) -> Vec<FeatureInfo>;
    fn explain_trial(&self, seed: u64) -> Result<Explanation>;
    fn config_snapshot(&self) -> serde_json::Value;
    fn proximity_scale(&self) -> Option<f64> {
        None
    }
    fn target_point(&self) -> Option<Vec<f64>> {
        None
    }
}

/// A tabular point to explain.
pub struct TabularTarget<'a, P: ?Sized> {
    pub model: &'a P,
    pub point: Vec<f64>,
    pub stats: &'a FeatureStats,
    pub feature_names: Vec<String>,
    pub config: TabularExplainerConfig,
    pub target_id: String,
}

impl<P: Predictor + ?Sized> TabularTarget<'_, P> {
    pub fn with_scale(&self, scale: f64) -> Self {
        TabularTarget {
            model: self.model,
            point: self.point.clone(),
            stats: self.stats,
            feature_names: self.feature_names.clone(),
            config: TabularExplainerConfig {
                proximity_scale: scale,
                ..self.config.clone()
            },
            target_id: self.target_id.clone(),
        }
    }
}

impl<P: Predictor + ?Sized> TrialExplainer for TabularTarget<'_, P> {
    fn target_id(&self) -> &str {
        &self.target_id
    }

    fn k(&self) -> usize {
        self.config.k
    }

    fn feature_universe(&self) -> Vec<FeatureInfo> {
        (0..self.point.len())
            .map(|j| FeatureInfo {
                feature: FeatureRef::Index(j),
                name: self.feature_names.get(j).cloned().unwrap_or_else(|| format!("x{j}")),
            })
            .collect()
    }

    fn explain_trial(&self, seed: u64) -> Result<Explanation> {
        let cfg = TabularExplainerConfig {
            seed,
            ..self.config.clone()
        };
        explain_tabular(self.model, &self.point, &cfg, self.stats, &self.target_id)
    }

    fn config_snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(&self.config).unwrap_or_default();
        if let Some(obj) = v.as_object_mut() {
            obj.remove("seed");
            obj.insert(
                "kernel_width".into(),
                serde_json::json!(self.config.resolved_kernel_width(self.point.len())),
            );
        }
        v
    }

    fn proximity_scale(&self) -> Option<f64> {
        Some(self.config.proximity_scale)
    }

    fn target_point(&self) -> Option<Vec<f64>> {
        Some(self.point.clone())
    }
}

/// A tokenized document to explain.
pub struct TextTarget<'a, P: ?Sized> {
    pub model: &'a P,
    pub tokens: Vec<String>,
    pub vocab: &'a TfidfVocabulary,
    pub config: TextExplainerConfig,
    pub target_id: String,
}

impl<P: Predictor + ?Sized> TrialExplainer for TextTarget<'_, P> {
    fn target_id(&self) -> &str {
        &self.target_id
    }

    fn k(&self) -> usize {
        self.config.k
    }

    fn feature_universe(&self) -> Vec<FeatureInfo> {
        feature_words(&self.tokens, self.vocab)
            .into_iter()
            .map(|(w, _, _)| FeatureInfo {
                feature: FeatureRef::Token(w.clone()),
                name: w,
            })
            .collect()
    }

    fn explain_trial(&self, seed: u64) -> Result<Explanation> {
        let cfg = TextExplainerConfig {
            seed,
            ..self.config.clone()
        };
        explain_text(self.model, &self.tokens, self.vocab, &cfg, &self.target_id)
    }

    fn config_snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(&self.config).unwrap_or_default();
        if let Some(obj) = v.as_object_mut() {
            obj.remove("seed");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub feature: FeatureRef,
    pub name: String,
    /// Number of trials that selected the feature.
    pub count: usize,
    /// `count / trials`.
    pub selection_probability: f64,
}

/// Summary scalars that complement the per-feature probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplementaryMetrics {
    /// Mean Jaccard similarity over all pairs of trial selections; absent
    /// when fewer than two trials ran.
    pub mean_pairwise_jaccard: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub target_id: String,
    pub trials: usize,
    pub k: usize,
    /// Seed from which every trial seed was derived.
    pub master_seed: u64,
    pub proximity_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_point: Option<Vec<f64>>,
    /// One entry per feature in the universe, in universe order.
    pub features: Vec<FeatureSelection>,
    /// Each trial's selection in path-entry order.
    pub selections: Vec<Vec<FeatureRef>>,
    pub supplementary: SupplementaryMetrics,
    /// Caller-declared informative features, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informative: Option<Vec<FeatureRef>>,
    pub config: serde_json::Value,
}

impl AuditReport {
    pub fn probability_of(&self, feature: &FeatureRef) -> f64 {
        self.features
            .iter()
            .find(|f| &f.feature == feature)
            .map_or(0.0, |f| f.selection_probability)
    }

    pub fn index_probability(&self, j: usize) -> f64 {
        self.probability_of(&FeatureRef::Index(j))
    }

    /// Summed selection probability over `set`.
    pub fn mass_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&j| self.index_probability(j)).sum()
    }

    pub fn total_probability(&self) -> f64 {
        self.features.iter().map(|f| f.selection_probability).sum()
    }

    /// The `n` most frequently selected features; ties keep universe order.
    pub fn top_features(&self, n: usize) -> Vec<FeatureRef> {
        let mut order: Vec<&FeatureSelection> = self.features.iter().collect();
        order.sort_by(|a, b| b.count.cmp(&a.count));
        order.into_iter().take(n).map(|f| f.feature.clone()).collect()
    }

    /// Checks that every probability equals its count over T, that
    /// probability·T is integral, and that the total is at most K.
    pub fn check_counting_identities(&self) -> Result<()> {
        let t = self.trials as f64;
        let mut total_count = 0;
        for f in &self.features {
            let scaled = f.selection_probability * t;
            if f.selection_probability != f.count as f64 / t || (scaled - scaled.round()).abs() > 1e-9 {
                return Err(Error::State(format!(
                    "feature {} has probability {} inconsistent with count {} over {} trials",
                    f.feature, f.selection_probability, f.count, self.trials
                )));
            }
            total_count += f.count;
        }
        let selected: usize = self.selections.iter().map(Vec::len).sum();
        if total_count != selected {
            return Err(Error::State("feature counts disagree with per-trial selections".into()));
        }
        if total_count > self.k * self.trials {
            return Err(Error::State(format!(
                "total selection mass {} exceeds K = {}",
                total_count as f64 / t,
                self.k
            )));
        }
        Ok(())
    }
}

fn jaccard(a: &BTreeSet<&FeatureRef>, b: &BTreeSet<&FeatureRef>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn mean_pairwise_jaccard(selections: &[Vec<FeatureRef>]) -> Option<f64> {
    let t = selections.len();
    if t < 2 {
        return None;
    }
    let sets: Vec<BTreeSet<&FeatureRef>> = selections.iter().map(|s| s.iter().collect()).collect();
    let mut total = 0.0;
    for i in 0..t {
        for j in (i + 1)..t {
            total += jaccard(&sets[i], &sets[j]);
        }
    }
    Some(total / (t * (t - 1) / 2) as f64)
}

/// Mean Jaccard similarity over all pairs of trial selections.
pub fn stability_summary(report: &AuditReport) -> Result<f64> {
    mean_pairwise_jaccard(&report.selections)
        .ok_or_else(|| Error::arg("stability needs at least two trials"))
}

/// Seed of trial `t` under `master_seed`.
pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    substream_seed(master_seed, trial as u64)
}

/// Folds explanations, given in trial-index order, into a report.
pub fn aggregate<E: TrialExplainer + ?Sized>(
    explainer: &E,
    master_seed: u64,
    explanations: &[Explanation],
) -> Result<AuditReport> {
    let trials = explanations.len();
    if trials == 0 {
        return Err(Error::arg("at least one trial is required"));
    }
    let universe = explainer.feature_universe();
    let mut position: HashMap<FeatureRef, usize> = HashMap::new();
    let mut features: Vec<FeatureSelection> = universe
        .into_iter()
        .enumerate()
        .map(|(i, info)| {
            position.insert(info.feature.clone(), i);
            FeatureSelection {
                feature: info.feature,
                name: info.name,
                count: 0,
                selection_probability: 0.0,
            }
        })
        .collect();
    let mut selections = Vec::with_capacity(trials);
    for e in explanations {
        let sel = e.features();
        for f in &sel {
            let idx = *position.entry(f.clone()).or_insert_with(|| {
                features.push(FeatureSelection {
                    feature: f.clone(),
                    name: f.to_string(),
                    count: 0,
                    selection_probability: 0.0,
                });
                features.len() - 1
            });
            features[idx].count += 1;
        }
        selections.push(sel);
    }
    for f in &mut features {
        f.selection_probability = f.count as f64 / trials as f64;
    }
    Ok(AuditReport {
        target_id: explainer.target_id().to_string(),
        trials,
        k: explainer.k(),
        master_seed,
        proximity_scale: explainer.proximity_scale(),
        target_point: explainer.target_point(),
        supplementary: SupplementaryMetrics {
            mean_pairwise_jaccard: mean_pairwise_jaccard(&selections),
        },
        features,
        selections,
        informative: None,
        config: explainer.config_snapshot(),
    })
}

fn annotate(trial: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Trial {
        trial,
        source: Box::new(e),
    }
}

/// Runs `trials` independent explanations in parallel. Trial `t` uses seed
/// `trial_seed(master_seed, t)`, so the report does not depend on scheduling.
pub fn run_trials<E: TrialExplainer + ?Sized>(explainer: &E, trials: usize, master_seed: u64) -> Result<AuditReport> {
    if trials == 0 {
        return Err(Error::arg("at least one trial is required"));
    }
    let explanations: Vec<Explanation> = (0..trials)
        .into_par_iter()
        .map(|t| explainer.explain_trial(trial_seed(master_seed, t)).map_err(annotate(t)))
        .collect::<Result<_>>()?;
    aggregate(explainer, master_seed, &explanations)
}

/// Sequential variant executing trials in the given order (a permutation of
/// `0..trials`). Produces the same report as [`run_trials`].
pub fn run_trials_in_order<E: TrialExplainer + ?Sized>(
    explainer: &E,
    master_seed: u64,
    order: &[usize],
) -> Result<AuditReport> {
    let trials = order.len();
    let mut slots: Vec<Option<Explanation>> = vec![None; trials];
    for &t in order {
        if t >= trials || slots[t].is_some() {
            return Err(Error::arg("execution order must be a permutation of 0..trials"));
        }
        slots[t] = Some(explainer.explain_trial(trial_seed(master_seed, t)).map_err(annotate(t))?);
    }
    let explanations: Vec<Explanation> = slots.into_iter().map(|e| e.expect("filled above")).collect();
    aggregate(explainer, master_seed, &explanations)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximitySweep {
    pub target_id: String,
    pub k: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub scales: Vec<f64>,
    /// One report per scale, aligned with `scales`.
    pub reports: Vec<AuditReport>,
}

/// Master seed used for the trials at `scale`.
pub fn scale_seed(master_seed: u64, scale: f64) -> u64 {
    substream_seed(master_seed, scale.to_bits())
}

pub fn proximity_sweep<P: Predictor + ?Sized>(
    target: &TabularTarget<'_, P>,
    scales: &[f64],
    trials: usize,
    master_seed: u64,
) -> Result<ProximitySweep> {
    if scales.is_empty() {
        return Err(Error::arg("a sweep needs at least one scale"));
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::arg(format!("sweep scale {s} must be positive and finite")));
    }
    let reports = scales
        .iter()
        .map(|&s| run_trials(&target.with_scale(s), trials, scale_seed(master_seed, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProximitySweep {
        target_id: target.target_id.clone(),
        k: target.config.k,
        trials,
        master_seed,
        scales: scales.to_vec(),
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCredibility {
    pub target_id: String,
    /// Share of selection mass on the declared informative features.
    pub informativeness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPair {
    pub first: String,
    pub second: String,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibilitySummary {
    pub points: Vec<PointCredibility>,
    pub gap_threshold: f64,
    pub max_gap: f64,
    pub flagged: Vec<FlaggedPair>,
    pub notes: Vec<String>,
}

/// Compares how informative the selections are across points.
pub fn credibility_compare(
    reports: &[AuditReport],
    informative: &[Vec<FeatureRef>],
    gap_threshold: f64,
) -> Result<CredibilitySummary> {
    if reports.len() != informative.len() {
        return Err(Error::arg(format!(
            "{} reports but {} informative sets",
            reports.len(),
            informative.len()
        )));
    }
    if !(gap_threshold >= 0.0) {
        return Err(Error::arg("gap threshold must be nonnegative"));
    }
    let points: Vec<PointCredibility> = reports
        .iter()
        .zip(informative)
        .map(|(r, set)| {
            let total = r.total_probability();
            let inf: f64 = set.iter().map(|f| r.probability_of(f)).sum();
            PointCredibility {
                target_id: r.target_id.clone(),
                informativeness: if total > 0.0 { (inf / total).clamp(0.0, 1.0) } else { 0.0 },
            }
        })
        .collect();
    let mut flagged = Vec::new();
    let mut max_gap: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let gap = (points[i].informativeness - points[j].informativeness).abs();
            max_gap = max_gap.max(gap);
            if gap > gap_threshold {
                flagged.push(FlaggedPair {
                    first: points[i].target_id.clone(),
                    second: points[j].target_id.clone(),
                    gap,
                });
            }
        }
    }
    let notes = flagged
        .iter()
        .map(|f| {
            let (hi, lo) = {
                let a = points.iter().find(|p| p.target_id == f.first).unwrap();
                let b = points.iter().find(|p| p.target_id == f.second).unwrap();
                if a.informativeness >= b.informativeness {
                    (a, b)
                } else {
                    (b, a)
                }
            };
            format!(
                "explanations for {} ({:.2}) are far more informative than for {} ({:.2})",
                hi.target_id, hi.informativeness, lo.target_id, lo.informativeness
            )
        })
        .collect();
    Ok(CredibilitySummary {
        points,
        gap_threshold,
        max_gap,
        flagged,
        notes,
    })
}

/// A report file: either a single audit or a proximity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AuditDocument {
    Sweep(ProximitySweep),
    Report(AuditReport),
}

impl AuditDocument {
    pub fn reports(&self) -> Vec<&AuditReport> {
        match self {
            AuditDocument::Sweep(s) => s.reports.iter().collect(),
            AuditDocument::Report(r) => vec![r],
        }
    }
}

/// Flat `feature,selection_probability,scale,target_id` rows, one per
/// feature per report.
pub fn write_csv<W: Write>(reports: &[&AuditReport], out: W) -> Result<usize> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "selection_probability", "scale", "target_id"])
        .map_err(csv_err)?;
    let mut rows = 0;
    for r in reports {
        let scale = r.proximity_scale.map(|s| s.to_string()).unwrap_or_default();
        for f in &r.features {
            w.write_record([
                f.name.as_str(),
                &f.selection_probability.to_string(),
                &scale,
                &r.target_id,
            ])
            .map_err(csv_err)?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
