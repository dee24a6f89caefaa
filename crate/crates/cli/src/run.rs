//! The `run` and `verify` commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use limeaudit_core::audit::{
    credibility_compare, proximity_sweep, run_trials, trial_seed, AuditReport, CredibilitySummary, TabularTarget,
    TextTarget,
};
use limeaudit_core::blackbox::{
    accuracy, fit_cart, fit_gradient_boosting, fit_multinomial_nb, fit_random_forest, ground_truth_classifier, argmax,
};
use limeaudit_core::bundled::{write_mini_newsgroups, write_synthetic_compas, MINI_NEWSGROUPS_CATEGORIES};
use limeaudit_core::ingest::{load_compas, load_newsgroups, Corpus, TfidfVocabulary};
use limeaudit_core::lime::FeatureRef;
use limeaudit_core::rng::substream_seed;
use limeaudit_core::synthdata::{generate_dataset, AuditPointRule, TabularDataset};
use limeaudit_core::{BlackBoxModel, Matrix, Predictor, SparseVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{CompasConfig, ExperimentConfig, SyntheticConfig, TabularModel, TextConfig, COMPAS_DEFAULT_CLASS};
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub name: String,
    /// `generated`, `bundled` or `file`.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub stages: Vec<StageTiming>,
    pub datasets: Vec<DatasetFingerprint>,
    pub metrics: BTreeMap<String, f64>,
    /// Every file the run wrote, relative to the output directory.
    pub outputs: Vec<PathBuf>,
}

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub manifest: RunManifest,
    /// Report files (relative paths) in target order.
    pub reports: Vec<PathBuf>,
    pub sweeps: Vec<PathBuf>,
}

struct Recorder {
    stages: Vec<StageTiming>,
    datasets: Vec<DatasetFingerprint>,
    metrics: BTreeMap<String, f64>,
    reports: Vec<PathBuf>,
    sweeps: Vec<PathBuf>,
    clock: Instant,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            stages: Vec::new(),
            datasets: Vec::new(),
            metrics: BTreeMap::new(),
            reports: Vec::new(),
            sweeps: Vec::new(),
            clock: Instant::now(),
        }
    }

    fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.stages.push(StageTiming {
            stage: name.to_string(),
            seconds: (now - self.clock).as_secs_f64(),
        });
        self.clock = now;
        log::info!("stage {name} done");
    }
}

/// Executes the experiment described by the config file at `path`.
pub fn cmd_run(path: &Path) -> CliResult<RunSummary> {
    let cfg = ExperimentConfig::load(path)?;
    run_config(&cfg)
}

/// Executes an already parsed experiment. On failure every file written so
/// far is removed.
pub fn run_config(cfg: &ExperimentConfig) -> CliResult<RunSummary> {
    cfg.validate()?;
    cfg.check_data_paths()?;
    let mut out = OutputDir::open(cfg.output_dir())?;
    let mut rec = Recorder::new();
    let result = match cfg {
        ExperimentConfig::Synthetic(c) => run_synthetic(c, &mut out, &mut rec),
        ExperimentConfig::Text(c) => run_text(c, &mut out, &mut rec),
        ExperimentConfig::Compas(c) => run_compas(c, &mut out, &mut rec),
    }
    .and_then(|()| {
        let mut outputs = out.written().to_vec();
        outputs.push(PathBuf::from(MANIFEST_FILE));
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            stages: std::mem::take(&mut rec.stages),
            datasets: std::mem::take(&mut rec.datasets),
            metrics: std::mem::take(&mut rec.metrics),
            outputs,
        };
        out.write_json(MANIFEST_FILE, &manifest)?;
        Ok(manifest)
    });
    match result {
        Ok(manifest) => Ok(RunSummary {
            output_dir: out.root().to_path_buf(),
            manifest,
            reports: rec.reports,
            sweeps: rec.sweeps,
        }),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn fingerprint_matrix(x: &Matrix, y: &[usize]) -> String {
    let mut h = Sha256::new();
    for v in x.as_slice() {
        h.update(v.to_le_bytes());
    }
    for v in y {
        h.update((*v as u64).to_le_bytes());
    }
    hex(&h.finalize())
}

fn fingerprint_corpus(c: &Corpus) -> String {
    let mut h = Sha256::new();
    for ((doc, label), src) in c.documents.iter().zip(&c.labels).zip(&c.sources) {
        h.update(src.as_bytes());
        h.update([0]);
        h.update((*label as u64).to_le_bytes());
        for t in doc {
            h.update(t.as_bytes());
            h.update([0]);
        }
    }
    hex(&h.finalize())
}

fn fingerprint_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data_file(path.to_path_buf(), e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn fit_tabular(model: &TabularModel, spec: Option<&limeaudit_core::synthdata::PartitionSpec>, data: &TabularDataset) -> CliResult<BlackBoxModel> {
    Ok(match model {
        TabularModel::GroundTruth {} => {
            let spec = spec.ok_or_else(|| CliError::Config("ground_truth model needs a partition".into()))?;
            ground_truth_classifier(spec)?.into()
        }
        TabularModel::Cart(c) => fit_cart(data, c.max_depth, c.min_leaf)?.into(),
        TabularModel::RandomForest(p) => fit_random_forest(data, p)?.into(),
        TabularModel::GradientBoosting(p) => fit_gradient_boosting(data, p)?.into(),
    })
}

/// Seed from which the trials of one target derive, keyed by a stable
/// target key (leaf id, document index or row index).
pub fn target_seed(master_seed: u64, key: usize) -> u64 {
    substream_seed(master_seed, key as u64)
}

fn index_refs(set: &[usize]) -> Vec<FeatureRef> {
    set.iter().map(|&j| FeatureRef::Index(j)).collect()
}

fn write_credibility(
    out: &mut OutputDir,
    reports: &[AuditReport],
    informative: &[Vec<FeatureRef>],
    gap: f64,
) -> CliResult<CredibilitySummary> {
    let summary = credibility_compare(reports, informative, gap)?;
    out.write_json("credibility.json", &summary)?;
    Ok(summary)
}

fn run_synthetic(c: &SyntheticConfig, out: &mut OutputDir, rec: &mut Recorder) -> CliResult<()> {
    let spec = c.dataset.partition.resolve();
    let train = generate_dataset(&spec, c.dataset.n_train, substream_seed(c.dataset.seed, 0))?;
    let test = if c.dataset.n_test > 0 {
        Some(generate_dataset(&spec, c.dataset.n_test, substream_seed(c.dataset.seed, 1))?)
    } else {
        None
    };
    rec.datasets.push(DatasetFingerprint {
        name: "train".into(),
        source: "generated".into(),
        path: None,
        rows: train.n_samples(),
        sha256: fingerprint_matrix(&train.x, &train.y),
    });
    if let Some(t) = &test {
        rec.datasets.push(DatasetFingerprint {
            name: "test".into(),
            source: "generated".into(),
            path: None,
            rows: t.n_samples(),
            sha256: fingerprint_matrix(&t.x, &t.y),
        });
    }
    out.write_json("partition.json", &spec)?;
    rec.stage("generate_data");

    let model = fit_tabular(&c.model, Some(&spec), &train)?;
    rec.stage("fit_model");
    rec.metrics.insert("train_accuracy".into(), accuracy(&model, &train.x, &train.y)?);
    if let Some(t) = &test {
        rec.metrics.insert("test_accuracy".into(), accuracy(&model, &t.x, &t.y)?);
    }
    out.write_bytes("model.json", model.to_json()?.as_bytes())?;
    rec.stage("evaluate");

    let points = spec.audit_points(&c.audit.targets, Some(&train.x))?;
    let leaves = spec.leaves();
    let explainer = c.explainer.to_core(c.audit.k, 1);
    let mut reports = Vec::with_capacity(leaves.len());
    let mut informative = Vec::with_capacity(leaves.len());
    for (leaf, point) in leaves.iter().zip(points) {
        let target = TabularTarget {
            model: &model,
            point,
            stats: &train.stats,
            feature_names: train.feature_names.clone(),
            config: explainer.clone(),
            target_id: format!("leaf{}", leaf.leaf_id),
        };
        let seed = target_seed(c.master_seed, leaf.leaf_id);
        let active = index_refs(&leaf.active_set());
        let mut report = run_trials(&target, c.audit.trials, seed)?;
        report.informative = Some(active.clone());
        let rel = PathBuf::from(format!("reports/leaf{}.json", leaf.leaf_id));
        out.write_json(&rel, &report)?;
        rec.reports.push(rel);
        if let Some(sweep) = &c.audit.sweep {
            let wanted = sweep.leaves.as_ref().is_none_or(|l| l.contains(&leaf.leaf_id));
            if wanted {
                let mut s = proximity_sweep(&target, &sweep.scales, c.audit.trials, seed)?;
                for r in &mut s.reports {
                    r.informative = Some(active.clone());
                }
                let rel = PathBuf::from(format!("sweeps/leaf{}.json", leaf.leaf_id));
                out.write_json(&rel, &s)?;
                rec.sweeps.push(rel);
            }
        }
        reports.push(report);
        informative.push(active);
    }
    rec.stage("audit");
    write_credibility(out, &reports, &informative, c.audit.credibility_gap)?;
    rec.stage("write");
    Ok(())
}

fn run_text(c: &TextConfig, out: &mut OutputDir, rec: &mut Recorder) -> CliResult<()> {
    let bundled_dir;
    let (root, source) = match &c.dataset.root {
        Some(r) => (r.clone(), "file"),
        None => {
            bundled_dir = tempfile::tempdir().map_err(|e| CliError::Internal(e.to_string()))?;
            write_mini_newsgroups(bundled_dir.path(), c.dataset.bundled_seed)?;
            (bundled_dir.path().to_path_buf(), "bundled")
        }
    };
    let cats = c
        .dataset
        .categories
        .clone()
        .unwrap_or_else(|| [MINI_NEWSGROUPS_CATEGORIES.0.to_string(), MINI_NEWSGROUPS_CATEGORIES.1.to_string()]);
    let pair = load_newsgroups(&root, (&cats[0], &cats[1]))?;
    for (name, corpus) in [("train", &pair.train), ("test", &pair.test)] {
        rec.datasets.push(DatasetFingerprint {
            name: name.into(),
            source: source.into(),
            path: c.dataset.root.clone(),
            rows: corpus.len(),
            sha256: fingerprint_corpus(corpus),
        });
    }
    rec.stage("load_data");

    let vocab = TfidfVocabulary::fit(&pair.train.documents)?;
    let train_x: Vec<SparseVector> = pair.train.documents.iter().map(|d| vocab.transform(d)).collect();
    let model: BlackBoxModel = fit_multinomial_nb(&train_x, &pair.train.labels, c.model.alpha)?.into();
    rec.stage("fit_model");
    rec.metrics.insert("train_accuracy".into(), sparse_accuracy(&model, &train_x, &pair.train.labels)?);
    let test_x: Vec<SparseVector> = pair.test.documents.iter().map(|d| vocab.transform(d)).collect();
    rec.metrics.insert("test_accuracy".into(), sparse_accuracy(&model, &test_x, &pair.test.labels)?);
    rec.metrics.insert("vocabulary_size".into(), vocab.len() as f64);
    out.write_bytes("model.json", model.to_json()?.as_bytes())?;
    out.write_json("vocabulary.json", &vocab)?;
    rec.stage("evaluate");

    let explainer = c.explainer.to_core(c.audit.k);
    let mut reports = Vec::new();
    for (i, &d) in c.audit.documents.iter().enumerate() {
        let tokens = pair.test.documents.get(d).ok_or_else(|| {
            CliError::Data(format!("test document {d} requested but the test split has {}", pair.test.len()))
        })?;
        let target = TextTarget {
            model: &model,
            tokens: tokens.clone(),
            vocab: &vocab,
            config: explainer.clone(),
            target_id: format!("doc{d}"),
        };
        let mut report = run_trials(&target, c.audit.trials, target_seed(c.master_seed, d))?;
        if let Some(inf) = &c.audit.informative {
            report.informative = Some(inf[i].iter().map(|w| FeatureRef::Token(w.clone())).collect());
        }
        let rel = PathBuf::from(format!("reports/doc{d}.json"));
        out.write_json(&rel, &report)?;
        rec.reports.push(rel);
        reports.push(report);
    }
    rec.stage("audit");
    if let Some(inf) = &c.audit.informative {
        let sets: Vec<Vec<FeatureRef>> = inf
            .iter()
            .map(|ws| ws.iter().map(|w| FeatureRef::Token(w.clone())).collect())
            .collect();
        write_credibility(out, &reports, &sets, c.audit.credibility_gap)?;
    }
    rec.stage("write");
    Ok(())
}

fn sparse_accuracy(model: &BlackBoxModel, docs: &[SparseVector], labels: &[usize]) -> CliResult<f64> {
    if docs.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for (d, &y) in docs.iter().zip(labels) {
        if argmax(&model.predict_proba_sparse(d)?) == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / docs.len() as f64)
}

fn run_compas(c: &CompasConfig, out: &mut OutputDir, rec: &mut Recorder) -> CliResult<()> {
    let bundled_dir;
    let (path, source) = match &c.dataset.path {
        Some(p) => (p.clone(), "file"),
        None => {
            bundled_dir = tempfile::tempdir().map_err(|e| CliError::Internal(e.to_string()))?;
            let p = bundled_dir.path().join("compas.csv");
            write_synthetic_compas(&p, c.dataset.bundled_seed)?;
            (p, "bundled")
        }
    };
    let table = load_compas(&path, &c.dataset.columns)?;
    rec.datasets.push(DatasetFingerprint {
        name: "compas".into(),
        source: source.into(),
        path: c.dataset.path.clone(),
        rows: table.dataset.n_samples(),
        sha256: fingerprint_file(&path)?,
    });
    out.write_json("load_manifest.json", &table.manifest)?;
    rec.stage("load_data");

    let data = &table.dataset;
    let model: BlackBoxModel = fit_random_forest(data, &c.model)?.into();
    rec.stage("fit_model");
    rec.metrics.insert("train_accuracy".into(), accuracy(&model, &data.x, &data.y)?);
    out.write_bytes("model.json", model.to_json()?.as_bytes())?;
    rec.stage("evaluate");

    let informative: Option<Vec<Vec<FeatureRef>>> = c
        .audit
        .informative
        .as_ref()
        .map(|sets| {
            sets.iter()
                .map(|names| {
                    names
                        .iter()
                        .map(|n| {
                            data.feature_names
                                .iter()
                                .position(|f| f == n)
                                .map(FeatureRef::Index)
                                .ok_or_else(|| CliError::Config(format!("informative feature {n:?} is not in the table")))
                        })
                        .collect::<CliResult<Vec<_>>>()
                })
                .collect::<CliResult<Vec<_>>>()
        })
        .transpose()?;

    let explainer = c.explainer.to_core(c.audit.k, COMPAS_DEFAULT_CLASS);
    let mut reports = Vec::new();
    for (i, &r) in c.audit.rows.iter().enumerate() {
        if r >= data.n_samples() {
            return Err(CliError::Data(format!("row {r} requested but the table has {} rows", data.n_samples())));
        }
        let target = TabularTarget {
            model: &model,
            point: data.x.row(r).to_vec(),
            stats: &data.stats,
            feature_names: data.feature_names.clone(),
            config: explainer.clone(),
            target_id: format!("row{r}"),
        };
        let mut report = run_trials(&target, c.audit.trials, target_seed(c.master_seed, r))?;
        if let Some(inf) = &informative {
            report.informative = Some(inf[i].clone());
        }
        let rel = PathBuf::from(format!("reports/row{r}.json"));
        out.write_json(&rel, &report)?;
        rec.reports.push(rel);
        reports.push(report);
    }
    rec.stage("audit");
    if let Some(inf) = &informative {
        write_credibility(out, &reports, inf, c.audit.credibility_gap)?;
    }
    rec.stage("write");
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedTarget {
    pub target_id: String,
    /// Seed the target's trials derive from.
    pub master_seed: u64,
    pub first_trial_seed: u64,
    /// Audited coordinates when they are known before any data is loaded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informative: Option<Vec<FeatureRef>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub kind: String,
    pub output_dir: PathBuf,
    pub data: Vec<String>,
    pub model: String,
    pub trials: usize,
    pub k: usize,
    pub targets: Vec<PlannedTarget>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep_scales: Vec<f64>,
    pub config: ExperimentConfig,
}

/// Validates the config and data paths and resolves the plan without
/// running anything.
pub fn cmd_verify(path: &Path) -> CliResult<Plan> {
    let cfg = ExperimentConfig::load(path)?;
    plan(&cfg)
}

pub fn plan(cfg: &ExperimentConfig) -> CliResult<Plan> {
    cfg.validate()?;
    cfg.check_data_paths()?;
    let planned = |id: String, key: usize, point: Option<Vec<f64>>, informative: Option<Vec<FeatureRef>>| {
        let seed = target_seed(cfg.master_seed(), key);
        PlannedTarget {
            target_id: id,
            master_seed: seed,
            first_trial_seed: trial_seed(seed, 0),
            point,
            informative,
        }
    };
    Ok(match cfg {
        ExperimentConfig::Synthetic(c) => {
            let spec = c.dataset.partition.resolve();
            let points = match &c.audit.targets {
                AuditPointRule::NearestTraining {} => None,
                rule => Some(spec.audit_points(rule, None)?),
            };
            let targets = spec
                .leaves()
                .iter()
                .enumerate()
                .map(|(i, leaf)| {
                    planned(
                        format!("leaf{}", leaf.leaf_id),
                        leaf.leaf_id,
                        points.as_ref().map(|p| p[i].clone()),
                        Some(index_refs(&leaf.active_set())),
                    )
                })
                .collect();
            Plan {
                kind: cfg.kind().into(),
                output_dir: c.output_dir.clone(),
                data: vec![format!(
                    "generated: {} train / {} test samples, seed {}",
                    c.dataset.n_train, c.dataset.n_test, c.dataset.seed
                )],
                model: model_name(&c.model).into(),
                trials: c.audit.trials,
                k: c.audit.k,
                targets,
                sweep_scales: c.audit.sweep.as_ref().map(|s| s.scales.clone()).unwrap_or_default(),
                config: cfg.clone(),
            }
        }
        ExperimentConfig::Text(c) => Plan {
            kind: cfg.kind().into(),
            output_dir: c.output_dir.clone(),
            data: vec![match &c.dataset.root {
                Some(r) => format!("newsgroups archive at {}", r.display()),
                None => format!("bundled miniature corpus, seed {}", c.dataset.bundled_seed),
            }],
            model: "multinomial_nb".into(),
            trials: c.audit.trials,
            k: c.audit.k,
            targets: c
                .audit
                .documents
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    let inf = c
                        .audit
                        .informative
                        .as_ref()
                        .map(|sets| sets[i].iter().map(|w| FeatureRef::Token(w.clone())).collect());
                    planned(format!("doc{d}"), d, None, inf)
                })
                .collect(),
            sweep_scales: Vec::new(),
            config: cfg.clone(),
        },
        ExperimentConfig::Compas(c) => Plan {
            kind: cfg.kind().into(),
            output_dir: c.output_dir.clone(),
            data: vec![match &c.dataset.path {
                Some(p) => format!("COMPAS CSV at {}", p.display()),
                None => format!("bundled synthetic table, seed {}", c.dataset.bundled_seed),
            }],
            model: "random_forest".into(),
            trials: c.audit.trials,
            k: c.audit.k,
            targets: c
                .audit
                .rows
                .iter()
                .map(|&r| planned(format!("row{r}"), r, None, None))
                .collect(),
            sweep_scales: Vec::new(),
            config: cfg.clone(),
        },
    })
}

fn model_name(m: &TabularModel) -> &'static str {
    match m {
        TabularModel::GroundTruth {} => "ground_truth",
        TabularModel::Cart(_) => "cart",
        TabularModel::RandomForest(_) => "random_forest",
        TabularModel::GradientBoosting(_) => "gradient_boosting",
    }
}
