//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Criteria 6 and 7 use the real datasets when `LIMEAUDIT_NEWSGROUPS` (the
//! by-date archive root) or `LIMEAUDIT_COMPAS_CSV` is set, and the bundled
//! fixtures otherwise.

#[path = "../../core/tests/support/oracles.rs"]
mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use limeaudit_cli::config::ExperimentConfig;
use limeaudit_cli::run::target_seed;
use limeaudit_cli::{run_config, RunSummary};
use limeaudit_core::audit::{run_trials_in_order, AuditReport, ProximitySweep, TabularTarget};
use limeaudit_core::lasso::{
    fit_weighted_lasso, k_lasso_select, kkt_violation, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use limeaudit_core::lime::FeatureRef;
use limeaudit_core::rng::{rng_from_seed, substream_seed};
use limeaudit_core::synthdata::generate_dataset;
use limeaudit_core::BlackBoxModel;
use oracles::{best_subset, ista_oracle, lambda_max, planted_instance, random_instance};
use rand::seq::SliceRandom;
use rand::Rng;

type Verdict = Result<String, String>;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_secs as f64 {
        Ok(())
    } else {
        Err(format!("took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64()))
    }
}

fn load_config(name: &str, out: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> ExperimentConfig {
    let path = configs_dir().join(name);
    let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["output_dir"] = serde_json::json!(out);
    edit(&mut value);
    ExperimentConfig::from_json(&value.to_string()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Run {
    summary: RunSummary,
    elapsed: Duration,
}

fn execute(cfg: &ExperimentConfig) -> Result<Run, String> {
    let start = Instant::now();
    let mut summary = run_config(cfg).map_err(|e| e.to_string())?;
    let root = summary.output_dir.clone();
    for p in summary.reports.iter_mut().chain(summary.sweeps.iter_mut()) {
        *p = root.join(&*p);
    }
    Ok(Run {
        summary,
        elapsed: start.elapsed(),
    })
}

fn read_report(path: &Path) -> AuditReport {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn read_sweep(path: &Path) -> ProximitySweep {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Every audit report a run produced, including those inside sweeps.
fn all_reports(run: &Run) -> Vec<AuditReport> {
    let mut out: Vec<AuditReport> = run.summary.reports.iter().map(|p| read_report(p)).collect();
    for p in &run.summary.sweeps {
        out.extend(read_sweep(p).reports);
    }
    out
}

fn report_named(run: &Run, id: &str) -> AuditReport {
    let path = run
        .summary
        .reports
        .iter()
        .find(|p| p.ends_with(format!("{id}.json")))
        .unwrap_or_else(|| panic!("no report for {id}"));
    read_report(path)
}

/// Relative path to bytes for every JSON output except the manifest, which
/// records wall-clock timings.
fn result_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if path.file_name().is_some_and(|n| n != "manifest.json") {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut rng = rng_from_seed(0xacce);
    let (mut converged, mut worst_kkt, mut worst_gap) = (0, 0.0f64, 0.0f64);
    for i in 0..200u64 {
        let n = rng.random_range(10..=100);
        let p = rng.random_range(2..=20);
        let frac: f64 = rng.random_range(0.02..0.9);
        let inst = random_instance(1_000_000 + i, n, p);
        let lambda = frac * lambda_max(&inst);
        let fit = fit_weighted_lasso(&inst.x, &inst.y, &inst.w, lambda, DEFAULT_TOL, DEFAULT_MAX_ITER)
            .map_err(|e| format!("instance {i}: {e}"))?;
        if !fit.converged {
            continue;
        }
        converged += 1;
        let kkt = kkt_violation(&inst.x, &inst.y, &inst.w, &fit).map_err(|e| e.to_string())?;
        let (beta, _) = ista_oracle(&inst, lambda);
        let gap = fit.coefficients.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_kkt = worst_kkt.max(kkt);
        worst_gap = worst_gap.max(gap);
        if kkt > 1e-6 || gap > 1e-5 {
            return Err(format!("instance {i} (n={n}, p={p}): KKT {kkt:.2e}, oracle gap {gap:.2e}"));
        }
    }
    within(start.elapsed(), 30)?;
    Ok(format!(
        "{converged}/200 converged; worst KKT {worst_kkt:.1e}, worst oracle gap {worst_gap:.1e}, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut hits = 0;
    for seed in 0..50u64 {
        let (inst, support) = planted_instance(20_000 + seed);
        let oracle = best_subset(&inst.x, &inst.y, &inst.w, 3);
        if oracle != support {
            return Err(format!("best-subset oracle disagrees with planted support at seed {seed}"));
        }
        let mut got = k_lasso_select(&inst.x, &inst.y, &inst.w, 3).map_err(|e| e.to_string())?.selected;
        got.sort_unstable();
        if got == oracle {
            hits += 1;
        }
    }
    within(start.elapsed(), 30)?;
    if hits < 48 {
        return Err(format!("exact support in {hits}/50"));
    }
    Ok(format!("exact support in {hits}/50, {:.1}s", start.elapsed().as_secs_f64()))
}

const SPLIT_FEATURES: [usize; 3] = [0, 1, 2];

fn criterion_3(rf: &Run) -> Verdict {
    within(rf.elapsed, 600)?;
    let mut lines = Vec::new();
    let mut checked = 0;
    for path in &rf.summary.reports {
        let r = read_report(path);
        let active: Vec<usize> = r
            .informative
            .as_ref()
            .unwrap()
            .iter()
            .map(|f| match f {
                FeatureRef::Index(j) => *j,
                other => panic!("unexpected feature {other}"),
            })
            .collect();
        if active.iter().any(|j| SPLIT_FEATURES.contains(j)) {
            continue;
        }
        checked += 1;
        let (split, truth) = (r.mass_of(&SPLIT_FEATURES), r.mass_of(&active));
        lines.push(format!("{} {{0,1,2}}={split:.2} vs {active:?}={truth:.2}", r.target_id));
        if split <= truth {
            return Err(lines.join("; "));
        }
    }
    if checked == 0 {
        return Err("no leaf has an active set disjoint from the split features".into());
    }
    Ok(format!("{}; run {:.1}s", lines.join("; "), rf.elapsed.as_secs_f64()))
}

fn criterion_4(rf: &Run) -> Verdict {
    within(rf.elapsed, 300)?;
    let path = rf
        .summary
        .sweeps
        .iter()
        .find(|p| p.ends_with("leaf5.json"))
        .ok_or("no leaf-5 sweep in the run")?;
    let sweep = read_sweep(path);
    let at = |s: f64| {
        sweep
            .scales
            .iter()
            .position(|&x| x == s)
            .map(|i| &sweep.reports[i])
            .ok_or(format!("sweep lacks scale {s}"))
    };
    let (wide, narrow) = (at(1.0)?, at(0.1)?);
    let true_set = [5, 6, 7];
    let detail = format!(
        "scale 1.0: {:?}, scale 0.1: {:?}, {{5,6,7}} mass at 0.1 = {:.2}",
        true_set.map(|j| wide.index_probability(j)),
        true_set.map(|j| narrow.index_probability(j)),
        narrow.mass_of(&true_set)
    );
    let each_higher = true_set.iter().all(|&j| narrow.index_probability(j) > wide.index_probability(j));
    if each_higher && narrow.mass_of(&true_set) > 1.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_5(synthetic: &[(&str, &Run)]) -> Verdict {
    let mut below_one = Vec::new();
    for (name, run) in synthetic {
        for r in all_reports(run) {
            let sets: BTreeSet<BTreeSet<&FeatureRef>> = r.selections.iter().map(|s| s.iter().collect()).collect();
            if sets.len() == 1 {
                let only: Vec<usize> = sets
                    .iter()
                    .next()
                    .unwrap()
                    .iter()
                    .map(|f| match f {
                        FeatureRef::Index(j) => *j,
                        _ => unreachable!(),
                    })
                    .collect();
                if r.mass_of(&only) != r.k as f64 {
                    return Err(format!("{name}/{}: identical selections without a full-mass set", r.target_id));
                }
            }
            let j = r.supplementary.mean_pairwise_jaccard.ok_or("missing Jaccard stability")?;
            if *name == "synthetic8_rf" && r.proximity_scale == Some(1.0) && j < 1.0 {
                below_one.push(format!("{} {j:.3}", r.target_id));
            }
        }
    }
    if below_one.is_empty() {
        return Err("every default-proximity leaf has Jaccard stability 1.0".into());
    }
    Ok(format!("Jaccard < 1 at {}", below_one.join(", ")))
}

fn criterion_6(scratch: &Path) -> Verdict {
    let start = Instant::now();
    let detail = match std::env::var_os("LIMEAUDIT_NEWSGROUPS") {
        Some(root) => {
            let pairs = [
                (["sci.electronics", "sci.crypt"], 0.92),
                (["soc.religion.christian", "alt.atheism"], 0.91),
            ];
            let mut lines = Vec::new();
            let mut ok = true;
            for (i, (cats, expected)) in pairs.iter().enumerate() {
                let cfg = load_config("text.json", &scratch.join(format!("news{i}")), |v| {
                    v["dataset"]["root"] = serde_json::json!(root.to_string_lossy());
                    v["dataset"]["categories"] = serde_json::json!(cats);
                    v["audit"].as_object_mut().unwrap().remove("informative");
                });
                let run = execute(&cfg)?;
                let acc = run.summary.manifest.metrics["test_accuracy"];
                ok &= (acc - expected).abs() <= 0.03;
                lines.push(format!("{} vs {}: test accuracy {acc:.4} (target {expected} ± 0.03)", cats[0], cats[1]));
            }
            if !ok {
                return Err(lines.join("; "));
            }
            lines.join("; ")
        }
        None => {
            let a = execute(&load_config("text.json", &scratch.join("text_a"), |_| {}))?;
            let b = execute(&load_config("text.json", &scratch.join("text_b"), |_| {}))?;
            if result_files(&a.summary.output_dir) != result_files(&b.summary.output_dir) {
                return Err("bundled corpus runs differ".into());
            }
            format!(
                "bundled corpus trained (test accuracy {:.3}) and audited {} documents identically twice",
                a.summary.manifest.metrics["test_accuracy"],
                a.summary.reports.len()
            )
        }
    };
    within(start.elapsed(), 300)?;
    Ok(format!("{detail}, {:.1}s", start.elapsed().as_secs_f64()))
}

fn criterion_7(scratch: &Path) -> Verdict {
    let top5 = |run: &Run, id: &str| -> BTreeSet<String> {
        let r = report_named(run, id);
        r.top_features(5)
            .iter()
            .map(|f| r.features.iter().find(|s| &s.feature == f).unwrap().name.clone())
            .collect()
    };
    match std::env::var_os("LIMEAUDIT_COMPAS_CSV") {
        Some(csv) => {
            let cfg = load_config("compas.json", &scratch.join("compas_real"), |v| {
                v["dataset"]["path"] = serde_json::json!(csv.to_string_lossy());
                v["audit"]["trials"] = serde_json::json!(50);
                v["audit"]["k"] = serde_json::json!(5);
            });
            let run = execute(&cfg)?;
            let (a, b) = (top5(&run, "row0"), top5(&run, "row1"));
            if a == b {
                Ok(format!("top-5 identical across rows: {a:?}"))
            } else {
                Err(format!("row0 {a:?} vs row1 {b:?}"))
            }
        }
        None => {
            let edit = |v: &mut serde_json::Value| {
                v["audit"]["trials"] = serde_json::json!(50);
                v["audit"]["k"] = serde_json::json!(5);
            };
            let a = execute(&load_config("compas.json", &scratch.join("compas_a"), edit))?;
            let b = execute(&load_config("compas.json", &scratch.join("compas_b"), edit))?;
            if result_files(&a.summary.output_dir) != result_files(&b.summary.output_dir) {
                return Err("bundled table runs differ".into());
            }
            let (r0, r1) = (top5(&a, "row0"), top5(&a, "row1"));
            Ok(format!(
                "bundled 500-row table ran identically twice; top-5 row0 {r0:?}, row1 {r1:?} (cross-row identity {})",
                if r0 == r1 { "holds" } else { "not asserted on the fixture" }
            ))
        }
    }
}

/// Re-runs leaf 4 of a finished synthetic run sequentially in a shuffled
/// trial order and compares with the report the run wrote.
fn permuted_leaf_matches(cfg: &ExperimentConfig, run: &Run) -> Result<(), String> {
    let ExperimentConfig::Synthetic(c) = cfg else {
        return Err("expected a synthetic config".into());
    };
    let dir = &run.summary.output_dir;
    let model = BlackBoxModel::load(&dir.join("model.json")).map_err(|e| e.to_string())?;
    let spec = c.dataset.partition.resolve();
    let train = generate_dataset(&spec, c.dataset.n_train, substream_seed(c.dataset.seed, 0)).map_err(|e| e.to_string())?;
    let points = spec.audit_points(&c.audit.targets, Some(&train.x)).map_err(|e| e.to_string())?;
    let leaves = spec.leaves();
    let idx = leaves.iter().position(|l| l.leaf_id == 4).ok_or("no leaf 4")?;
    let target = TabularTarget {
        model: &model,
        point: points[idx].clone(),
        stats: &train.stats,
        feature_names: train.feature_names.clone(),
        config: c.explainer.to_core(c.audit.k, 1),
        target_id: "leaf4".into(),
    };
    let mut order: Vec<usize> = (0..c.audit.trials).collect();
    order.shuffle(&mut rng_from_seed(99));
    let mut report = run_trials_in_order(&target, target_seed(c.master_seed, 4), &order).map_err(|e| e.to_string())?;
    report.informative = Some(leaves[idx].active_set().into_iter().map(FeatureRef::Index).collect());
    let mut bytes = serde_json::to_vec_pretty(&report).unwrap();
    bytes.push(b'\n');
    if bytes != fs::read(dir.join("reports/leaf4.json")).unwrap() {
        return Err("shuffled sequential trials changed the leaf-4 report".into());
    }
    Ok(())
}

fn criterion_8(names: &[String], firsts: &BTreeMap<String, (ExperimentConfig, Run)>, scratch: &Path) -> Verdict {
    let mut compared = 0;
    for name in names {
        let (_, first) = &firsts[name];
        let cfg = load_config(name, &scratch.join(format!("{name}.again")), |_| {});
        let second = execute(&cfg)?;
        let (a, b) = (result_files(&first.summary.output_dir), result_files(&second.summary.output_dir));
        if a != b {
            let differing: Vec<_> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
            return Err(format!("{name}: outputs differ: {differing:?}"));
        }
        compared += a.len();
    }
    let (cfg, rf) = &firsts["synthetic8_rf.json"];
    permuted_leaf_matches(cfg, rf)?;
    Ok(format!(
        "{} configs ran twice with {compared} byte-identical files; shuffled trial order reproduced leaf4",
        names.len()
    ))
}

fn criterion_9(firsts: &BTreeMap<String, (ExperimentConfig, Run)>) -> Verdict {
    let mut n = 0;
    for (name, (_, run)) in firsts {
        for r in all_reports(run) {
            r.check_counting_identities().map_err(|e| format!("{name}/{}: {e}", r.target_id))?;
            n += 1;
        }
    }
    Ok(format!("{n} reports satisfy the counting identities"))
}

fn main() {
    let scratch = tempfile::tempdir().expect("temp dir");
    let mut verdicts: Vec<(u32, Verdict)> = vec![(1, criterion_1()), (2, criterion_2())];

    let mut names: Vec<String> = fs::read_dir(configs_dir())
        .expect("configs directory")
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    let mut firsts = BTreeMap::new();
    let mut failed_runs = Vec::new();
    for name in &names {
        let cfg = load_config(name, &scratch.path().join(name), |_| {});
        match execute(&cfg) {
            Ok(run) => {
                firsts.insert(name.clone(), (cfg, run));
            }
            Err(e) => failed_runs.push(format!("{name}: {e}")),
        }
    }
    let runs_ok = || -> Result<(), String> {
        if failed_runs.is_empty() {
            Ok(())
        } else {
            Err(failed_runs.join("; "))
        }
    };
    let rf = firsts.get("synthetic8_rf.json").map(|(_, r)| r);
    let need_rf = |f: &dyn Fn(&Run) -> Verdict| rf.map_or(Err("synthetic8_rf.json did not run".into()), f);
    verdicts.push((3, need_rf(&criterion_3)));
    verdicts.push((4, need_rf(&criterion_4)));
    let synthetic: Vec<(&str, &Run)> = firsts
        .iter()
        .filter(|(_, (c, _))| matches!(c, ExperimentConfig::Synthetic(_)))
        .map(|(n, (_, r))| (n.trim_end_matches(".json"), r))
        .collect();
    verdicts.push((5, criterion_5(&synthetic)));
    verdicts.push((6, criterion_6(scratch.path())));
    verdicts.push((7, criterion_7(scratch.path())));
    verdicts.push((8, runs_ok().and_then(|_| criterion_8(&names, &firsts, scratch.path()))));
    verdicts.push((9, runs_ok().and_then(|_| criterion_9(&firsts))));

    let mut failures = 0;
    for (id, v) in &verdicts {
        match v {
            Ok(detail) => println!("criterion {id}: PASS  {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {id}: FAIL  {detail}");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
