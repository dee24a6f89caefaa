use limeaudit_core::audit::{
    aggregate, proximity_sweep, run_trials, run_trials_in_order, scale_seed, stability_summary, trial_seed,
    FeatureInfo, TabularTarget, TrialExplainer,
};
use limeaudit_core::blackbox::ground_truth_classifier;
use limeaudit_core::lime::{
    explain_tabular, perturb_tabular, Explanation, FeatureRef, KernelMode, SelectedFeature, TabularExplainerConfig,
};
use limeaudit_core::rng::rng_from_seed;
use limeaudit_core::synthdata::{default_partition_8, generate_dataset, FeatureStats};
use limeaudit_core::{Matrix, Predictor, Result};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

/// Picks between 0 and `k` random features per trial without any model.
struct DiceExplainer {
    p: usize,
    k: usize,
}

impl TrialExplainer for DiceExplainer {
    fn target_id(&self) -> &str {
        "dice"
    }
    fn k(&self) -> usize {
        self.k
    }
    fn feature_universe(&self) -> Vec<FeatureInfo> {
        (0..self.p)
            .map(|j| FeatureInfo {
                feature: FeatureRef::Index(j),
                name: format!("f{j}"),
            })
            .collect()
    }
    fn explain_trial(&self, seed: u64) -> Result<Explanation> {
        let mut rng = rng_from_seed(seed);
        let take = rng.random_range(0..=self.k.min(self.p));
        let picked = rand::seq::index::sample(&mut rng, self.p, take).into_vec();
        Ok(Explanation {
            target_id: "dice".into(),
            selected: picked
                .into_iter()
                .map(|j| SelectedFeature {
                    feature: FeatureRef::Index(j),
                    coefficient: 1.0,
                })
                .collect(),
            k: self.k,
            n_samples: 0,
            proximity_scale: None,
            kernel_width: 1.0,
            kernel: KernelMode::Constant,
            class_index: 1,
            seed,
            intercept: 0.0,
            lambda_at_selection: 0.0,
        })
    }
    fn config_snapshot(&self) -> serde_json::Value {
        serde_json::json!({ "p": self.p })
    }
}

/// Probability of class 1 is affine in the standardized features.
struct AffineModel {
    means: Vec<f64>,
    stds: Vec<f64>,
    coef: Vec<f64>,
}

impl Predictor for AffineModel {
    fn n_features(&self) -> usize {
        self.coef.len()
    }
    fn n_classes(&self) -> usize {
        2
    }
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z: f64 = (0..x.len()).map(|j| self.coef[j] * (x[j] - self.means[j]) / self.stds[j]).sum();
        let p = 0.5 + z;
        Ok(vec![1.0 - p, p])
    }
}

fn uniform_stats(p: usize, seed: u64) -> FeatureStats {
    let mut rng = rng_from_seed(seed);
    let data: Vec<f64> = (0..2_000 * p).map(|_| rng.random()).collect();
    FeatureStats::from_matrix(&Matrix::from_vec(2_000, p, data).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counting_identities_hold(p in 1usize..12, k in 1usize..6, trials in 1usize..60, master in any::<u64>()) {
        let e = DiceExplainer { p, k };
        let report = run_trials(&e, trials, master).unwrap();
        report.check_counting_identities().unwrap();
        let total: usize = report.selections.iter().map(Vec::len).sum();
        let counted: usize = report.features.iter().map(|f| f.count).sum();
        prop_assert_eq!(counted, total);
        prop_assert!(counted <= k * trials);
        prop_assert!((report.total_probability() - total as f64 / trials as f64).abs() < 1e-12);
        for f in &report.features {
            prop_assert!((0.0..=1.0).contains(&f.selection_probability));
            prop_assert_eq!(f.selection_probability, f.count as f64 / trials as f64);
        }
    }

    #[test]
    fn execution_order_is_irrelevant(trials in 1usize..40, master in any::<u64>(), shuffle in any::<u64>()) {
        let e = DiceExplainer { p: 9, k: 3 };
        let mut order: Vec<usize> = (0..trials).collect();
        order.shuffle(&mut rng_from_seed(shuffle));
        let a = run_trials(&e, trials, master).unwrap();
        let b = run_trials_in_order(&e, master, &order).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn one_more_trial_moves_probabilities_little(trials in 1usize..50, master in any::<u64>()) {
        let e = DiceExplainer { p: 7, k: 3 };
        let explanations: Vec<Explanation> =
            (0..=trials).map(|t| e.explain_trial(trial_seed(master, t)).unwrap()).collect();
        let before = aggregate(&e, master, &explanations[..trials]).unwrap();
        let after = aggregate(&e, master, &explanations).unwrap();
        for (b, a) in before.features.iter().zip(&after.features) {
            prop_assert!(a.count >= b.count && a.count <= b.count + 1);
            let bound = 1.0 / (trials + 1) as f64;
            prop_assert!((a.selection_probability - b.selection_probability).abs() <= bound + 1e-15);
        }
    }

    #[test]
    fn single_scale_sweep_is_one_report(scale in 0.05f64..2.0, master in any::<u64>()) {
        let stats = uniform_stats(4, 1);
        let model = AffineModel { means: stats.means.clone(), stds: stats.stds.clone(), coef: vec![0.02, -0.01, 0.005, 0.0] };
        let target = TabularTarget {
            model: &model,
            point: vec![0.3, 0.6, 0.5, 0.2],
            stats: &stats,
            feature_names: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            config: TabularExplainerConfig { n_samples: 100, k: 2, ..Default::default() },
            target_id: "pt".into(),
        };
        let sweep = proximity_sweep(&target, &[scale], 4, master).unwrap();
        let direct = run_trials(&target.with_scale(scale), 4, scale_seed(master, scale)).unwrap();
        prop_assert_eq!(&sweep.reports[0], &direct);
        let both = proximity_sweep(&target, &[0.7, scale], 4, master).unwrap();
        prop_assert_eq!(&both.reports[1], &direct);
    }
}

#[test]
fn linear_black_box_support_is_top_k() {
    let stats = uniform_stats(8, 3);
    let model = AffineModel {
        means: stats.means.clone(),
        stds: stats.stds.clone(),
        coef: vec![0.004, 0.012, -0.03, 0.0, 0.02, 0.0, -0.001, 0.0],
    };
    let x = [0.4, 0.5, 0.6, 0.3, 0.7, 0.2, 0.5, 0.5];
    let mut hits = 0;
    for seed in 0..100 {
        let cfg = TabularExplainerConfig {
            n_samples: 5000,
            k: 3,
            seed,
            ..Default::default()
        };
        let e = explain_tabular(&model, &x, &cfg, &stats, "lin").unwrap();
        let mut got: Vec<FeatureRef> = e.features();
        got.sort();
        if got == vec![FeatureRef::Index(1), FeatureRef::Index(2), FeatureRef::Index(4)] {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn tiny_scale_on_ground_truth_collapses_signal() {
    let spec = default_partition_8();
    let data = generate_dataset(&spec, 2_000, 4).unwrap();
    let model = ground_truth_classifier(&spec).unwrap();
    let point = vec![0.75, 0.75, 0.75, 0.5, 0.5, 0.7, 0.7, 0.7];
    let cfg = TabularExplainerConfig {
        n_samples: 1000,
        k: 3,
        proximity_scale: 1e-3,
        ..Default::default()
    };
    // the black box must be constant on the cloud before the claim means anything
    let cloud = perturb_tabular(&point, &data.stats, &cfg, &mut rng_from_seed(9)).unwrap();
    let first = model.predict_proba(cloud.row(0)).unwrap();
    for row in cloud.row_iter() {
        assert_eq!(model.predict_proba(row).unwrap(), first);
    }
    let target = TabularTarget {
        model: &model,
        point,
        stats: &data.stats,
        feature_names: data.feature_names.clone(),
        config: cfg,
        target_id: "leaf5-interior".into(),
    };
    let report = run_trials(&target, 50, 12).unwrap();
    report.check_counting_identities().unwrap();
    assert!(report.features.iter().all(|f| f.selection_probability < 0.9));
}

#[test]
fn stability_needs_two_trials_and_matches_hand_value() {
    let e = DiceExplainer { p: 5, k: 2 };
    let one = run_trials(&e, 1, 0).unwrap();
    assert!(stability_summary(&one).is_err());
    assert!(one.supplementary.mean_pairwise_jaccard.is_none());

    let sel = |v: &[usize]| v.iter().map(|&j| FeatureRef::Index(j)).collect::<Vec<_>>();
    let mut three = run_trials(&e, 3, 0).unwrap();
    three.selections = vec![sel(&[0, 1]), sel(&[0, 1]), sel(&[0, 2])];
    assert!((stability_summary(&three).unwrap() - 5.0 / 9.0).abs() < 1e-15);
}
