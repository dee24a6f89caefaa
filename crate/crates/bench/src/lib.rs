//! Fixtures shared by the benchmarks in `benches/`.

use limeaudit_core::blackbox::{fit_random_forest, ForestParams, RandomForestModel};
use limeaudit_core::rng::substream_seed;
use limeaudit_core::synthdata::{default_partition_8, generate_dataset, TabularDataset};

/// Training data on the default 8-feature partition.
pub fn synthetic_train(n: usize) -> TabularDataset {
    generate_dataset(&default_partition_8(), n, substream_seed(0, 0)).expect("default partition generates")
}

pub fn forest(data: &TabularDataset, n_trees: usize) -> RandomForestModel {
    let params = ForestParams {
        n_trees,
        ..ForestParams::default()
    };
    fit_random_forest(data, &params).expect("forest fits")
}

/// A regression problem for the solver: labels of `data` as the response,
/// unit weights.
pub fn lasso_problem(data: &TabularDataset) -> (Vec<f64>, Vec<f64>) {
    let y = data.y.iter().map(|&c| c as f64).collect();
    (y, vec![1.0; data.n_samples()])
}
