//! Shared fixtures for the criterion benchmarks in `benches/`.

use edgeward_core::dataset::{corner_specs, generate_synthetic};
use edgeward_core::mlp::init_model;
use edgeward_core::pca::{fit_pca, project};
use edgeward_core::{ClientShard, Dataset, MlpModel, PcaModel};

/// `n` rows of `d`-dimensional blobs over `c` classes.
pub fn blobs(n: usize, d: usize, c: usize, seed: u64) -> Dataset {
    let specs = corner_specs(c, d, n.div_ceil(c), 0.1).expect("c fits on the d-cube");
    let data = generate_synthetic(&specs, seed).expect("valid specs");
    let keep: Vec<usize> = (0..n.min(data.len())).collect();
    data.select(&keep).expect("indices in range")
}

/// Reducer fitted on `data`, and a fresh network of width `h` on top.
pub fn fitted(data: &Dataset, h: usize) -> (PcaModel, MlpModel) {
    let pca = fit_pca(data, 0.95).expect("non-degenerate data");
    let model = init_model(pca.k, h, data.num_classes, 1).expect("valid shape");
    (pca, model)
}

/// `k` projected client shards dealt round-robin from `data`.
pub fn shards(data: &Dataset, pca: &PcaModel, k: usize) -> Vec<ClientShard> {
    let projected = project(pca, data).expect("matching dimension");
    (0..k)
        .map(|c| {
            let idx: Vec<usize> = (c..projected.len()).step_by(k).collect();
            ClientShard::new(c, projected.select(&idx).expect("indices in range"))
        })
        .collect()
}
