//! Fixtures shared by the criterion benchmarks in `benches/`.

use modalmatrix::{generate, Dataset, GenConfig, Setting};

/// Two balanced preset clusters with full contamination.
pub fn two_cluster_fixture(n: usize, rows: usize, cols: usize, seed: u64) -> Dataset {
    let cfg = GenConfig::from_setting(Setting::TwoBalanced, rows, cols, n, 1.0, 1.0, seed)
        .expect("preset config is valid");
    generate(&cfg).expect("generation succeeds").data
}
