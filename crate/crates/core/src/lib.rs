//! Modal clustering of matrix-valued observations.
//!
//! Kernel density estimation on `P x T` matrices with fixed, separable and
//! k-nearest-neighbour adaptive bandwidths, mean-shift mode seeking, a
//! DCT-based synthetic generator and partition metrics.
//!
//! ```
//! use modalmatrix::{cluster, Dataset, EstimatorConfig, MeanShiftConfig};
//!
//! let data = Dataset::from_scalars(&[0.0, 0.1, 0.2, 5.0, 5.1, 5.2]).unwrap();
//! let result = cluster(&data, &EstimatorConfig::fixed(0.3), &MeanShiftConfig::default()).unwrap();
//! assert_eq!(result.n_clusters(), 2);
//! ```

pub mod datagen;
pub mod density;
pub mod error;
pub mod evaluation;
pub mod kernels;
pub mod meanshift;
pub mod mvd;
pub mod numeric;
pub mod rng;
pub mod tensor;

pub use datagen::{generate, GenConfig, Generated, PresetName, Prototype, Setting};
pub use density::{
    amise_bandwidth, choose_k, fit, mean_knn_radius, normal_scale_gradient_bandwidth, Bandwidth,
    EstimatorConfig, FittedEstimator, KRule,
};
pub use error::{Error, Result};
pub use evaluation::{
    confusion_table, fowlkes_mallows, kmeans, select_k_silhouette, silhouette, ConfusionTable, KMeansResult,
    Partition, SelectedK,
};
pub use kernels::{KernelFamily, KernelSpec};
pub use meanshift::{
    ascend, cluster, merge_modes, ms_step, ms_step_knn_uniform, ClusterResult, MeanShiftConfig,
};
pub use mvd::{read_labels_path, read_mvd_path, write_labels, write_mvd_path, MvdFile};
pub use tensor::{
    frobenius_distance, knn_distance, knn_query, standardize, Dataset, MatrixObs, NeighborList,
    Standardization,
};
