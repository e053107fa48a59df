//! Partition agreement metrics and the K-means / silhouette comparator.
//!
//! K-means on `P x T` matrices is K-means on their row-major flattenings,
//! since the Frobenius distance is the Euclidean distance of the flattened
//! vectors.

mod kmeans;
mod metrics;

pub use kmeans::{kmeans, select_k_silhouette, KMeansResult, SelectedK, DEFAULT_RESTARTS};
pub use metrics::{
    confusion_table, distance_matrix, fowlkes_mallows, silhouette, silhouette_from_distances, ConfusionTable,
    Partition,
};
