//! Dataset representation, CSV ingestion, splitting, embedding, distances,
//! nearest-neighbor search and LOF outlier removal.

mod dataset;
mod distance;
mod embed;
mod lof;
mod neighbors;
mod schema;

pub use dataset::{
    load_csv, read_csv, split, split_indices, write_csv, write_csv_to, Dataset, Record,
    SplitFractions, Value,
};
pub(crate) use dataset::{read_csv_extending, record_key};
pub use distance::{gower_distance, gower_distance_on, gower_term};
pub use embed::{
    embed, euclidean, squared_euclidean, ColumnScale, ColumnSource, EmbeddedMatrix, ScalingParams,
};
pub use lof::{lof_outlier_indices, lof_scores, remove_outliers_lof, DEFAULT_K_LOF};
pub use neighbors::{knn_by, nearest_neighbors, NeighborResult};
pub use schema::{Attribute, AttributeKind, Schema};
