//! Sparse correlation volumes for dense matching.
//!
//! Instead of the full `h*w x h*w` all-pairs correlation volume, every source
//! pixel keeps only its `k` strongest matches as `(displacement, value)`
//! pairs. The pipeline:
//!
//! 1. [`knn::topk_search`] finds the exact top-k targets per pixel;
//! 2. [`volume::build_sparse`] stores them relative to the source pixel;
//! 3. each refinement step [`shift::shift_volume`]s the coordinates by the
//!    latest residual flow (values are never recomputed);
//! 4. [`encoder::encode`] splats the shifted entries into a fixed-size
//!    multi-scale motion tensor;
//! 5. an [`estimator::UpdateOperator`] turns that tensor into the next
//!    residual.
//!
//! Dense volumes ([`volume::build_dense`]) exist as a brute-force oracle for
//! small inputs, and [`memory`] accounts for the size of both
//! representations.
//!
//! Coordinates: `x` is the column (right-positive), `y` the row
//! (down-positive). A displacement `d` at source pixel `p` points at target
//! pixel `p + d`.

pub mod bench;
pub mod encoder;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod io;
pub mod knn;
pub mod memory;
pub mod metrics;
pub mod pipeline;
pub mod shift;
pub mod synth;
pub mod volume;

pub use encoder::{encode, EncoderConfig, MotionTensor};
pub use error::{Result, ScvError};
pub use estimator::{estimate_flow, EstimatorConfig, SoftArgmax, UpdateOperator};
pub use grid::{Coord2, FeatureMap, FlowField, ScalarGrid};
pub use knn::{topk_search, topk_select, TopKMatches};
pub use memory::{memory_report, MemoryReport, VolumeVariant};
pub use metrics::{endpoint_error, f1_all, sequence_loss};
pub use shift::{accumulate_flow, shift_volume};
pub use volume::{
    build_dense, build_sparse, densify, sparsify_topk, CorrEntry, DenseCorrelationVolume,
    SparseCorrelationVolume,
};
