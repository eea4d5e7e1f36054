//! File formats: PNG images, `.bin` point clouds, the `RBGRID1` grid
//! container, dataset manifests and submissions.

pub mod container;
pub mod gt;
pub mod manifest;
pub mod png;
pub mod pointcloud;
pub mod submission;

pub use gt::{decode_dense, decode_depth, decode_gt_boxes, read_dense, read_gt_boxes, DenseData};
pub use container::{read_grid, write_grid, GridFile, GridPayload};
pub use manifest::{Manifest, Provenance, Sample};
pub use png::{decode_depth_png, decode_image, encode_depth_png, encode_image, read_image, write_image};
pub use pointcloud::{decode_pointcloud, encode_pointcloud, read_pointcloud, write_pointcloud};
pub use submission::{parse_submission, parse_submission_str, PathPolicy, Predictions, Submission, SubmissionHeader};
