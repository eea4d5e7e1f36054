//! Corruption synthesis and robustness scoring for driving perception.
//!
//! The crate covers the whole offline pipeline: seeded camera corruptions and
//! LiDAR failures, detection / segmentation / depth metrics, file formats,
//! and the harness that groups scores by corruption into leaderboard tables.

pub mod camera;
pub mod corruption;
pub mod depth;
pub mod detection;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod lidar;
pub mod params;
pub mod rng;
pub mod seed;
pub mod track;

pub use camera::{corrupt_image, Image};
pub use corruption::{parse_corruption, CorruptionType, Modality, Severity};
pub use depth::{evaluate_depth, DepthConfig, DepthMap, DepthMetrics};
pub use detection::{evaluate_detection, DetBox, DetectionConfig, DetectionResult, GtBox, TpErrors};
pub use error::{Error, Result};
pub use grid::{ConfusionMatrix, LabelGrid};
pub use lidar::{AngularWindow, Point, PointCloud};
pub use params::{CameraParams, LidarParams, ParamsTable};
pub use track::{Metric, Track};
pub use seed::{derive_seed, DerivedSeed, SampleId};
