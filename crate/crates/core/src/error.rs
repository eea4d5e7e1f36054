use std::path::PathBuf;

use crate::corruption::CorruptionType;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown corruption `{name}`; valid tags: {valid}")]
    UnknownCorruption { name: String, valid: String },

    #[error("severity {0} out of range, expected 0..=5")]
    InvalidSeverity(i64),

    #[error("invalid sample id `{0}`: must be non-empty and contain no path separators")]
    InvalidSampleId(String),

    #[error("`{0}` is not a camera corruption")]
    NotCameraCorruption(CorruptionType),

    #[error("`{0}` is not a LiDAR failure mode")]
    NotLidarFailure(CorruptionType),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid point cloud: {0}")]
    InvalidPointCloud(String),

    #[error("drop rate {0} outside [0, 1]")]
    InvalidRate(f64),

    #[error("invalid angular window: {0}")]
    InvalidWindow(String),

    #[error("point cloud has no ring channel and ring inference was not requested")]
    RingAbsent,

    #[error("beam index {beam} out of range for {num_beams} beams")]
    BeamOutOfRange { beam: u32, num_beams: u32 },

    #[error("cannot drop {requested} beams from a {num_beams}-beam sensor")]
    InvalidBeamCount { requested: usize, num_beams: u32 },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("invalid box at index {index}: {reason}")]
    InvalidBox { index: usize, reason: String },

    #[error("predictions reference unknown classes: {0:?}")]
    UnknownClasses(Vec<String>),

    #[error("predictions reference samples absent from ground truth: {0:?}")]
    UnknownSamples(Vec<String>),

    #[error("detection score undefined: no configured class has ground-truth boxes")]
    NoGroundTruth,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: prediction {pred:?} vs ground truth {gt:?}")]
    ShapeMismatch { pred: Vec<usize>, gt: Vec<usize> },

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: u32, num_classes: usize },

    #[error("mIoU undefined: every included class is absent")]
    UndefinedMiou,

    #[error("median scaling impossible: {0}")]
    InvalidMedian(String),

    #[error("depth evaluation undefined: no image has a valid ground-truth pixel")]
    NoValidDepth,

    #[error("parameter table: {0}")]
    Params(String),

    #[error("malformed {what}: {msg}")]
    Format { what: &'static str, msg: String },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("duplicate sample id `{0}`")]
    DuplicateSample(String),

    #[error("modality mismatch for sample `{sample}`: {msg}")]
    ModalityMismatch { sample: String, msg: String },

    #[error("submission record {record}: {msg}")]
    Submission { record: usize, msg: String },

    #[error("missing prediction for sample `{0}`")]
    MissingPrediction(String),

    #[error("track mismatch: expected {expected}, found {found}")]
    TrackMismatch { expected: String, found: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            what,
            msg: msg.into(),
        }
    }

    /// Errors caused by user input rather than the environment or a bug.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Internal(_) => false,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            _ => true,
        }
    }
}
