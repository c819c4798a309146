use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed image file: {0}")]
    MalformedImage(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("pattern grid {cols}x{rows} is too small, need at least 3x3")]
    GridTooSmall { cols: usize, rows: usize },
    #[error("suppression window must be odd and at least 1, got {0}")]
    InvalidWindow(usize),
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("need at least two classes, found {0}")]
    SingleClass(usize),
    #[error("class {label:?} has no images")]
    EmptyClass { label: String },
    #[error(
        "class {label:?} with {size} images cannot be split into non-empty train and test sets"
    )]
    ClassTooSmall { label: String, size: usize },
    #[error("only right-angle rotations are supported, got {0} degrees")]
    UnsupportedRotation(i64),
    #[error("length mismatch: {0} predictions vs {1} ground-truth labels")]
    LengthMismatch(usize, usize),
    #[error("malformed {kind} file: {msg}")]
    Format { kind: &'static str, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
