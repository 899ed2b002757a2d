use std::path::PathBuf;

use crate::garment::BoundaryType;

/// Errors produced anywhere in the registration toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid polyline: {0}")]
    InvalidPolyline(String),

    #[error("singular system: free component {component} (contains vertex {vertex}) has no constrained vertex")]
    SingularComponent { component: usize, vertex: usize },

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("mesh `{name}` is not watertight: {detail}")]
    NotWatertight { name: String, detail: String },

    #[error("invalid template: {0}")]
    InvalidTemplate(String),

    #[error("unsupported category `{category}`; supported: {supported}")]
    UnsupportedCategory { category: String, supported: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("need at least 4 visible joints, got {0}")]
    TooFewJoints(usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("no boundary field for loop type `{0}`")]
    MissingBoundaryField(BoundaryType),

    #[error("loop of type `{loop_type}` cannot be fit against a `{field_type}` field")]
    BoundaryTypeMismatch {
        loop_type: BoundaryType,
        field_type: BoundaryType,
    },

    #[error("collar correspondence covers {0} neckline vertices, need at least 3")]
    UnderdeterminedCollar(usize),

    #[error("loss became non-finite in stage `{stage}` at iteration {iteration}")]
    Diverged { stage: &'static str, iteration: usize },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.to_string(),
        }
    }
}
