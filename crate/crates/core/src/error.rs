use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes across the pipeline. Variants map onto the CLI exit-code
/// categories via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("uv islands do not fit a {width}x{height} atlas")]
    AtlasOverflow { width: u32, height: u32 },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("no covered texels to inpaint from")]
    NoSourceTexels,
    #[error("scene has no assets")]
    EmptyScene,
    #[error("designer endpoint unavailable: {0}")]
    DesignerUnavailable(String),
    #[error("malformed design response: {0}")]
    MalformedDesign(String),
    #[error("generator endpoint unavailable: {0}")]
    GeneratorUnavailable(String),
    #[error("malformed generator response: {0}")]
    MalformedResponse(String),
    #[error("missing textures for assets: {0:?}")]
    IncompleteScene(Vec<String>),
    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("start or goal lies in an occupied voxel")]
    InvalidEndpoint,
    #[error("no path found after {iterations} iterations")]
    NoPathFound { iterations: usize },
    #[error("navigation plan has no usable path")]
    InvalidPlan,
    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("feature extractor mismatch: {0}")]
    ExtractorMismatch(String),
    #[error("critic endpoint unavailable: {0}")]
    CriticUnavailable(String),
    #[error("depth frame has no foreground texels")]
    DegenerateFrame,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit-code category: 2 config, 3 input, 4 endpoint, 5 internal.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Config { .. } => 2,
            Parse(_) | Shape(_) | DegenerateGeometry(_) | EmptyInput(_) | EmptyScene
            | IncompleteScene(_) | InvalidEndpoint | InvalidPlan | InsufficientSamples { .. }
            | ExtractorMismatch(_) | DegenerateFrame | NoSourceTexels => 3,
            DesignerUnavailable(_) | GeneratorUnavailable(_) | MalformedDesign(_)
            | MalformedResponse(_) | CriticUnavailable(_) => 4,
            _ => 5,
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { key: key.into(), reason: reason.into() }
    }
}
