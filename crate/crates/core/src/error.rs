use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("{file}: non-numeric value at line {line}: {text:?}")]
    Parse {
        file: String,
        line: usize,
        text: String,
    },

    #[error("label out of range at line {line}: {value}")]
    LabelOutOfRange { line: usize, value: i64 },

    #[error("rate mismatch: {0}")]
    RateMismatch(String),

    #[error("invalid subject id {0}")]
    InvalidSubject(u32),

    #[error("duplicate subject id {0}")]
    DuplicateSubject(u32),

    #[error("class {class} has no frames")]
    EmptyClass { class: String },

    #[error("class {class} has empty {side} side")]
    EmptySplitSide { class: String, side: &'static str },

    #[error("constant signal (min == max == {0})")]
    ConstantSignal(f64),

    #[error("invalid filter design: {0}")]
    InvalidDesign(String),

    #[error("unstable section {section}: pole modulus {modulus}")]
    UnstableSection { section: usize, modulus: f64 },

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("invalid network config: {0}")]
    InvalidConfig(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("class index {index} out of range for {n_classes} classes")]
    ClassOutOfRange { index: usize, n_classes: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model format error at line {line}: {msg}")]
    ModelFormat { line: usize, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Diverged { .. } | Error::NonFinite { .. } | Error::UnstableSection { .. }
        )
    }
}
