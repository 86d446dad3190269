use std::io;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown class id {0}")]
    UnknownClass(u8),
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("band out of range: {0}")]
    Range(String),
    #[error("representation error: {0}")]
    Representation(String),
    #[error("empty selection: {0}")]
    EmptySelection(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("label error: {0}")]
    Label(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code: 1 usage, 2 data/format, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) | Error::Range(_) => 1,
            Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}

/// Attaches a pipeline stage name to errors.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<Error>> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e.into()),
        })
    }
}
