use std::path::PathBuf;

use bclab_core::GeomError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Exit codes: 0 pass, 2 input, 3 I/O, 4 verification failure, 5 precondition.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;
pub const EXIT_PRECONDITION: i32 = 5;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Io { .. } => EXIT_IO,
            CliError::Precondition(_) => EXIT_PRECONDITION,
            CliError::Geom(e) => match e {
                GeomError::MeanCurvatureVanishes { .. }
                | GeomError::GradientVanishes { .. }
                | GeomError::UnstableFrame { .. }
                | GeomError::NearPole { .. }
                | GeomError::Degenerate { .. }
                | GeomError::RankDeficient { .. }
                | GeomError::CurveLeftDomain { .. }
                | GeomError::InsufficientSamples { .. } => EXIT_PRECONDITION,
                _ => EXIT_INPUT,
            },
        }
    }

    pub fn kind(&self) -> String {
        match self {
            CliError::Input(_) => "input".into(),
            CliError::Io { .. } => "io".into(),
            CliError::Precondition(_) => "precondition".into(),
            CliError::Geom(e) => {
                let dbg = format!("{e:?}");
                dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("geometry").to_string()
            }
        }
    }
}

/// Machine-readable error record written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub code: i32,
    pub message: String,
}

impl From<&CliError> for ErrorRecord {
    fn from(e: &CliError) -> Self {
        Self { kind: e.kind(), code: e.exit_code(), message: e.to_string() }
    }
}
