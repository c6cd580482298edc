//! Error type of the command-line driver and its exit-code mapping.

use std::fmt;
use std::path::Path;

use neglabel::{MetricsError, MiningError, ScoreError, StoreError, SynthError, TheoryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Validation,
    Io,
    Internal,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Validation => 2,
            Kind::Io => 3,
            Kind::Internal => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    /// Machine-greppable error name, printed as `error-code: <name>`.
    pub name: String,
    pub message: String,
}

pub type Result<T> = std::result::Result<T, Failure>;

impl Failure {
    pub fn new(kind: Kind, name: impl Into<String>, message: impl Into<String>) -> Self {
        Failure {
            kind,
            name: name.into(),
            message: message.into(),
        }
    }

    pub fn validation(name: &str, message: impl Into<String>) -> Self {
        Failure::new(Kind::Validation, name, message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Failure::new(Kind::Io, "Io", format!("{}: {err}", path.display()))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure::new(Kind::Internal, "Internal", message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Variant name from a derived `Debug` rendering: `MTooLarge { .. }` -> `MTooLarge`.
fn variant_name(err: &impl fmt::Debug) -> String {
    let dbg = format!("{err:?}");
    dbg.split(|c: char| !c.is_alphanumeric() && c != '_')
        .next()
        .unwrap_or("Unknown")
        .to_owned()
}

fn validation_from(err: &(impl fmt::Debug + fmt::Display)) -> Failure {
    Failure::validation(&variant_name(err), err.to_string())
}

impl From<StoreError> for Failure {
    fn from(err: StoreError) -> Self {
        let kind = if err.is_io() {
            Kind::Io
        } else {
            Kind::Validation
        };
        Failure::new(kind, variant_name(&err), err.to_string())
    }
}

impl From<MiningError> for Failure {
    fn from(err: MiningError) -> Self {
        match err {
            MiningError::Store(e) => e.into(),
            e => validation_from(&e),
        }
    }
}

impl From<ScoreError> for Failure {
    fn from(err: ScoreError) -> Self {
        match err {
            ScoreError::Store(e) => e.into(),
            e => validation_from(&e),
        }
    }
}

impl From<SynthError> for Failure {
    fn from(err: SynthError) -> Self {
        match err {
            SynthError::Store(e) => e.into(),
            e => validation_from(&e),
        }
    }
}

impl From<MetricsError> for Failure {
    fn from(err: MetricsError) -> Self {
        validation_from(&err)
    }
}

impl From<TheoryError> for Failure {
    fn from(err: TheoryError) -> Self {
        match err {
            TheoryError::Metrics(e) => e.into(),
            e => validation_from(&e),
        }
    }
}
