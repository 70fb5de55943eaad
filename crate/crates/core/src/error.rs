use std::fmt;

/// Errors raised anywhere in the planning stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("model validation failed: {0}")]
    Model(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("instance generation failed: {0}")]
    Generation(String),
    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage used to tag errors surfaced by the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Instance,
    NaivePlanning,
    Monitor,
    PenaltyConstruction,
    Replanning,
    Rescoring,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Instance => "instance",
            Stage::NaivePlanning => "naive-planning",
            Stage::Monitor => "monitor",
            Stage::PenaltyConstruction => "penalty-construction",
            Stage::Replanning => "replanning",
            Stage::Rescoring => "rescoring",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
