use thiserror::Error;

use crate::eval::EvalError;
use crate::ingest::IngestError;
use crate::movement::MovementError;
use crate::path_model::PathModelError;
use crate::protocol::ProtocolError;
use crate::repository::RepositoryError;
use crate::threshold::ThresholdError;
use crate::trajectory::TrajectoryError;
use crate::turns::TurnError;

/// Any error the library can return.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Turn(#[from] TurnError),
    #[error(transparent)]
    Movement(#[from] MovementError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    PathModel(#[from] PathModelError),
    #[error(transparent)]
    Repository(#[from] RepositoryError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
