//! Trajectory-gated authentication: inertial recordings become M/S/L/R
//! primitive sequences, which are aligned against enrolled reference paths
//! under adaptive thresholds before a challenge-response is answered.

pub mod alignment;
pub mod config;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod movement;
pub mod path_model;
pub mod pipeline;
pub mod protocol;
pub mod repository;
pub mod threshold;
pub mod trajectory;
pub mod turns;
pub mod vec3;

pub use alignment::{needleman_wunsch, nw_score, ScoringScheme, SimilarityScore};
pub use config::Config;
pub use error::{Error, Result};
pub use ingest::{ImuSample, SensorStream};
pub use movement::{Movement, MovementClassifier, MovementLabel};
pub use path_model::{Corpus, CorpusConfig, Leg, MarkovChain, NoiseModel};
pub use protocol::{Outcome, SessionOutcome};
pub use repository::{ReferencePath, Repository, RepositoryConfig};
pub use threshold::{ThresholdScheme, ThresholdState};
pub use trajectory::{Primitive, PrimitiveSequence, Symbol};
pub use turns::{TurnDirection, TurnEvent};
pub use vec3::Vec3;
