//! One TOML file for every tunable. Missing keys take their defaults,
//! unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alignment::ScoringScheme;
use crate::error::Error;
use crate::eval::SweepConfig;
use crate::ingest::{GravityConfig, RingBufferSpec, DEFAULT_RATE_HZ};
use crate::movement::{Feature, HmmParams, LogRegConfig, DEFAULT_FEATURES};
use crate::path_model::imu_sim::ImuSimConfig;
use crate::path_model::{CorpusConfig, NoiseModel};
use crate::protocol::GateConfig;
use crate::repository::RepositoryConfig;
use crate::turns::TurnDetectorConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub rate_hz: f64,
    pub gravity: GravityConfig,
    pub buffer: RingBufferSpec,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { rate_hz: DEFAULT_RATE_HZ, gravity: GravityConfig::default(), buffer: RingBufferSpec::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MovementConfig {
    pub features: Vec<Feature>,
    pub hmm: HmmParams,
    pub logreg: LogRegConfig,
}

impl Default for MovementConfig {
    fn default() -> Self {
        MovementConfig { features: DEFAULT_FEATURES.to_vec(), hmm: HmmParams::default(), logreg: LogRegConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub ingest: IngestConfig,
    pub turns: TurnDetectorConfig,
    pub movement: MovementConfig,
    pub scoring: ScoringScheme,
    pub repository: RepositoryConfig,
    /// Default reference path length in minutes.
    pub length_min: f64,
    pub gate: GateConfig,
    pub noise: NoiseModel,
    pub corpus: CorpusConfig,
    pub simulator: ImuSimConfig,
    pub eval: SweepConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            ingest: IngestConfig::default(),
            turns: TurnDetectorConfig::default(),
            movement: MovementConfig::default(),
            scoring: ScoringScheme::default(),
            repository: RepositoryConfig::default(),
            length_min: 2.0,
            gate: GateConfig::default(),
            noise: NoiseModel::default(),
            corpus: CorpusConfig::default(),
            simulator: ImuSimConfig::default(),
            eval: SweepConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Load `path` if given, defaults otherwise.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, Error> {
        path.map_or_else(|| Ok(Config::default()), Config::load)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.turns.validate()?;
        self.movement.hmm.validate()?;
        self.noise.validate()?;
        if !(self.ingest.rate_hz > 0.0) {
            return Err(Error::Config(format!("ingest.rate_hz must be positive, got {}", self.ingest.rate_hz)));
        }
        if !(self.length_min > 0.0) {
            return Err(Error::Config(format!("length_min must be positive, got {}", self.length_min)));
        }
        if self.movement.features.is_empty() {
            return Err(Error::Config("movement.features is empty".into()));
        }
        Ok(())
    }
}
