use std::path::PathBuf;

use thiserror::Error;

/// Which electrode of a cell an event refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Electrode {
    Anode,
    Cathode,
}

impl std::fmt::Display for Electrode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Electrode::Anode => f.write_str("anode"),
            Electrode::Cathode => f.write_str("cathode"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("concentration saturated in {electrode} at node {node} ({value} mol/m3)")]
    Saturation {
        electrode: Electrode,
        node: usize,
        value: f64,
    },

    #[error("active material of {electrode} vanished (fraction {fraction})")]
    NoActiveMaterial { electrode: Electrode, fraction: f64 },

    #[error("parallel current split did not converge after {iterations} iterations (worst residual {residual:e})")]
    SplitNotConverged { iterations: usize, residual: f64 },

    #[error("constant-voltage regulation failed: {0}")]
    CvRegulation(String),

    #[error("converter power {power} W exceeds rating {rating} W")]
    RatingExceeded { power: f64, rating: f64 },

    #[error("direct-air cooling has no capability (hot side {t_hot} K, cold side {t_cold} K)")]
    NoCoolingCapability { t_hot: f64, t_cold: f64 },

    #[error("thermal timestep {dt} s exceeds stability bound {bound} s")]
    ThermalStability { dt: f64, bound: f64 },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("table `{name}`: {reason}")]
    Table { name: String, reason: String },

    #[error("checkpoint version mismatch: file has {found}, expected {expected}")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("checkpoint corrupted: {0}")]
    CheckpointCorrupt(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Saturation and voltage-limit style failures that a protocol step should
    /// treat as reaching a cutoff rather than aborting.
    pub fn is_limit_event(&self) -> bool {
        matches!(self, Error::Saturation { .. })
    }
}
