//! Self-describing TOML run reports: a `meta` table (tool, version, command,
//! seed), the full run configuration, the results and the wall time.
//! Everything except `timing` is a deterministic function of the
//! configuration.

use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub status: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<C, R> {
    pub meta: Meta,
    pub config: C,
    pub results: R,
    pub timing: Timing,
}

impl<C: Serialize, R: Serialize> Report<C, R> {
    pub fn new(command: &str, seed: u64, status: &str, config: C, results: R, wall_seconds: f64) -> Self {
        Report {
            meta: Meta {
                tool: "flagmeasure".into(),
                version: VERSION.into(),
                command: command.into(),
                seed,
                status: status.into(),
            },
            config,
            results,
            timing: Timing { wall_seconds },
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl<C: DeserializeOwned, R: DeserializeOwned> Report<C, R> {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}
