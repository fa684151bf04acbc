use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fieldmap::{PhysicalConstants, SphereRegion};
use crate::model::SystemModel;
use crate::spectrum::linspace;
use crate::transmission::Ports;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start_ghz: f64,
    pub stop_ghz: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(start_ghz: f64, stop_ghz: f64, points: usize) -> Self {
        Self {
            start_ghz,
            stop_ghz,
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.start_ghz, self.stop_ghz, self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub system: SystemModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ports: Option<Ports>,
    /// Magnon tuning grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_m_grid: Option<GridSpec>,
    /// Probe-frequency grid for transmission.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldModeEntry {
    pub label: String,
    pub frequency_ghz: f64,
    /// Field CSV; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldmapConfig {
    pub modes: Vec<FieldModeEntry>,
    pub regions: Vec<SphereRegion>,
    #[serde(default)]
    pub constants: PhysicalConstants,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
