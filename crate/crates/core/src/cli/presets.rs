//! Built-in devices.

use std::f64::consts::FRAC_PI_2;

use super::config::{DeviceConfig, GridSpec};
use crate::error::{Error, Result};
use crate::model::{CouplingEdge, ModeSpec, SystemModel};

pub const NAMES: [&str; 3] = ["cavity-pi-table1", "cavity-pi-fit", "cavity-pi0-table2"];

pub fn preset(name: &str) -> Result<DeviceConfig> {
    match name {
        "cavity-pi-table1" => Ok(cavity_pi(4.524, 6.378, 139.0, 207.0)),
        "cavity-pi-fit" => Ok(cavity_pi(4.527, 6.19, 81.0, 120.0)),
        "cavity-pi0-table2" => Ok(cavity_pi0()),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

fn build(modes: Vec<ModeSpec>, edges: Vec<CouplingEdge>) -> SystemModel {
    SystemModel::new(modes, edges, vec![])
        .and_then(|s| s.with_gauge_root("c2"))
        .expect("preset is valid")
}

/// Two posts' worth of modes and two spheres. With these phases the single
/// loop carries θ = π.
fn cavity_pi(wc1: f64, wc2: f64, g1: f64, g2: f64) -> DeviceConfig {
    let modes = vec![
        ModeSpec::photon("c1", wc1),
        ModeSpec::photon("c2", wc2),
        ModeSpec::magnon("m1", wc1),
        ModeSpec::magnon("m2", wc1),
    ];
    let edges = vec![
        CouplingEdge::new("c1", "m1", g1, -FRAC_PI_2),
        CouplingEdge::new("c1", "m2", g1, -FRAC_PI_2),
        CouplingEdge::new("c2", "m1", g2, FRAC_PI_2),
        CouplingEdge::new("c2", "m2", g2, -FRAC_PI_2),
    ];
    DeviceConfig {
        system: build(modes, edges),
        ports: None,
        omega_m_grid: Some(GridSpec::new(4.0, 7.0, 301)),
        omega_grid: Some(GridSpec::new(4.0, 7.0, 601)),
        out: None,
    }
}

/// Three photon modes, two spheres, loop phases {π, 0}.
fn cavity_pi0() -> DeviceConfig {
    let modes = vec![
        ModeSpec::photon("c1", 6.594),
        ModeSpec::photon("c2", 7.562),
        ModeSpec::photon("c3", 8.619),
        ModeSpec::magnon("m1", 6.594),
        ModeSpec::magnon("m2", 6.594),
    ];
    let edges = vec![
        CouplingEdge::new("c1", "m1", 130.0, -FRAC_PI_2),
        CouplingEdge::new("c1", "m2", 127.0, -FRAC_PI_2),
        CouplingEdge::new("c2", "m1", 148.0, FRAC_PI_2),
        CouplingEdge::new("c2", "m2", 150.0, -FRAC_PI_2),
        CouplingEdge::new("c3", "m1", 103.0, FRAC_PI_2),
        CouplingEdge::new("c3", "m2", 104.0, -FRAC_PI_2),
    ];
    DeviceConfig {
        system: build(modes, edges),
        ports: None,
        omega_m_grid: Some(GridSpec::new(6.2, 9.0, 281)),
        omega_grid: Some(GridSpec::new(6.2, 9.0, 561)),
        out: None,
    }
}
