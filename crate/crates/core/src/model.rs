//! Device description and Hamiltonian assembly.
//!
//! Frequencies are linear (ω/2π): GHz for modes, MHz for coupling strengths
//! and loss rates. The Hamiltonian matrix is H/ħ expressed in GHz, with the
//! photon-row/magnon-column entry equal to `g·e^{−iφ}`.
//!
//! A vertex rotation by `α` (the unitary `e^{iα a†a}` on mode `a`) maps an
//! edge phase as `φ ↦ φ − α_photon + α_magnon`. With this sign, rotating
//! photon `c_k` by its own coupling phase `φ_k1` removes the phase of the
//! `(c_k, m_1)` edge.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::phase;

/// RWA validity threshold on g/ω.
pub const RWA_LIMIT: f64 = 0.10;

/// Intrinsic photon linewidth used when a mode leaves it unspecified (MHz).
pub const DEFAULT_PHOTON_LINEWIDTH_MHZ: f64 = 5.0;
/// Magnon linewidth used when a mode leaves it unspecified (MHz).
pub const DEFAULT_MAGNON_LINEWIDTH_MHZ: f64 = 2.0;

const MHZ_TO_GHZ: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Photon,
    Magnon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub label: String,
    pub kind: ModeKind,
    #[serde(rename = "frequency_ghz")]
    pub frequency: f64,
    /// Full intrinsic linewidth κ/2π or γ/2π. `None` selects the default.
    #[serde(rename = "intrinsic_loss_mhz", default, skip_serializing_if = "Option::is_none")]
    pub intrinsic_loss: Option<f64>,
    /// External coupling rate to each port (photons only). `None` means
    /// "equal to the intrinsic linewidth".
    #[serde(rename = "external_loss_mhz", default, skip_serializing_if = "Option::is_none")]
    pub external_loss: Option<f64>,
}

impl ModeSpec {
    pub fn photon(label: impl Into<String>, frequency_ghz: f64) -> Self {
        Self {
            label: label.into(),
            kind: ModeKind::Photon,
            frequency: frequency_ghz,
            intrinsic_loss: None,
            external_loss: None,
        }
    }

    pub fn magnon(label: impl Into<String>, frequency_ghz: f64) -> Self {
        Self {
            label: label.into(),
            kind: ModeKind::Magnon,
            frequency: frequency_ghz,
            intrinsic_loss: None,
            external_loss: None,
        }
    }

    pub fn with_losses(mut self, intrinsic_mhz: f64, external_mhz: Option<f64>) -> Self {
        self.intrinsic_loss = Some(intrinsic_mhz);
        self.external_loss = external_mhz;
        self
    }

    pub fn is_photon(&self) -> bool {
        self.kind == ModeKind::Photon
    }

    pub fn intrinsic_loss_mhz(&self) -> f64 {
        self.intrinsic_loss.unwrap_or(match self.kind {
            ModeKind::Photon => DEFAULT_PHOTON_LINEWIDTH_MHZ,
            ModeKind::Magnon => DEFAULT_MAGNON_LINEWIDTH_MHZ,
        })
    }

    /// Per-port external rate; always zero for magnons.
    pub fn external_loss_mhz(&self) -> f64 {
        match self.kind {
            ModeKind::Photon => self.external_loss.unwrap_or_else(|| self.intrinsic_loss_mhz()),
            ModeKind::Magnon => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidMode {
            label: self.label.clone(),
            reason: reason.to_string(),
        };
        if self.label.is_empty() {
            return Err(bad("empty label"));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(bad("frequency must be positive"));
        }
        if let Some(l) = self.intrinsic_loss {
            if !(l.is_finite() && l >= 0.0) {
                return Err(bad("intrinsic loss must be non-negative"));
            }
        }
        if let Some(l) = self.external_loss {
            if self.kind == ModeKind::Magnon {
                return Err(bad("magnon modes do not couple to ports"));
            }
            if !(l.is_finite() && l >= 0.0) {
                return Err(bad("external loss must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Photon–magnon coupling `g·(e^{iφ} c m† + e^{−iφ} c† m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingEdge {
    pub photon: String,
    pub magnon: String,
    strength: f64,
    phase: f64,
}

impl CouplingEdge {
    /// Negative strengths are folded to positive ones with the phase shifted
    /// by π. The phase is wrapped to (−π, π].
    pub fn new(photon: impl Into<String>, magnon: impl Into<String>, strength_mhz: f64, phase_rad: f64) -> Self {
        let (strength, phase) = if strength_mhz < 0.0 {
            (-strength_mhz, phase_rad + PI)
        } else {
            (strength_mhz, phase_rad)
        };
        Self {
            photon: photon.into(),
            magnon: magnon.into(),
            strength,
            phase: phase::wrap(phase),
        }
    }

    /// g/2π in MHz.
    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// φ in (−π, π].
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn set_strength(&mut self, strength_mhz: f64) {
        *self = Self::new(self.photon.clone(), self.magnon.clone(), strength_mhz, self.phase);
    }

    pub fn set_phase(&mut self, phase_rad: f64) {
        self.phase = phase::wrap(phase_rad);
    }
}

/// The full device: modes, couplings and the set of magnons tuned together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemDoc", into = "SystemDoc")]
pub struct SystemModel {
    modes: Vec<ModeSpec>,
    edges: Vec<CouplingEdge>,
    sweep: Vec<String>,
    gauge_root: Option<String>,
}

impl SystemModel {
    /// Builds and validates a system. An empty `sweep` list means every
    /// magnon follows the common tuned frequency.
    pub fn new(modes: Vec<ModeSpec>, edges: Vec<CouplingEdge>, sweep: Vec<String>) -> Result<Self> {
        let sweep = if sweep.is_empty() {
            modes
                .iter()
                .filter(|m| m.kind == ModeKind::Magnon)
                .map(|m| m.label.clone())
                .collect()
        } else {
            let mut seen = HashSet::new();
            sweep.into_iter().filter(|s| seen.insert(s.clone())).collect()
        };
        let system = Self {
            modes,
            edges,
            sweep,
            gauge_root: None,
        };
        system.validate()?;
        Ok(system)
    }

    /// Vertex at which the gauge module roots its spanning tree.
    pub fn with_gauge_root(mut self, root: impl Into<String>) -> Result<Self> {
        let root = root.into();
        self.index_of(&root)?;
        self.gauge_root = Some(root);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let mut kinds = HashMap::new();
        for mode in &self.modes {
            mode.validate()?;
            if kinds.insert(mode.label.as_str(), mode.kind).is_some() {
                return Err(Error::DuplicateMode(mode.label.clone()));
            }
        }
        let mut pairs = HashSet::new();
        for edge in &self.edges {
            let bad = |reason: &str| Error::InvalidEdge {
                photon: edge.photon.clone(),
                magnon: edge.magnon.clone(),
                reason: reason.to_string(),
            };
            match kinds.get(edge.photon.as_str()) {
                Some(ModeKind::Photon) => {}
                Some(ModeKind::Magnon) => return Err(bad("first endpoint must be a photon mode")),
                None => return Err(Error::UnknownMode(edge.photon.clone())),
            }
            match kinds.get(edge.magnon.as_str()) {
                Some(ModeKind::Magnon) => {}
                Some(ModeKind::Photon) => return Err(bad("second endpoint must be a magnon mode")),
                None => return Err(Error::UnknownMode(edge.magnon.clone())),
            }
            if !(edge.strength.is_finite() && edge.phase.is_finite()) {
                return Err(bad("non-finite strength or phase"));
            }
            if !pairs.insert((edge.photon.as_str(), edge.magnon.as_str())) {
                return Err(Error::DuplicateEdge {
                    photon: edge.photon.clone(),
                    magnon: edge.magnon.clone(),
                });
            }
        }
        for label in &self.sweep {
            match kinds.get(label.as_str()) {
                Some(ModeKind::Magnon) => {}
                Some(ModeKind::Photon) => {
                    return Err(Error::InvalidMode {
                        label: label.clone(),
                        reason: "only magnons can be swept".into(),
                    })
                }
                None => return Err(Error::UnknownMode(label.clone())),
            }
        }
        if let Some(root) = &self.gauge_root {
            if !kinds.contains_key(root.as_str()) {
                return Err(Error::UnknownMode(root.clone()));
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn edges(&self) -> &[CouplingEdge] {
        &self.edges
    }

    pub fn sweep_targets(&self) -> &[String] {
        &self.sweep
    }

    pub fn gauge_root(&self) -> Option<&str> {
        self.gauge_root.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn mode(&self, label: &str) -> Result<&ModeSpec> {
        Ok(&self.modes[self.index_of(label)?])
    }

    pub fn photon_indices(&self) -> Vec<usize> {
        (0..self.modes.len()).filter(|&i| self.modes[i].is_photon()).collect()
    }

    pub fn edge(&self, photon: &str, magnon: &str) -> Option<&CouplingEdge> {
        self.edges.iter().find(|e| e.photon == photon && e.magnon == magnon)
    }

    pub fn edge_mut(&mut self, photon: &str, magnon: &str) -> Option<&mut CouplingEdge> {
        self.edges.iter_mut().find(|e| e.photon == photon && e.magnon == magnon)
    }

    /// Replaces all edges, revalidating the system.
    pub fn with_edges(&self, edges: Vec<CouplingEdge>) -> Result<Self> {
        let out = Self {
            edges,
            ..self.clone()
        };
        out.validate()?;
        Ok(out)
    }

    pub fn set_frequency(&mut self, label: &str, frequency_ghz: f64) -> Result<()> {
        let idx = self.index_of(label)?;
        let previous = self.modes[idx].frequency;
        self.modes[idx].frequency = frequency_ghz;
        if let Err(e) = self.modes[idx].validate() {
            self.modes[idx].frequency = previous;
            return Err(e);
        }
        Ok(())
    }

    /// Drops a mode together with every coupling touching it.
    pub fn without_mode(&self, label: &str) -> Result<Self> {
        self.index_of(label)?;
        let mut out = self.clone();
        out.modes.retain(|m| m.label != label);
        out.edges.retain(|e| e.photon != label && e.magnon != label);
        out.sweep.retain(|s| s != label);
        if out.gauge_root.as_deref() == Some(label) {
            out.gauge_root = None;
        }
        Ok(out)
    }

    /// Sets every coupling strength to zero, keeping phases.
    pub fn decoupled(&self) -> Self {
        let mut out = self.clone();
        for e in &mut out.edges {
            e.strength = 0.0;
        }
        out
    }
}

/// Hermitian matrix in GHz linear-frequency units.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrixGHz(ComplexMatrix);

impl HermitianMatrixGHz {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let deviation = matrix.hermitian_deviation();
        if deviation > Self::TOLERANCE {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(matrix))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl std::ops::Deref for HermitianMatrixGHz {
    type Target = ComplexMatrix;

    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// Assembles H/ħ (GHz) with every swept magnon at `omega_m`.
pub fn build_hamiltonian(system: &SystemModel, omega_m: f64) -> Result<HermitianMatrixGHz> {
    if !(omega_m.is_finite() && omega_m > 0.0) {
        return Err(Error::NonPositiveFrequency(omega_m));
    }
    let n = system.dim();
    let mut h = ComplexMatrix::zeros(n);
    for (i, mode) in system.modes.iter().enumerate() {
        let swept = mode.kind == ModeKind::Magnon && system.sweep.contains(&mode.label);
        let f = if swept { omega_m } else { mode.frequency };
        h[(i, i)] = Complex64::new(f, 0.0);
    }
    for edge in &system.edges {
        let p = system.index_of(&edge.photon)?;
        let m = system.index_of(&edge.magnon)?;
        let entry = Complex64::from_polar(edge.strength * MHZ_TO_GHZ, -edge.phase);
        h[(p, m)] = entry;
        h[(m, p)] = entry.conj();
    }
    Ok(HermitianMatrixGHz(h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwaCheck {
    pub photon: String,
    pub magnon: String,
    pub ratio: f64,
    pub ok: bool,
}

/// g/ω for each coupling, flagged against the 10 % RWA bound.
pub fn check_rwa(system: &SystemModel) -> Vec<RwaCheck> {
    system
        .edges
        .iter()
        .map(|e| {
            let omega = system.mode(&e.photon).map(|m| m.frequency).unwrap_or(f64::NAN);
            let ratio = e.strength * MHZ_TO_GHZ / omega;
            RwaCheck {
                photon: e.photon.clone(),
                magnon: e.magnon.clone(),
                ratio,
                ok: ratio < RWA_LIMIT,
            }
        })
        .collect()
}

/// Rotates mode phases. Labels missing from `phases` are left untouched.
pub fn apply_vertex_phases(system: &SystemModel, phases: &BTreeMap<String, f64>) -> Result<SystemModel> {
    for label in phases.keys() {
        system.index_of(label)?;
    }
    let alpha = |label: &str| phases.get(label).copied().unwrap_or(0.0);
    let mut out = system.clone();
    for edge in &mut out.edges {
        edge.phase = phase::wrap(edge.phase - alpha(&edge.photon) + alpha(&edge.magnon));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON document form

/// A phase given either in radians or symbolically (`"pi/2"`, `"-pi"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseValue {
    Number(f64),
    Text(String),
}

impl PhaseValue {
    pub fn radians(&self) -> Result<f64> {
        match self {
            PhaseValue::Number(v) => Ok(*v),
            PhaseValue::Text(t) => phase::parse(t),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EdgeDoc {
    photon: String,
    magnon: String,
    g_mhz: f64,
    phase_rad: PhaseValue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SystemDoc {
    modes: Vec<ModeSpec>,
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    sweep: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gauge_root: Option<String>,
}

impl TryFrom<SystemDoc> for SystemModel {
    type Error = Error;

    fn try_from(doc: SystemDoc) -> Result<Self> {
        let edges = doc
            .edges
            .into_iter()
            .map(|e| {
                let phase = e.phase_rad.radians()?;
                Ok(CouplingEdge::new(e.photon, e.magnon, e.g_mhz, phase))
            })
            .collect::<Result<Vec<_>>>()?;
        let system = SystemModel::new(doc.modes, edges, doc.sweep)?;
        match doc.gauge_root {
            Some(root) => system.with_gauge_root(root),
            None => Ok(system),
        }
    }
}

impl From<SystemModel> for SystemDoc {
    fn from(s: SystemModel) -> Self {
        Self {
            modes: s.modes,
            edges: s
                .edges
                .into_iter()
                .map(|e| EdgeDoc {
                    photon: e.photon,
                    magnon: e.magnon,
                    g_mhz: e.strength,
                    phase_rad: PhaseValue::Number(e.phase),
                })
                .collect(),
            sweep: s.sweep,
            gauge_root: s.gauge_root,
        }
    }
}
