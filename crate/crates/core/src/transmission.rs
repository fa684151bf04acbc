//! Two-port input–output transmission.
//!
//! Both ports couple to photon modes only. With every rate converted to GHz,
//!
//! ```text
//!   S21(ω) = d₂ᵀ · [ i(H − ω) + Γ/2 ]⁻¹ · d₁
//! ```
//!
//! where `Γ` holds each mode's total linewidth (intrinsic plus every port's
//! external rate) and `d_p` holds `√κ_ext` of port `p` on photon rows.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format_sig;
use crate::linalg::ComplexMatrix;
use crate::model::{build_hamiltonian, ModeKind, SystemModel};
use crate::spectrum::validate_grid;

/// Default peak acceptance: height above the column mean, in dB.
pub const DEFAULT_PROMINENCE_FLOOR_DB: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortSpec {
    pub port: u8,
    /// Photon label → external rate κ_ext/2π in MHz.
    pub couplings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ports {
    pub input: PortSpec,
    pub output: PortSpec,
}

impl Ports {
    /// Both ports couple to every photon at that photon's external rate.
    pub fn symmetric(system: &SystemModel) -> Self {
        let couplings: BTreeMap<String, f64> = system
            .modes()
            .iter()
            .filter(|m| m.is_photon())
            .map(|m| (m.label.clone(), m.external_loss_mhz()))
            .collect();
        Self {
            input: PortSpec {
                port: 1,
                couplings: couplings.clone(),
            },
            output: PortSpec { port: 2, couplings },
        }
    }

    /// Input and output exchanged; yields S12.
    pub fn swapped(&self) -> Self {
        Self {
            input: self.output.clone(),
            output: self.input.clone(),
        }
    }

    pub fn validate(&self, system: &SystemModel) -> Result<()> {
        if self.input.port == self.output.port || ![1, 2].contains(&self.input.port) || ![1, 2].contains(&self.output.port)
        {
            return Err(Error::InvalidPort("port ids must be 1 and 2".into()));
        }
        for spec in [&self.input, &self.output] {
            for (label, rate) in &spec.couplings {
                let mode = system.mode(label)?;
                if mode.kind != ModeKind::Photon {
                    return Err(Error::InvalidPort(format!("port {} couples to magnon `{label}`", spec.port)));
                }
                if !(rate.is_finite() && *rate >= 0.0) {
                    return Err(Error::InvalidPort(format!(
                        "port {} rate for `{label}` must be finite and non-negative, got {rate}",
                        spec.port
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Precomputed loss matrix and port vectors; only `H(ω_m)` and `ω` vary.
struct Circuit {
    half_gamma: Vec<f64>,
    d_in: Vec<Complex64>,
    d_out: Vec<Complex64>,
}

impl Circuit {
    fn new(system: &SystemModel, ports: &Ports) -> Result<Self> {
        ports.validate(system)?;
        let rate = |spec: &PortSpec, label: &str| spec.couplings.get(label).copied().unwrap_or(0.0) * 1e-3;
        let mut half_gamma = Vec::with_capacity(system.dim());
        let mut d_in = Vec::with_capacity(system.dim());
        let mut d_out = Vec::with_capacity(system.dim());
        for m in system.modes() {
            let (k_in, k_out) = (rate(&ports.input, &m.label), rate(&ports.output, &m.label));
            let total = m.intrinsic_loss_mhz() * 1e-3 + k_in + k_out;
            if !(total > 0.0) {
                return Err(Error::ZeroLoss(m.label.clone()));
            }
            half_gamma.push(0.5 * total);
            d_in.push(Complex64::new(k_in.sqrt(), 0.0));
            d_out.push(Complex64::new(k_out.sqrt(), 0.0));
        }
        Ok(Self {
            half_gamma,
            d_in,
            d_out,
        })
    }

    fn s21(&self, h: &ComplexMatrix, omega: f64) -> Result<Complex64> {
        let n = h.dim();
        let i = Complex64::new(0.0, 1.0);
        let mut m = ComplexMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = i * h[(r, c)];
            }
            m[(r, r)] += Complex64::new(self.half_gamma[r], -omega);
        }
        let x = m.solve(&self.d_in)?;
        Ok(self.d_out.iter().zip(&x).map(|(a, b)| a * b).sum())
    }
}

/// Complex transmission at probe frequency `omega` (GHz) with the swept
/// magnons at `omega_m` (GHz).
pub fn s21_at(system: &SystemModel, ports: &Ports, omega: f64, omega_m: f64) -> Result<Complex64> {
    let circuit = Circuit::new(system, ports)?;
    let h = build_hamiltonian(system, omega_m)?;
    circuit.s21(&h, omega)
}

pub fn to_db(s: Complex64) -> f64 {
    20.0 * s.norm().log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionMap {
    pub omega_grid: Vec<f64>,
    pub omega_m_grid: Vec<f64>,
    /// `magnitude_db[j][i]` is 20·log10|S21| at `omega_m_grid[j]`, `omega_grid[i]`.
    pub magnitude_db: Vec<Vec<f64>>,
}

impl TransmissionMap {
    /// The line cut at fixed `omega_m_grid[index]`.
    pub fn column(&self, index: usize) -> Result<&[f64]> {
        self.magnitude_db
            .get(index)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidParameter(format!("omega_m index {index} out of range")))
    }

    /// Long form: `omega_ghz,omega_m_ghz,s21_db`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["omega_ghz", "omega_m_ghz", "s21_db"])?;
        for (wm, row) in self.omega_m_grid.iter().zip(&self.magnitude_db) {
            for (w_probe, db) in self.omega_grid.iter().zip(row) {
                w.write_record([format_sig(*w_probe), format_sig(*wm), format_sig(*db)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Two columns `omega_ghz,s21_db`, shifted by `offset_db`.
    pub fn write_line_cut<W: Write>(&self, index: usize, offset_db: f64, out: W) -> Result<()> {
        write_line_cut(&self.omega_grid, self.column(index)?, offset_db, out)
    }
}

pub fn write_line_cut<W: Write>(omega_grid: &[f64], db: &[f64], offset_db: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega_ghz", "s21_db"])?;
    for (x, y) in omega_grid.iter().zip(db) {
        w.write_record([format_sig(*x), format_sig(y + offset_db)])?;
    }
    w.flush()?;
    Ok(())
}

/// |S21| in dB on the probe grid at a single `omega_m`.
pub fn line_cut(system: &SystemModel, ports: &Ports, omega_grid: &[f64], omega_m: f64) -> Result<Vec<f64>> {
    validate_grid(omega_grid)?;
    let circuit = Circuit::new(system, ports)?;
    let h = build_hamiltonian(system, omega_m)?;
    omega_grid.iter().map(|&w| circuit.s21(&h, w).map(to_db)).collect()
}

pub fn s21_map(system: &SystemModel, ports: &Ports, omega_grid: &[f64], omega_m_grid: &[f64]) -> Result<TransmissionMap> {
    validate_grid(omega_grid)?;
    validate_grid(omega_m_grid)?;
    let circuit = Circuit::new(system, ports)?;
    let magnitude_db = omega_m_grid
        .iter()
        .map(|&wm| {
            let h = build_hamiltonian(system, wm)?;
            omega_grid.iter().map(|&w| circuit.s21(&h, w).map(to_db)).collect()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(TransmissionMap {
        omega_grid: omega_grid.to_vec(),
        omega_m_grid: omega_m_grid.to_vec(),
        magnitude_db,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega_ghz: f64,
    /// Height above the column mean, dB.
    pub prominence_db: f64,
}

pub fn extract_peaks(map: &TransmissionMap, omega_m_index: usize) -> Result<Vec<Peak>> {
    Ok(find_peaks(&map.omega_grid, map.column(omega_m_index)?, DEFAULT_PROMINENCE_FLOOR_DB))
}

/// Strict local maxima that rise more than `floor_db` above the mean, with
/// the position refined by a parabola through the three nearest samples.
pub fn find_peaks(omega: &[f64], db: &[f64], floor_db: f64) -> Vec<Peak> {
    let n = omega.len().min(db.len());
    if n < 3 {
        return Vec::new();
    }
    let mean = db[..n].iter().sum::<f64>() / n as f64;
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        let (y0, y1, y2) = (db[i - 1], db[i], db[i + 1]);
        if !(y1 > y0 && y1 >= y2) || y1 <= mean + floor_db {
            continue;
        }
        let (x0, x1, x2) = (omega[i - 1], omega[i], omega[i + 1]);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let a = (d12 - d01) / (x2 - x0);
        let (x, y) = if a < 0.0 {
            let b = d01 - a * (x0 + x1);
            let x = (-b / (2.0 * a)).clamp(x0, x2);
            (x, y1 + d01 * (x - x1) + a * (x - x0) * (x - x1))
        } else {
            (x1, y1)
        };
        peaks.push(Peak {
            omega_ghz: x,
            prominence_db: y - mean,
        });
    }
    peaks
}

/// Loss values actually used, with a flag for each that fell back to a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeLosses {
    pub intrinsic_mhz: f64,
    pub intrinsic_defaulted: bool,
    pub external_mhz: f64,
    pub external_defaulted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMetadata {
    pub losses: BTreeMap<String, ModeLosses>,
    pub ports: Ports,
    pub omega_ghz: (f64, f64, usize),
    pub omega_m_ghz: (f64, f64, usize),
    pub sweep_targets: Vec<String>,
}

pub fn metadata(system: &SystemModel, ports: &Ports, omega_grid: &[f64], omega_m_grid: &[f64]) -> MapMetadata {
    let range = |g: &[f64]| (g.first().copied().unwrap_or(0.0), g.last().copied().unwrap_or(0.0), g.len());
    let losses = system
        .modes()
        .iter()
        .map(|m| {
            (
                m.label.clone(),
                ModeLosses {
                    intrinsic_mhz: m.intrinsic_loss_mhz(),
                    intrinsic_defaulted: m.intrinsic_loss.is_none(),
                    external_mhz: m.external_loss_mhz(),
                    external_defaulted: m.external_loss.is_none(),
                },
            )
        })
        .collect();
    MapMetadata {
        losses,
        ports: ports.clone(),
        omega_ghz: range(omega_grid),
        omega_m_ghz: range(omega_m_grid),
        sweep_targets: system.sweep_targets().to_vec(),
    }
}
