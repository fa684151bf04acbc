//! Phase-sensitive cavity magnonics.
//!
//! Several cavity photon modes couple to several magnon modes through
//! complex couplings `g·e^{iφ}`. This crate builds the resulting Hamiltonian,
//! reduces the coupling phases to their gauge-invariant loop phases, computes
//! dispersion spectra and microwave transmission, extracts couplings from
//! simulated field maps and fits couplings and loop phases to measured peaks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod cli;
pub mod error;
pub mod fieldmap;
pub mod gauge;
pub mod linalg;
pub mod model;
pub mod phase;
pub mod spectrum;
pub mod transmission;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use model::{build_hamiltonian, CouplingEdge, HermitianMatrixGHz, ModeKind, ModeSpec, SystemModel};

/// Formats `x` with 9 significant digits, fixed-point for moderate
/// magnitudes and scientific otherwise.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}
