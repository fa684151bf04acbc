//! Polariton spectra: eigensolves along a magnon-frequency sweep, anticrossing
//! gaps, crossing detection and dark-mode classification.
//!
//! Branches are labelled by sorted eigenvalue order at each grid point, never
//! by eigenvector continuation.

mod jacobi;

use std::io::Write;

use num_complex::Complex64;

pub use jacobi::{eig_hermitian, eigvals_hermitian, Eigen};

use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, ModeKind, SystemModel};

/// Gap below which two branches are considered to cross (MHz).
pub const DEFAULT_CROSSING_THRESHOLD_MHZ: f64 = 1.0;
/// Photon weight below which a branch is flagged dark.
pub const DARK_WEIGHT_THRESHOLD: f64 = 1e-3;
/// Eigenvalues closer than this (GHz) form one degenerate cluster.
pub const DEGENERACY_GHZ: f64 = 1e-9;
/// Resolution of the local crossing search (GHz).
pub const REFINE_TOLERANCE_GHZ: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub labels: Vec<String>,
    pub kinds: Vec<ModeKind>,
    pub omega_m_grid: Vec<f64>,
    /// `branches[point][branch]`, ascending at each point (GHz).
    pub branches: Vec<Vec<f64>>,
    pub eigenvectors: Vec<Eigen>,
    /// `photon_weights[point][branch]`, averaged over degenerate clusters.
    pub photon_weights: Vec<Vec<f64>>,
}

impl SweepResult {
    pub fn branch_count(&self) -> usize {
        self.labels.len()
    }

    pub fn branch(&self, b: usize) -> Result<Vec<f64>> {
        self.check_branch(b)?;
        Ok(self.branches.iter().map(|row| row[b]).collect())
    }

    fn check_branch(&self, b: usize) -> Result<()> {
        if b >= self.branch_count() {
            return Err(Error::BranchOutOfRange {
                branch: b,
                count: self.branch_count(),
            });
        }
        Ok(())
    }

    /// Weight of every branch on an arbitrary subset of modes, with the same
    /// degenerate-cluster averaging as `photon_weights`.
    pub fn weights_on(&self, labels: &[&str]) -> Result<Vec<Vec<f64>>> {
        let mask = self.mask_for(labels)?;
        Ok(self
            .eigenvectors
            .iter()
            .map(|eig| subset_weights(eig, &mask))
            .collect())
    }

    fn mask_for(&self, labels: &[&str]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.labels.len()];
        for l in labels {
            let i = self
                .labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::UnknownMode(l.to_string()))?;
            mask[i] = true;
        }
        Ok(mask)
    }

    /// Writes the sweep as CSV: `omega_m_ghz, branch_k_ghz…, pweight_k…`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.branch_count();
        let mut header = vec!["omega_m_ghz".to_string()];
        header.extend((0..n).map(|k| format!("branch_{k}_ghz")));
        header.extend((0..n).map(|k| format!("pweight_{k}")));
        writeln!(out, "{}", header.join(","))?;
        for (i, wm) in self.omega_m_grid.iter().enumerate() {
            let mut row = vec![crate::format_sig(*wm)];
            row.extend(self.branches[i].iter().map(|v| crate::format_sig(*v)));
            row.extend(self.photon_weights[i].iter().map(|v| crate::format_sig(*v)));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn subset_weights(eig: &Eigen, mask: &[bool]) -> Vec<f64> {
    let n = eig.values.len();
    let raw: Vec<f64> = (0..n)
        .map(|j| {
            (0..n)
                .filter(|&i| mask[i])
                .map(|i| eig.vectors[(i, j)].norm_sqr())
                .sum::<f64>()
                .clamp(0.0, 1.0)
        })
        .collect();
    // average within clusters of degenerate eigenvalues, whose basis is arbitrary
    let mut out = raw.clone();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.values[end] - eig.values[end - 1] < DEGENERACY_GHZ {
            end += 1;
        }
        if end - start > 1 {
            let mean = raw[start..end].iter().sum::<f64>() / (end - start) as f64;
            out[start..end].iter_mut().for_each(|w| *w = mean);
        }
        start = end;
    }
    out
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid value {v} is not finite")));
    }
    for i in 1..grid.len() {
        if !(grid[i] > grid[i - 1]) {
            return Err(Error::GridNotIncreasing(i));
        }
    }
    Ok(())
}

/// Evenly spaced grid including both end points.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        _ => (0..points)
            .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// One eigensolve per grid point of `build_hamiltonian(system, ω_m)`.
pub fn sweep(system: &SystemModel, omega_m_grid: &[f64]) -> Result<SweepResult> {
    validate_grid(omega_m_grid)?;
    let photon_mask: Vec<bool> = system.modes().iter().map(|m| m.is_photon()).collect();
    let mut branches = Vec::with_capacity(omega_m_grid.len());
    let mut eigenvectors = Vec::with_capacity(omega_m_grid.len());
    let mut photon_weights = Vec::with_capacity(omega_m_grid.len());
    for &wm in omega_m_grid {
        let h = build_hamiltonian(system, wm)?;
        let eig = eig_hermitian(h.matrix())?;
        photon_weights.push(subset_weights(&eig, &photon_mask));
        branches.push(eig.values.clone());
        eigenvectors.push(eig);
    }
    Ok(SweepResult {
        labels: system.modes().iter().map(|m| m.label.clone()).collect(),
        kinds: system.modes().iter().map(|m| m.kind).collect(),
        omega_m_grid: omega_m_grid.to_vec(),
        branches,
        eigenvectors,
        photon_weights,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub branch_a: usize,
    pub branch_b: usize,
    pub omega_m_at_min: f64,
    /// MHz, never negative.
    pub min_gap: f64,
    pub is_crossing: bool,
}

/// Minimum of |branch_a − branch_b| over the grid points inside `window`,
/// refined by a parabola through the minimum and its neighbours.
pub fn min_gap(sweep: &SweepResult, branch_a: usize, branch_b: usize, window: (f64, f64)) -> Result<GapReport> {
    min_gap_with_threshold(sweep, branch_a, branch_b, window, DEFAULT_CROSSING_THRESHOLD_MHZ)
}

pub fn min_gap_with_threshold(
    sweep: &SweepResult,
    branch_a: usize,
    branch_b: usize,
    window: (f64, f64),
    threshold_mhz: f64,
) -> Result<GapReport> {
    sweep.check_branch(branch_a)?;
    sweep.check_branch(branch_b)?;
    let (lo, hi) = window;
    let points: Vec<(f64, f64)> = sweep
        .omega_m_grid
        .iter()
        .zip(&sweep.branches)
        .filter(|(wm, _)| **wm >= lo && **wm <= hi)
        .map(|(wm, b)| (*wm, (b[branch_a] - b[branch_b]).abs()))
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let (imin, &(mut x_best, mut gap)) = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty");
    if imin > 0 && imin + 1 < points.len() {
        if let Some((x, y)) = parabola_vertex(points[imin - 1], points[imin], points[imin + 1]) {
            if y < gap {
                x_best = x;
                gap = y.max(0.0);
            }
        }
    }
    let min_gap = gap * 1e3;
    Ok(GapReport {
        branch_a,
        branch_b,
        omega_m_at_min: x_best,
        min_gap,
        is_crossing: min_gap < threshold_mhz,
    })
}

fn parabola_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> Option<(f64, f64)> {
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a > 0.0) {
        return None;
    }
    let b = d01 - a * (x0 + x1);
    let x = -b / (2.0 * a);
    if !(x >= x0 && x <= x2) {
        return None;
    }
    let y = y1 + d01 * (x - x1) + a * (x - x0) * (x - x1);
    Some((x, y))
}

/// Sweeps `window` on `points` grid points, then narrows the minimum of the
/// branch separation by golden-section search with fresh eigensolves down to
/// `REFINE_TOLERANCE_GHZ`. Exact crossings resolve to sub-kHz gaps.
pub fn refined_min_gap(
    system: &SystemModel,
    branch_a: usize,
    branch_b: usize,
    window: (f64, f64),
    points: usize,
) -> Result<GapReport> {
    let grid = linspace(window.0, window.1, points.max(3));
    let coarse = sweep(system, &grid)?;
    let report = min_gap(&coarse, branch_a, branch_b, window)?;
    let gap_at = |wm: f64| -> Result<f64> {
        let values = eigvals_hermitian(build_hamiltonian(system, wm)?.matrix())?;
        Ok((values[branch_a] - values[branch_b]).abs())
    };
    let i = grid
        .iter()
        .position(|&x| x >= report.omega_m_at_min)
        .unwrap_or(grid.len() - 1);
    let mut lo = grid[i.saturating_sub(1)];
    let mut hi = grid[(i + 1).min(grid.len() - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = gap_at(x1)?;
    let mut f2 = gap_at(x2)?;
    while hi - lo > REFINE_TOLERANCE_GHZ {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = gap_at(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = gap_at(x2)?;
        }
    }
    let (x, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    let refined_mhz = f * 1e3;
    if refined_mhz >= report.min_gap {
        return Ok(report);
    }
    Ok(GapReport {
        omega_m_at_min: x,
        min_gap: refined_mhz,
        is_crossing: refined_mhz < DEFAULT_CROSSING_THRESHOLD_MHZ,
        ..report
    })
}

/// Splitting (MHz) of the two polaritons straddling `ω_c` when the swept
/// magnons sit exactly at `ω_c`. On each side the eigenvector with the largest
/// weight on the photon is taken, so dark or far-detuned states are skipped.
pub fn resonant_gap(system: &SystemModel, photon_label: &str) -> Result<f64> {
    let idx = system.index_of(photon_label)?;
    let mode = &system.modes()[idx];
    if !mode.is_photon() {
        return Err(Error::NotAPhoton(photon_label.to_string()));
    }
    let wc = mode.frequency;
    let eig = eig_hermitian(build_hamiltonian(system, wc)?.matrix())?;
    let weight = |j: usize| eig.vectors[(idx, j)].norm_sqr();
    let pick = |side: &dyn Fn(f64) -> bool| {
        (0..eig.values.len())
            .filter(|&j| side(eig.values[j]))
            .max_by(|&a, &b| weight(a).total_cmp(&weight(b)))
    };
    let below = pick(&|v| v < wc);
    let above = pick(&|v| v > wc);
    match (below, above) {
        (Some(b), Some(a)) => Ok((eig.values[a] - eig.values[b]) * 1e3),
        _ => Ok(0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarkModeReport {
    pub branch: usize,
    /// Minimum photon weight over the grid.
    pub min_weight: f64,
    pub omega_m_at_min: f64,
    /// Contiguous ω_m intervals where the weight is below the dark threshold.
    pub dark_intervals: Vec<(f64, f64)>,
}

impl DarkModeReport {
    pub fn is_dark(&self) -> bool {
        !self.dark_intervals.is_empty()
    }
}

/// Photon weight statistics of one branch along a sweep.
pub fn dark_mode_metric(sweep: &SweepResult, branch: usize) -> Result<DarkModeReport> {
    sweep.check_branch(branch)?;
    dark_report(sweep, branch, &sweep.photon_weights)
}

/// Same as [`dark_mode_metric`] but counting only the listed photon modes.
pub fn dark_mode_metric_on(sweep: &SweepResult, branch: usize, photons: &[&str]) -> Result<DarkModeReport> {
    sweep.check_branch(branch)?;
    for p in photons {
        let i = sweep
            .labels
            .iter()
            .position(|l| l == p)
            .ok_or_else(|| Error::UnknownMode(p.to_string()))?;
        if sweep.kinds[i] != ModeKind::Photon {
            return Err(Error::NotAPhoton(p.to_string()));
        }
    }
    let weights = sweep.weights_on(photons)?;
    dark_report(sweep, branch, &weights)
}

fn dark_report(sweep: &SweepResult, branch: usize, weights: &[Vec<f64>]) -> Result<DarkModeReport> {
    let mut min_weight = f64::INFINITY;
    let mut omega_m_at_min = sweep.omega_m_grid[0];
    let mut intervals = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for (wm, w) in sweep.omega_m_grid.iter().zip(weights) {
        let w = w[branch];
        if w < min_weight {
            min_weight = w;
            omega_m_at_min = *wm;
        }
        if w < DARK_WEIGHT_THRESHOLD {
            open = Some(match open {
                Some((start, _)) => (start, *wm),
                None => (*wm, *wm),
            });
        } else if let Some(iv) = open.take() {
            intervals.push(iv);
        }
    }
    intervals.extend(open);
    Ok(DarkModeReport {
        branch,
        min_weight,
        omega_m_at_min,
        dark_intervals: intervals,
    })
}

/// Σ|⟨mode|ψ⟩|² over the photon modes for one eigenvector.
pub fn photon_weight(system: &SystemModel, vector: &[Complex64]) -> f64 {
    system.photon_indices().iter().map(|&i| vector[i].norm_sqr()).sum()
}
