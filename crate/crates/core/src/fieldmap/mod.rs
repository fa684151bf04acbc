//! Couplings from cavity-eigenmode magnetic field maps.
//!
//! A mode field is a list of weighted samples. Over each YIG sphere the
//! transverse moments `Ix = Σ w·h_x`, `Iy = Σ w·h_y` fix the coupling phase
//! `arg(Ix + i·Iy)` and, normalized by the mode energy, the filling factor
//! `η = √((Ix² + Iy²) / (V_m·Σ w|h|²))`. The static field is along ẑ.

mod io;

pub use io::{read_samples, read_samples_path, write_samples};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CouplingEdge;
use crate::phase;

/// Relative floor below which the transverse moment counts as zero.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    /// Metres.
    pub position: [f64; 3],
    pub h: [Complex64; 3],
    /// Quadrature volume, m³.
    pub weight: f64,
}

impl FieldSample {
    pub fn real(position: [f64; 3], h: [f64; 3], weight: f64) -> Self {
        Self {
            position,
            h: h.map(|c| Complex64::new(c, 0.0)),
            weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(Error::InvalidSample(format!("weight must be positive, got {}", self.weight)));
        }
        if self.position.iter().any(|x| !x.is_finite()) || self.h.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidSample("non-finite position or field".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereRegion {
    /// Magnon label.
    pub label: String,
    pub center: [f64; 3],
    pub radius: f64,
}

impl SphereRegion {
    pub fn new(label: impl Into<String>, center: [f64; 3], radius: f64) -> Result<Self> {
        let r = Self {
            label: label.into(),
            center,
            radius,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidParameter(format!("sphere `{}` radius must be positive", self.label)));
        }
        Ok(())
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let d2: f64 = p.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum();
        d2 <= self.radius * self.radius
    }

    /// The same sphere described in a frame rotated by `alpha` about ẑ.
    pub fn rotate_frame_z(&self, alpha: f64) -> Self {
        Self {
            label: self.label.clone(),
            center: rotate_real(self.center, alpha),
            radius: self.radius,
        }
    }
}

/// YIG and SI constants entering the coupling strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalConstants {
    /// γ/2π, Hz/T.
    pub gyromagnetic_ratio_hz_per_t: f64,
    /// μ per unit cell, in Bohr magnetons.
    pub unit_cell_moment_mu_b: f64,
    pub lande_g: f64,
    /// m⁻³.
    pub spin_density: f64,
    pub mu0: f64,
    pub hbar: f64,
    pub bohr_magneton: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            gyromagnetic_ratio_hz_per_t: 28e9,
            unit_cell_moment_mu_b: 5.0,
            lande_g: 2.0,
            spin_density: 4.22e27,
            mu0: 1.256_637_062_12e-6,
            hbar: 1.054_571_817e-34,
            bohr_magneton: 9.274_010_078_3e-24,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gyromagnetic_ratio_hz_per_t,
            self.unit_cell_moment_mu_b,
            self.lande_g,
            self.spin_density,
            self.mu0,
            self.hbar,
            self.bohr_magneton,
        ];
        if all.iter().all(|c| c.is_finite() && *c > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("physical constants must be positive".into()))
        }
    }

    /// `g/2π` in Hz for η = 1 and ω_k = 1 rad/s.
    fn prefactor(&self) -> f64 {
        // μ/(g_L μ_B) with μ given in units of μ_B
        let moment = self.unit_cell_moment_mu_b / self.lande_g;
        0.5 * self.gyromagnetic_ratio_hz_per_t * (moment * self.hbar * self.mu0 * self.spin_density).sqrt()
    }
}

/// Global phase that maximizes the L2 norm of the real part.
fn reduction_phase(samples: &[FieldSample]) -> Complex64 {
    let s: Complex64 = samples
        .iter()
        .map(|p| p.h.iter().map(|c| c * c).sum::<Complex64>() * p.weight)
        .sum();
    Complex64::from_polar(1.0, -0.5 * s.arg())
}

/// Real standing-wave field: `Re(e^{−iβ}·h)` with β fixed over the whole map.
pub fn real_field(samples: &[FieldSample]) -> Vec<[f64; 3]> {
    let rot = reduction_phase(samples);
    samples.iter().map(|p| p.h.map(|c| (rot * c).re)).collect()
}

fn inside<'a>(samples: &'a [FieldSample], region: &'a SphereRegion) -> impl Iterator<Item = usize> + 'a {
    samples.iter().enumerate().filter(|(_, p)| region.contains(p.position)).map(|(i, _)| i)
}

/// Complex transverse moments `(Σ w·h_x, Σ w·h_y)` over the sphere.
pub fn region_integrals(samples: &[FieldSample], region: &SphereRegion) -> Result<(Complex64, Complex64)> {
    let mut count = 0;
    let (mut ix, mut iy) = (Complex64::default(), Complex64::default());
    for i in inside(samples, region) {
        let p = &samples[i];
        ix += p.h[0] * p.weight;
        iy += p.h[1] * p.weight;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyRegion(region.label.clone()));
    }
    Ok((ix, iy))
}

struct Moments {
    ix: f64,
    iy: f64,
    volume: f64,
    max_h: f64,
}

fn real_moments(samples: &[FieldSample], real: &[[f64; 3]], region: &SphereRegion) -> Result<Moments> {
    let mut m = Moments {
        ix: 0.0,
        iy: 0.0,
        volume: 0.0,
        max_h: 0.0,
    };
    let mut count = 0;
    for i in inside(samples, region) {
        let w = samples[i].weight;
        let h = real[i];
        m.ix += w * h[0];
        m.iy += w * h[1];
        m.volume += w;
        m.max_h = m.max_h.max((h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt());
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyRegion(region.label.clone()));
    }
    Ok(m)
}

/// Coupling phase of the mode sampled by `samples` at `region`, in (−π, π].
pub fn coupling_phase(samples: &[FieldSample], region: &SphereRegion, mode: &str) -> Result<f64> {
    let real = real_field(samples);
    phase_from(&real_moments(samples, &real, region)?, region, mode)
}

fn phase_from(m: &Moments, region: &SphereRegion, mode: &str) -> Result<f64> {
    let transverse = m.ix.hypot(m.iy);
    if !(transverse > DEGENERACY_FLOOR * m.volume * m.max_h) {
        return Err(Error::UndefinedPhase {
            mode: mode.to_string(),
            region: region.label.clone(),
        });
    }
    Ok(phase::wrap(m.iy.atan2(m.ix)))
}

fn energy(samples: &[FieldSample], real: &[[f64; 3]]) -> f64 {
    samples
        .iter()
        .zip(real)
        .map(|(p, h)| p.weight * (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]))
        .sum()
}

/// Filling factor η of `region`; `samples` must cover the whole cavity.
pub fn filling_factor(samples: &[FieldSample], region: &SphereRegion) -> Result<f64> {
    let real = real_field(samples);
    let m = real_moments(samples, &real, region)?;
    eta_from(&m, energy(samples, &real))
}

fn eta_from(m: &Moments, energy: f64) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::ZeroEnergyMode);
    }
    Ok(((m.ix * m.ix + m.iy * m.iy) / (m.volume * energy)).sqrt().min(1.0))
}

/// `g/2π` in MHz for filling factor `eta` and mode frequency `omega_k_ghz`.
pub fn coupling_strength(eta: f64, omega_k_ghz: f64, constants: &PhysicalConstants) -> Result<f64> {
    constants.validate()?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("filling factor must lie in [0, 1], got {eta}")));
    }
    if !(omega_k_ghz.is_finite() && omega_k_ghz > 0.0) {
        return Err(Error::InvalidParameter(format!("mode frequency must be positive, got {omega_k_ghz}")));
    }
    let omega = 2.0 * std::f64::consts::PI * omega_k_ghz * 1e9;
    Ok(eta * omega.sqrt() * constants.prefactor() * 1e-6)
}

/// Inverse of [`coupling_strength`]: the η that yields `g_mhz`.
pub fn filling_factor_for(g_mhz: f64, omega_k_ghz: f64, constants: &PhysicalConstants) -> Result<f64> {
    let unit = coupling_strength(1.0, omega_k_ghz, constants)?;
    let eta = g_mhz / unit;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!(
            "{g_mhz} MHz at {omega_k_ghz} GHz needs η = {eta}, outside [0, 1]"
        )));
    }
    Ok(eta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    /// Photon label.
    pub label: String,
    pub frequency_ghz: f64,
    pub samples: Vec<FieldSample>,
}

/// One coupling per (mode, sphere), strength from η and phase from the
/// transverse moments.
pub fn coupling_table(
    modes: &[ModeField],
    regions: &[SphereRegion],
    constants: &PhysicalConstants,
) -> Result<Vec<CouplingEdge>> {
    let mut edges = Vec::with_capacity(modes.len() * regions.len());
    for mode in modes {
        for s in &mode.samples {
            s.validate()?;
        }
        let real = real_field(&mode.samples);
        let e = energy(&mode.samples, &real);
        for region in regions {
            region.validate()?;
            let m = real_moments(&mode.samples, &real, region)?;
            let eta = eta_from(&m, e)?;
            let g = coupling_strength(eta, mode.frequency_ghz, constants)?;
            let phi = phase_from(&m, region, &mode.label)?;
            edges.push(CouplingEdge::new(mode.label.clone(), region.label.clone(), g, phi));
        }
    }
    Ok(edges)
}

fn rotate_real(v: [f64; 3], alpha: f64) -> [f64; 3] {
    let (s, c) = alpha.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1], v[2]]
}

/// Expresses samples in a frame rotated by `alpha` about ẑ. Every coupling
/// phase shifts by −α.
pub fn rotate_frame_z(samples: &[FieldSample], alpha: f64) -> Vec<FieldSample> {
    let (s, c) = alpha.sin_cos();
    samples
        .iter()
        .map(|p| FieldSample {
            position: rotate_real(p.position, alpha),
            h: [c * p.h[0] + s * p.h[1], -s * p.h[0] + c * p.h[1], p.h[2]],
            weight: p.weight,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Cubic grid over [−L, L]³ with a uniform field.
    fn uniform(h: [f64; 3], n: usize, half: f64) -> Vec<FieldSample> {
        let step = 2.0 * half / n as f64;
        let w = step.powi(3);
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let p = [i, j, k].map(|q| -half + (q as f64 + 0.5) * step);
                    out.push(FieldSample::real(p, h, w));
                }
            }
        }
        out
    }

    fn sphere() -> SphereRegion {
        SphereRegion::new("m1", [0.0; 3], 0.3).unwrap()
    }

    fn volume(samples: &[FieldSample], r: &SphereRegion) -> f64 {
        samples.iter().filter(|p| r.contains(p.position)).map(|p| p.weight).sum()
    }

    #[test]
    fn uniform_moments() {
        let r = sphere();
        for (h, ex, ey) in [([1.0, 0.0, 0.0], 1.0, 0.0), ([0.0, 1.0, 0.0], 0.0, 1.0), ([-1.0, 0.0, 0.0], -1.0, 0.0)] {
            let s = uniform(h, 10, 1.0);
            let vm = volume(&s, &r);
            let (ix, iy) = region_integrals(&s, &r).unwrap();
            assert!((ix - Complex64::new(ex * vm, 0.0)).norm() < 1e-15);
            assert!((iy - Complex64::new(ey * vm, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn phase_of_axis_fields() {
        let r = sphere();
        for (h, want) in [
            ([1.0, 0.0, 0.0], 0.0),
            ([0.0, 1.0, 0.0], FRAC_PI_2),
            ([-1.0, 0.0, 0.0], PI),
            ([0.0, -1.0, 0.0], -FRAC_PI_2),
        ] {
            let got = coupling_phase(&uniform(h, 6, 1.0), &r, "c").unwrap();
            assert!((got - want).abs() < 1e-12, "{h:?}: {got}");
        }
    }

    #[test]
    fn longitudinal_field() {
        let s = uniform([0.0, 0.0, 1.0], 6, 1.0);
        assert!(matches!(coupling_phase(&s, &sphere(), "c"), Err(Error::UndefinedPhase { .. })));
        assert_eq!(filling_factor(&s, &sphere()).unwrap(), 0.0);
    }

    #[test]
    fn empty_region_and_zero_energy() {
        let s = uniform([1.0, 0.0, 0.0], 4, 1.0);
        let far = SphereRegion::new("m", [5.0, 0.0, 0.0], 0.1).unwrap();
        assert!(matches!(region_integrals(&s, &far), Err(Error::EmptyRegion(_))));
        let zero = uniform([0.0; 3], 4, 1.0);
        let r = SphereRegion::new("m", [0.0; 3], 1.0).unwrap();
        assert!(matches!(filling_factor(&zero, &r), Err(Error::ZeroEnergyMode)));
        assert!(SphereRegion::new("m", [0.0; 3], 0.0).is_err());
    }

    #[test]
    fn uniform_field_filling_factor_is_volume_ratio() {
        let s = uniform([0.6, 0.8, 0.0], 10, 1.0);
        let r = sphere();
        let eta = filling_factor(&s, &r).unwrap();
        assert!((eta * eta - volume(&s, &r) / 8.0).abs() < 1e-12);
    }

    #[test]
    fn field_confined_to_sphere_has_unit_filling() {
        let r = sphere();
        let s: Vec<_> = uniform([1.0, 0.0, 0.0], 10, 1.0)
            .into_iter()
            .map(|mut p| {
                if !r.contains(p.position) {
                    p.h = [Complex64::default(); 3];
                }
                p
            })
            .collect();
        assert!((filling_factor(&s, &r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_global_phase_is_removed() {
        let r = sphere();
        let base = uniform([0.0, -1.0, 0.2], 6, 1.0);
        let rot = Complex64::from_polar(1.0, 0.7);
        let twisted: Vec<_> = base
            .iter()
            .map(|p| FieldSample {
                h: p.h.map(|c| c * rot),
                ..*p
            })
            .collect();
        let a = filling_factor(&base, &r).unwrap();
        let b = filling_factor(&twisted, &r).unwrap();
        assert!((a - b).abs() < 1e-12);
        let pa = coupling_phase(&base, &r, "c").unwrap();
        let pb = coupling_phase(&twisted, &r, "c").unwrap();
        // the real reduction fixes the field only up to sign
        assert!(phase::approx_eq(pa, pb, 1e-12) || phase::approx_eq(pa, pb + PI, 1e-12));
    }

    #[test]
    fn coupling_strength_scaling_and_round_trip() {
        let k = PhysicalConstants::default();
        assert_eq!(coupling_strength(0.0, 4.5, &k).unwrap(), 0.0);
        let g1 = coupling_strength(0.02, 4.0, &k).unwrap();
        assert!((coupling_strength(0.04, 4.0, &k).unwrap() / g1 - 2.0).abs() < 1e-14);
        assert!((coupling_strength(0.02, 16.0, &k).unwrap() / g1 - 2.0).abs() < 1e-14);
        let eta = filling_factor_for(139.0, 4.524, &k).unwrap();
        assert!((coupling_strength(eta, 4.524, &k).unwrap() / 139.0 - 1.0).abs() < 1e-12);
        assert!(coupling_strength(1.5, 4.0, &k).is_err());
        assert!(coupling_strength(0.5, -1.0, &k).is_err());
    }

    #[test]
    fn frame_rotation_shifts_phase() {
        let s = uniform([1.0, 0.0, 0.0], 6, 1.0);
        let r = SphereRegion::new("m", [0.2, 0.1, 0.0], 0.3).unwrap();
        let alpha = 0.4;
        let rs = rotate_frame_z(&s, alpha);
        let got = coupling_phase(&rs, &r.rotate_frame_z(alpha), "c").unwrap();
        assert!(phase::approx_eq(got, -alpha, 1e-12));
    }

    #[test]
    fn table_for_single_mode_and_sphere() {
        let mode = ModeField {
            label: "c1".into(),
            frequency_ghz: 4.5,
            samples: uniform([0.0, 1.0, 0.0], 6, 1.0),
        };
        let edges = coupling_table(&[mode], &[sphere()], &PhysicalConstants::default()).unwrap();
        assert_eq!(edges.len(), 1);
        assert_eq!((edges[0].photon.as_str(), edges[0].magnon.as_str()), ("c1", "m1"));
        assert!((edges[0].phase() - FRAC_PI_2).abs() < 1e-12);
        assert!(edges[0].strength() > 0.0);
    }
}
