//! Peak-position least squares.
//!
//! Each record is scored against the nearest eigenfrequency at its `ω_m`:
//! `Σ min_b ((ω_peak − ω_b(ω_m)) / σ)²`. Continuous parameters are fitted by
//! Nelder–Mead once per discrete loop-phase hypothesis; the hypothesis with
//! the lowest residual wins.

pub mod simplex;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format_sig;
use crate::gauge;
use crate::model::{build_hamiltonian, PhaseValue, SystemModel};
use crate::phase;
use crate::spectrum::{eig_hermitian, eigvals_hermitian, photon_weight};

/// Frequency uncertainty used when a record gives none, GHz.
pub const DEFAULT_SIGMA_GHZ: f64 = 2.5e-3;
/// Second-best over best residual below this ratio flags the choice ambiguous.
pub const AMBIGUITY_RATIO: f64 = 1.05;
/// Per-record residual floor used in the ambiguity ratio.
const RESIDUAL_FLOOR: f64 = 1e-6;
const MAX_RESTARTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    pub omega_m_ghz: f64,
    pub omega_peak_ghz: f64,
    #[serde(default = "default_sigma", deserialize_with = "sigma_or_default")]
    pub sigma_ghz: f64,
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA_GHZ
}

fn sigma_or_default<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(DEFAULT_SIGMA_GHZ))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakDataset {
    pub records: Vec<PeakRecord>,
}

impl PeakDataset {
    pub fn new(records: Vec<PeakRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if !(r.omega_m_ghz.is_finite() && r.omega_peak_ghz.is_finite()) {
                return Err(Error::InvalidParameter(format!("peak record {i} is not finite")));
            }
            if !(r.sigma_ghz.is_finite() && r.sigma_ghz > 0.0) {
                return Err(Error::InvalidParameter(format!("peak record {i}: sigma must be positive")));
            }
            if r.omega_m_ghz <= 0.0 {
                return Err(Error::NonPositiveFrequency(r.omega_m_ghz));
            }
        }
        Ok(Self { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Columns `omega_m_ghz,omega_peak_ghz[,sigma_ghz]`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let records = reader.deserialize().collect::<std::result::Result<Vec<PeakRecord>, _>>()?;
        Self::new(records)
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["omega_m_ghz", "omega_peak_ghz", "sigma_ghz"])?;
        for r in &self.records {
            w.write_record([format_sig(r.omega_m_ghz), format_sig(r.omega_peak_ghz), format_sig(r.sigma_ghz)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// What a free parameter controls. Listing several targets ties them to one
/// value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// Mode frequencies, GHz.
    Frequency { modes: Vec<String> },
    /// Coupling strengths, MHz, as `(photon, magnon)` pairs.
    Coupling { edges: Vec<(String, String)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeParameter {
    pub name: String,
    #[serde(flatten)]
    pub target: Target,
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub parameters: Vec<FreeParameter>,
    /// Each entry assigns one phase per independent loop, in the order the
    /// gauge reduction reports them. Empty keeps the template's phases.
    #[serde(default)]
    pub theta_hypotheses: Vec<Vec<PhaseValue>>,
    /// Treat loop phases as continuous parameters, started from each
    /// hypothesis.
    #[serde(default)]
    pub continuous_theta: bool,
}

impl FitSpec {
    pub fn validate(&self, system: &SystemModel) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidFitSpec(m));
        let mut names = std::collections::HashSet::new();
        for p in &self.parameters {
            if !names.insert(p.name.as_str()) {
                return bad(format!("duplicate parameter `{}`", p.name));
            }
            if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
                return bad(format!("parameter `{}` needs finite bounds with lower < upper", p.name));
            }
            if let Some(v) = p.initial {
                if !(p.lower..=p.upper).contains(&v) {
                    return bad(format!("initial value of `{}` is outside its bounds", p.name));
                }
            }
            match &p.target {
                Target::Frequency { modes } => {
                    if modes.is_empty() {
                        return bad(format!("parameter `{}` has no target", p.name));
                    }
                    if p.lower <= 0.0 {
                        return bad(format!("frequency parameter `{}` must stay positive", p.name));
                    }
                    for m in modes {
                        system.index_of(m)?;
                        if system.sweep_targets().contains(m) {
                            return bad(format!("`{m}` is swept; its frequency is not a parameter"));
                        }
                    }
                }
                Target::Coupling { edges } => {
                    if edges.is_empty() {
                        return bad(format!("parameter `{}` has no target", p.name));
                    }
                    for (c, m) in edges {
                        if system.edge(c, m).is_none() {
                            return bad(format!("no coupling {c}-{m}"));
                        }
                    }
                }
            }
        }
        let loops = gauge::reduce(system)?.physical_phases.len();
        for h in &self.theta_hypotheses {
            if h.len() != loops {
                return bad(format!("hypothesis has {} phases, system has {loops} loops", h.len()));
            }
            for v in h {
                v.radians()?;
            }
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.parameters.iter().map(|p| p.name.clone()).collect()
    }

    /// Configured initial values, or the centre of each box.
    pub fn initial_values(&self) -> Vec<f64> {
        self.parameters
            .iter()
            .map(|p| p.initial.unwrap_or(0.5 * (p.lower + p.upper)))
            .collect()
    }

    fn hypotheses(&self) -> Result<Vec<Vec<f64>>> {
        self.theta_hypotheses
            .iter()
            .map(|h| h.iter().map(PhaseValue::radians).collect())
            .collect()
    }
}

/// Template in reduced gauge plus its chord edges, so that loop phases can
/// be set directly.
struct Template {
    reduced: SystemModel,
    chords: Vec<(String, String)>,
    thetas: Vec<f64>,
}

impl Template {
    fn new(system: &SystemModel) -> Result<Self> {
        let r = gauge::reduce(system)?;
        Ok(Self {
            reduced: gauge::reduced_system(system)?,
            chords: r.physical_phases.iter().map(|p| p.chord.clone()).collect(),
            thetas: r.thetas(),
        })
    }

    fn instantiate(&self, spec: &FitSpec, params: &[f64], thetas: &[f64]) -> Result<SystemModel> {
        let mut s = self.reduced.clone();
        if !thetas.is_empty() {
            if thetas.len() != self.chords.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} loop phases given, system has {} loops",
                    thetas.len(),
                    self.chords.len()
                )));
            }
            for ((c, m), t) in self.chords.iter().zip(thetas) {
                s.edge_mut(c, m).expect("chord exists").set_phase(*t);
            }
        }
        if params.len() != spec.parameters.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.parameters.len(),
                got: params.len(),
            });
        }
        for (p, v) in spec.parameters.iter().zip(params) {
            match &p.target {
                Target::Frequency { modes } => {
                    for m in modes {
                        s.set_frequency(m, *v)?;
                    }
                }
                Target::Coupling { edges } => {
                    for (c, m) in edges {
                        s.edge_mut(c, m)
                            .ok_or_else(|| Error::InvalidFitSpec(format!("no coupling {c}-{m}")))?
                            .set_strength(*v);
                    }
                }
            }
        }
        Ok(s)
    }
}

/// Nearest-branch residual of a concrete system against the data.
pub fn spectrum_residual(system: &SystemModel, data: &PeakDataset) -> Result<f64> {
    // one eigensolve per distinct ω_m
    let mut groups: BTreeMap<u64, Vec<&PeakRecord>> = BTreeMap::new();
    for r in &data.records {
        groups.entry(r.omega_m_ghz.to_bits()).or_default().push(r);
    }
    let mut total = 0.0;
    for (bits, records) in groups {
        let h = build_hamiltonian(system, f64::from_bits(bits))?;
        let branches = eigvals_hermitian(&h)?;
        for r in records {
            let best = branches
                .iter()
                .map(|b| ((r.omega_peak_ghz - b) / r.sigma_ghz).powi(2))
                .fold(f64::INFINITY, f64::min);
            total += best;
        }
    }
    Ok(total)
}

/// Residual of the template with `params` applied and loop phases set to
/// `thetas` (empty keeps the template's own loop phases).
pub fn residual(system: &SystemModel, spec: &FitSpec, params: &[f64], thetas: &[f64], data: &PeakDataset) -> Result<f64> {
    let t = Template::new(system)?;
    spectrum_residual(&t.instantiate(spec, params, thetas)?, data)
}

/// The template with `params` and `thetas` applied, in reduced gauge.
pub fn apply(system: &SystemModel, spec: &FitSpec, params: &[f64], thetas: &[f64]) -> Result<SystemModel> {
    Template::new(system)?.instantiate(spec, params, thetas)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisFit {
    pub thetas_rad: Vec<f64>,
    pub values: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub hypotheses: Vec<HypothesisFit>,
    /// Index into `hypotheses`.
    pub best: usize,
    /// Floored second-best over best residual; infinite with one hypothesis.
    pub residual_ratio: f64,
    pub ambiguous: bool,
    pub system: SystemModel,
}

impl FitResult {
    pub fn best(&self) -> &HypothesisFit {
        &self.hypotheses[self.best]
    }

    pub fn parameters(&self) -> BTreeMap<String, f64> {
        self.names.iter().cloned().zip(self.best().values.iter().copied()).collect()
    }

    pub fn converged(&self) -> bool {
        self.best().converged
    }
}

/// Fits `spec`'s free parameters of `system` to `data`, once per loop-phase
/// hypothesis. Deterministic for identical inputs.
pub fn fit(system: &SystemModel, spec: &FitSpec, data: &PeakDataset, initial: &[f64]) -> Result<FitResult> {
    spec.validate(system)?;
    if data.is_empty() {
        return Err(Error::InvalidFitSpec("no peak records".into()));
    }
    if initial.len() != spec.parameters.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.parameters.len(),
            got: initial.len(),
        });
    }
    for (p, v) in spec.parameters.iter().zip(initial) {
        if !(p.lower..=p.upper).contains(v) {
            return Err(Error::InvalidFitSpec(format!("initial value of `{}` is outside its bounds", p.name)));
        }
    }
    let template = Template::new(system)?;
    let mut hypotheses = spec.hypotheses()?;
    if hypotheses.is_empty() {
        hypotheses.push(template.thetas.clone());
    }
    let loops = template.chords.len();
    let mut lower: Vec<f64> = spec.parameters.iter().map(|p| p.lower).collect();
    let mut upper: Vec<f64> = spec.parameters.iter().map(|p| p.upper).collect();
    if spec.continuous_theta {
        lower.extend(std::iter::repeat_n(-std::f64::consts::PI, loops));
        upper.extend(std::iter::repeat_n(std::f64::consts::PI, loops));
    }
    let bounds = simplex::Bounds {
        lower: &lower,
        upper: &upper,
    };
    let n = spec.parameters.len();

    let mut fits = Vec::with_capacity(hypotheses.len());
    for thetas in hypotheses {
        let objective = |x: &[f64]| -> f64 {
            let (params, t) = if spec.continuous_theta { x.split_at(n) } else { (x, thetas.as_slice()) };
            template
                .instantiate(spec, params, t)
                .and_then(|s| spectrum_residual(&s, data))
                .unwrap_or(f64::INFINITY)
        };
        let mut start = initial.to_vec();
        if spec.continuous_theta {
            start.extend(thetas.iter().map(|t| phase::wrap(*t)));
        }
        let opts = simplex::Options::default();
        let mut best = simplex::minimize(objective, &start, &bounds, &opts);
        let mut iterations = best.iterations;
        // fixed restart schedule from the current optimum
        for _ in 0..MAX_RESTARTS {
            let again = simplex::minimize(objective, &best.x, &bounds, &opts);
            iterations += again.iterations;
            let improved = again.value < best.value * (1.0 - 1e-9) - 1e-15;
            if again.value <= best.value {
                best = again;
            }
            if !improved {
                break;
            }
        }
        let (values, thetas_rad) = if spec.continuous_theta {
            (best.x[..n].to_vec(), best.x[n..].iter().map(|t| phase::wrap(*t)).collect())
        } else {
            (best.x.clone(), thetas.iter().map(|t| phase::wrap(*t)).collect())
        };
        fits.push(HypothesisFit {
            thetas_rad,
            values,
            residual: best.value,
            iterations,
            converged: best.converged,
        });
    }

    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|&a, &b| fits[a].residual.total_cmp(&fits[b].residual));
    let best = order[0];
    let floor = RESIDUAL_FLOOR * data.len() as f64;
    let residual_ratio = match order.get(1) {
        Some(&second) => (fits[second].residual + floor) / (fits[best].residual + floor),
        None => f64::INFINITY,
    };
    let system = template.instantiate(spec, &fits[best].values, &fits[best].thetas_rad)?;
    Ok(FitResult {
        names: spec.names(),
        hypotheses: fits,
        best,
        residual_ratio,
        ambiguous: residual_ratio < AMBIGUITY_RATIO,
        system,
    })
}

/// Peaks at every eigenfrequency whose photon weight reaches `min_weight`,
/// i.e. every branch that shows up in transmission.
pub fn synthetic_peaks(system: &SystemModel, omega_m_grid: &[f64], min_weight: f64, sigma_ghz: f64) -> Result<PeakDataset> {
    let mut records = Vec::new();
    for &wm in omega_m_grid {
        let h = build_hamiltonian(system, wm)?;
        let eig = eig_hermitian(&h)?;
        for (j, w) in eig.values.iter().enumerate() {
            if photon_weight(system, &eig.vector(j)) >= min_weight {
                records.push(PeakRecord {
                    omega_m_ghz: wm,
                    omega_peak_ghz: *w,
                    sigma_ghz,
                });
            }
        }
    }
    PeakDataset::new(records)
}
