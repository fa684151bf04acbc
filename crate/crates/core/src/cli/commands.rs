use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use super::config::{read_json, to_json, DeviceConfig, FieldmapConfig, GridSpec};
use super::{presets, GridArgs, InputError, ProbeArgs, SourceArgs};
use crate::calibrate::{self, FitSpec, PeakDataset, PeakRecord, DEFAULT_SIGMA_GHZ};
use crate::fieldmap::{self, ModeField};
use crate::gauge;
use crate::model::{PhaseValue, SystemModel};
use crate::spectrum;
use crate::transmission::{self, Ports};

type Result<T> = anyhow::Result<T>;

fn input_err(context: impl Into<String>) -> impl FnOnce(crate::Error) -> anyhow::Error {
    let context = context.into();
    move |e| anyhow::Error::new(e).context(InputError(context))
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

fn split_pair<'a>(text: &'a str, what: &str) -> Result<(&'a str, &'a str)> {
    text.split_once('=')
        .map(|(a, b)| (a.trim(), b.trim()))
        .ok_or_else(|| invalid(format!("{what} expects LABEL=VALUE, got `{text}`")))
}

/// Config or preset with every command-line override applied.
fn load_device(source: &SourceArgs) -> Result<DeviceConfig> {
    let mut device = match (&source.config, &source.preset) {
        (Some(path), _) => read_json::<DeviceConfig>(path).map_err(input_err(path.display().to_string()))?,
        (None, Some(name)) => presets::preset(name).map_err(input_err("--preset"))?,
        (None, None) => return Err(invalid("either --config or --preset is required")),
    };
    device.system = apply_overrides(device.system, source)?;
    Ok(device)
}

fn apply_overrides(mut system: SystemModel, source: &SourceArgs) -> Result<SystemModel> {
    for label in &source.remove_mode {
        system = system.without_mode(label).map_err(input_err("--remove-mode"))?;
    }
    for pair in &source.set_frequency {
        let (label, value) = split_pair(pair, "--set-frequency")?;
        let ghz: f64 = value
            .parse()
            .map_err(|_| invalid(format!("--set-frequency: `{value}` is not a number")))?;
        system.set_frequency(label, ghz).map_err(input_err("--set-frequency"))?;
    }
    if let Some(root) = &source.gauge_root {
        system = system.with_gauge_root(root.clone()).map_err(input_err("--gauge-root"))?;
    }
    if !source.theta.is_empty() {
        let thetas = source
            .theta
            .iter()
            .map(|t| PhaseValue::Text(t.clone()).radians())
            .collect::<crate::Result<Vec<f64>>>()
            .map_err(input_err("--theta"))?;
        system = gauge::with_physical_phases(&system, &thetas).map_err(input_err("--theta"))?;
    }
    Ok(system)
}

fn resolve_grid(
    base: Option<GridSpec>,
    start: Option<f64>,
    stop: Option<f64>,
    points: Option<usize>,
    what: &str,
) -> Result<Vec<f64>> {
    let grid = match (base, start, stop, points) {
        (Some(g), ..) => GridSpec {
            start_ghz: start.unwrap_or(g.start_ghz),
            stop_ghz: stop.unwrap_or(g.stop_ghz),
            points: points.unwrap_or(g.points),
        },
        (None, Some(a), Some(b), Some(n)) => GridSpec::new(a, b, n),
        _ => return Err(invalid(format!("no {what} grid: give it in the config or with all three grid flags"))),
    };
    let values = grid.values();
    spectrum::validate_grid(&values).map_err(input_err(format!("{what} grid")))?;
    Ok(values)
}

fn omega_m_grid(device: &DeviceConfig, grid: &GridArgs) -> Result<Vec<f64>> {
    resolve_grid(device.omega_m_grid, grid.grid_start_ghz, grid.grid_stop_ghz, grid.grid_points, "omega_m")
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

pub fn gauge(source: &SourceArgs, out: Option<&Path>) -> Result<()> {
    let device = load_device(source)?;
    let report = gauge::reduce(&device.system)?;
    write_output(out.or(device.out.as_deref()), to_json(&report)?.as_bytes())
}

pub fn spectrum(source: &SourceArgs, grid: &GridArgs, out: Option<&Path>) -> Result<()> {
    let device = load_device(source)?;
    let values = omega_m_grid(&device, grid)?;
    let sweep = spectrum::sweep(&device.system, &values)?;
    let mut buf = Vec::new();
    sweep.write_csv(&mut buf)?;
    write_output(out.or(device.out.as_deref()), &buf)
}

pub struct S21Options {
    pub source: SourceArgs,
    pub grid: GridArgs,
    pub probe: ProbeArgs,
    pub line_cut_omega_m: Option<f64>,
    pub offset_db: f64,
    pub out: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
    pub peaks: Option<PathBuf>,
    pub timestamp: bool,
}

#[derive(Serialize)]
struct Sidecar {
    #[serde(flatten)]
    metadata: transmission::MapMetadata,
    #[serde(skip_serializing_if = "Option::is_none")]
    line_cut_omega_m_ghz: Option<f64>,
    offset_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_unix_s: Option<u64>,
}

pub fn s21(opts: &S21Options) -> Result<()> {
    let device = load_device(&opts.source)?;
    let system = &device.system;
    let ports = device.ports.clone().unwrap_or_else(|| Ports::symmetric(system));
    ports.validate(system).map_err(input_err("ports"))?;
    let p = &opts.probe;
    let omega = resolve_grid(device.omega_grid, p.omega_start_ghz, p.omega_stop_ghz, p.omega_points, "omega")?;
    let out = opts.out.as_deref().or(device.out.as_deref());

    let (omega_m, body) = match opts.line_cut_omega_m {
        Some(wm) => {
            let db = transmission::line_cut(system, &ports, &omega, wm)?;
            let mut buf = Vec::new();
            transmission::write_line_cut(&omega, &db, opts.offset_db, &mut buf)?;
            (vec![wm], buf)
        }
        None => {
            let omega_m = omega_m_grid(&device, &opts.grid)?;
            let map = transmission::s21_map(system, &ports, &omega, &omega_m)?;
            if let Some(path) = &opts.peaks {
                write_peaks(&map, path)?;
            }
            let mut buf = Vec::new();
            map.write_csv(&mut buf)?;
            (omega_m, buf)
        }
    };
    write_output(out, &body)?;

    let sidecar_path = opts
        .sidecar
        .clone()
        .or_else(|| out.map(|o| PathBuf::from(format!("{}.json", o.display()))));
    if let Some(path) = sidecar_path {
        let generated_unix_s = opts.timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        let sidecar = Sidecar {
            metadata: transmission::metadata(system, &ports, &omega, &omega_m),
            line_cut_omega_m_ghz: opts.line_cut_omega_m,
            offset_db: opts.offset_db,
            generated_unix_s,
        };
        write_output(Some(&path), to_json(&sidecar)?.as_bytes())?;
    }
    Ok(())
}

fn write_peaks(map: &transmission::TransmissionMap, path: &Path) -> Result<()> {
    let mut records = Vec::new();
    for (j, wm) in map.omega_m_grid.iter().enumerate() {
        for peak in transmission::extract_peaks(map, j)? {
            records.push(PeakRecord {
                omega_m_ghz: *wm,
                omega_peak_ghz: peak.omega_ghz,
                sigma_ghz: DEFAULT_SIGMA_GHZ,
            });
        }
    }
    let mut buf = Vec::new();
    PeakDataset::new(records)?.write_csv(&mut buf)?;
    write_output(Some(path), &buf)
}

/// One row of the coupling table; loads directly as a system edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub photon: String,
    pub magnon: String,
    pub g_mhz: f64,
    pub phase_rad: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable {
    pub edges: Vec<CouplingRow>,
}

pub fn fieldmap(config_path: &Path, mode_files: &[String], out: Option<&Path>) -> Result<()> {
    let config: FieldmapConfig = read_json(config_path).map_err(input_err(config_path.display().to_string()))?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let mut files: BTreeMap<String, PathBuf> = config
        .modes
        .iter()
        .filter_map(|m| m.file.as_ref().map(|f| (m.label.clone(), base.join(f))))
        .collect();
    for pair in mode_files {
        let (label, path) = split_pair(pair, "--mode-file")?;
        if !config.modes.iter().any(|m| m.label == label) {
            return Err(invalid(format!("--mode-file: `{label}` is not a mode of the config")));
        }
        files.insert(label.to_string(), PathBuf::from(path));
    }
    let mut modes = Vec::with_capacity(config.modes.len());
    for entry in &config.modes {
        let path = files
            .get(&entry.label)
            .ok_or_else(|| invalid(format!("no field file for mode `{}`", entry.label)))?;
        let samples = fieldmap::read_samples_path(path).map_err(input_err(path.display().to_string()))?;
        modes.push(ModeField {
            label: entry.label.clone(),
            frequency_ghz: entry.frequency_ghz,
            samples,
        });
    }
    for r in &config.regions {
        r.validate().map_err(input_err(config_path.display().to_string()))?;
    }
    let edges = fieldmap::coupling_table(&modes, &config.regions, &config.constants)?;
    let unit: BTreeMap<&str, f64> = modes
        .iter()
        .map(|m| Ok((m.label.as_str(), fieldmap::coupling_strength(1.0, m.frequency_ghz, &config.constants)?)))
        .collect::<crate::Result<_>>()?;
    let table = CouplingTable {
        edges: edges
            .iter()
            .map(|e| CouplingRow {
                photon: e.photon.clone(),
                magnon: e.magnon.clone(),
                g_mhz: e.strength(),
                phase_rad: e.phase(),
                eta: e.strength() / unit[e.photon.as_str()],
            })
            .collect(),
    };
    write_output(out, to_json(&table)?.as_bytes())
}

/// Fit specification, optionally carrying its own template system.
#[derive(Debug, Deserialize)]
struct FitDocument {
    #[serde(flatten)]
    spec: FitSpec,
    #[serde(default)]
    system: Option<SystemModel>,
}

pub fn fit(source: &SourceArgs, data: &Path, spec_path: &Path, out: Option<&Path>) -> Result<()> {
    let doc: FitDocument = read_json(spec_path).map_err(input_err(spec_path.display().to_string()))?;
    let system = match (&source.config, &source.preset, doc.system) {
        (None, None, Some(s)) => apply_overrides(s, source)?,
        (None, None, None) => {
            return Err(invalid("the fit needs a template: --config, --preset or a `system` in the spec"));
        }
        _ => load_device(source)?.system,
    };
    let dataset = PeakDataset::read_path(data).map_err(input_err(data.display().to_string()))?;
    doc.spec.validate(&system).map_err(input_err(spec_path.display().to_string()))?;
    let initial = doc.spec.initial_values();
    let result = calibrate::fit(&system, &doc.spec, &dataset, &initial)?;
    if !result.converged() {
        eprintln!("warning: simplex hit its iteration cap; reporting the best point found");
    }
    if result.ambiguous {
        eprintln!(
            "warning: loop-phase hypotheses are not distinguished by the data (residual ratio {:.4})",
            result.residual_ratio
        );
    }
    write_output(out, to_json(&result)?.as_bytes()).map_err(|e| anyhow!(e))
}
