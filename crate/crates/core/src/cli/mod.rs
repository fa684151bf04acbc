//! `cavmag` command line.
//!
//! Exit codes: 0 success, 1 computation failure, 2 input or validation
//! failure.

mod commands;
pub mod config;
pub mod presets;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "cavmag", version, about = "Loop-coupled cavity magnonics: gauge phases, spectra, transmission, fits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce coupling phases to gauge-invariant loop phases (JSON).
    Gauge {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenfrequency sweep over the magnon tuning grid (CSV).
    Spectrum {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transmission map or line cut (CSV plus JSON sidecar).
    S21 {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        probe: ProbeArgs,
        /// Emit a single line cut at this magnon frequency instead of a map.
        #[arg(long, value_name = "GHZ")]
        line_cut_omega_m: Option<f64>,
        /// Added to every line-cut value, dB.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset_db: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sidecar path; defaults to `<out>.json`.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Extracted peaks of every map column, in the fit's peak CSV format.
        #[arg(long)]
        peaks: Option<PathBuf>,
        /// Record the generation time in the sidecar.
        #[arg(long)]
        timestamp: bool,
    },
    /// Couplings from cavity-eigenmode field exports (JSON edge table).
    Fieldmap {
        /// Field-map configuration: modes, sphere regions, constants.
        #[arg(long)]
        config: PathBuf,
        /// Field CSV for one mode, as LABEL=PATH. Overrides the config.
        #[arg(long = "mode-file", value_name = "LABEL=PATH")]
        mode_files: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit frequencies, couplings and loop phases to peak positions (JSON).
    Fit {
        #[command(flatten)]
        source: SourceArgs,
        /// Peak CSV: omega_m_ghz, omega_peak_ghz[, sigma_ghz].
        #[arg(long)]
        data: PathBuf,
        /// Fit specification (JSON).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct SourceArgs {
    /// Device configuration (JSON).
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in device: cavity-pi-table1, cavity-pi-fit, cavity-pi0-table2.
    #[arg(long)]
    pub preset: Option<String>,
    /// Override a mode frequency, LABEL=GHZ.
    #[arg(long = "set-frequency", value_name = "LABEL=GHZ")]
    pub set_frequency: Vec<String>,
    /// Drop a mode and its couplings.
    #[arg(long = "remove-mode", value_name = "LABEL")]
    pub remove_mode: Vec<String>,
    /// Replace the loop phases, comma separated (e.g. `pi,0`).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<String>,
    /// Spanning-tree root for the gauge reduction.
    #[arg(long)]
    pub gauge_root: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub grid_start_ghz: Option<f64>,
    #[arg(long)]
    pub grid_stop_ghz: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub omega_start_ghz: Option<f64>,
    #[arg(long)]
    pub omega_stop_ghz: Option<f64>,
    #[arg(long)]
    pub omega_points: Option<usize>,
}

/// Marks a failure while reading or validating user input.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
    }
    1
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gauge { source, out } => commands::gauge(&source, out.as_deref()),
        Command::Spectrum { source, grid, out } => commands::spectrum(&source, &grid, out.as_deref()),
        Command::S21 {
            source,
            grid,
            probe,
            line_cut_omega_m,
            offset_db,
            out,
            sidecar,
            peaks,
            timestamp,
        } => commands::s21(&commands::S21Options {
            source,
            grid,
            probe,
            line_cut_omega_m,
            offset_db,
            out,
            sidecar,
            peaks,
            timestamp,
        }),
        Command::Fieldmap { config, mode_files, out } => commands::fieldmap(&config, &mode_files, out.as_deref()),
        Command::Fit { source, data, spec, out } => commands::fit(&source, &data, &spec, out.as_deref()),
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
