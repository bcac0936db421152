use clap::ValueEnum;
use pumpfield::geometry::{line_integral, line_integral_split, sweep_grid, CoherentProvider};
use pumpfield::oracle::trajectory_deviation;
use pumpfield::scan::ScanRow;
use pumpfield::{DiscreteBath, DissipativeSolver, DriveParams, FieldGrid};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{grid_csv, OutDir, CSV_COLUMNS};

/// More failed nodes than this fraction fails the run.
pub const FAILURE_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    CoherentMap,
    DissipativeMap,
    Charge,
    OracleCheck,
    Scan,
}

impl Mode {
    fn stem(self) -> &'static str {
        match self {
            Mode::CoherentMap => "coherent-map",
            Mode::DissipativeMap => "dissipative-map",
            Mode::Charge => "charge",
            Mode::OracleCheck => "oracle-check",
            Mode::Scan => "scan",
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    mode: Mode,
    version: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    result: T,
}

#[derive(Serialize)]
struct MapSummary {
    data: String,
    columns: [&'static str; 7],
    rows: usize,
    missing_nodes: usize,
    missing_curl: usize,
}

#[derive(Serialize)]
struct PathCharge {
    name: String,
    vertices: Vec<[f64; 3]>,
    samples_per_edge: usize,
    q_coherent: f64,
    q_dissipative: f64,
    q_friction: f64,
    q_geometric: f64,
    /// Dissipative charge at half the sampling, for the convergence check.
    q_dissipative_half: f64,
}

#[derive(Serialize)]
struct ChargeSummary {
    paths: Vec<PathCharge>,
}

#[derive(Serialize)]
struct OracleSummary {
    dimension: usize,
    recurrence_time: f64,
    window: f64,
    deviation: [f64; 3],
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ScanSummary {
    report: String,
    rows: Vec<ScanRow>,
}

pub fn run(mode: Mode, config: &RunConfig) -> Result<(), CliError> {
    let out = OutDir::create(&config.output)?;
    let stem = mode.stem();
    match mode {
        Mode::CoherentMap | Mode::DissipativeMap => {
            let geometry = config.grid_geometry()?;
            let grid = if mode == Mode::CoherentMap {
                sweep_grid(&geometry, &CoherentProvider)?
            } else {
                sweep_grid(&geometry, &DissipativeSolver::new(config.bath_spec()?, config.solver)?)?
            };
            let data = format!("{stem}.csv");
            out.write(&data, &grid_csv(&grid))?;
            write_sidecar(&out, mode, config, map_summary(&grid, data))?;
            check_failures(&grid)
        }
        Mode::Charge => {
            let summary = charge(config)?;
            write_sidecar(&out, mode, config, summary)?;
            Ok(())
        }
        Mode::OracleCheck => {
            let summary = oracle_check(config)?;
            let pass = summary.pass;
            let worst = summary.deviation.iter().fold(0.0f64, |a, &b| a.max(b));
            let tolerance = summary.tolerance;
            write_sidecar(&out, mode, config, summary)?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Validation(format!(
                    "EOM deviates from the exact trajectory by {worst:.3e} (tolerance {tolerance})"
                )))
            }
        }
        Mode::Scan => {
            let spec = config.scan_spec();
            let rows = spec.run()?;
            let report = format!("{stem}.md");
            out.write(&report, &spec.report(&rows))?;
            write_sidecar(&out, mode, config, ScanSummary { report, rows })?;
            Ok(())
        }
    }
}

fn write_sidecar<T: Serialize>(out: &OutDir, mode: Mode, config: &RunConfig, result: T) -> Result<(), CliError> {
    let sidecar = Sidecar {
        mode,
        version: env!("CARGO_PKG_VERSION"),
        config,
        result,
    };
    out.write_json(&format!("{}.json", mode.stem()), &sidecar)?;
    Ok(())
}

fn map_summary(grid: &FieldGrid, data: String) -> MapSummary {
    MapSummary {
        data,
        columns: CSV_COLUMNS,
        rows: grid.geometry.len(),
        missing_nodes: grid.missing_count(),
        missing_curl: grid.curl_missing.iter().filter(|&&m| m).count(),
    }
}

fn check_failures(grid: &FieldGrid) -> Result<(), CliError> {
    let (failed, total) = (grid.missing_count(), grid.geometry.len());
    if failed as f64 > FAILURE_FRACTION * total as f64 {
        Err(CliError::TooManyFailures { failed, total })
    } else {
        Ok(())
    }
}

fn charge(config: &RunConfig) -> Result<ChargeSummary, CliError> {
    let solver = DissipativeSolver::new(config.bath_spec()?, config.solver)?;
    let samples = config.charge.samples_per_edge;
    let paths = config
        .charge
        .paths
        .iter()
        .map(|spec| {
            let path = config.pump_path(spec, samples)?;
            let half = path.with_samples((samples / 2).max(1));
            let q_coherent = line_integral(&path, config.phi, &CoherentProvider)?;
            let [q, qf, qg] = line_integral_split(&path, config.phi, &solver)?;
            let q_half = line_integral(&half, config.phi, &solver)?;
            Ok(PathCharge {
                name: spec.name.clone(),
                vertices: path.vertices.clone(),
                samples_per_edge: samples,
                q_coherent,
                q_dissipative: q,
                q_friction: qf,
                q_geometric: qg,
                q_dissipative_half: q_half,
            })
        })
        .collect::<Result<_, CliError>>()?;
    Ok(ChargeSummary { paths })
}

fn oracle_check(config: &RunConfig) -> Result<OracleSummary, CliError> {
    let o = &config.oracle;
    let db = DiscreteBath::discretize(&config.bath_spec()?, o.n_modes, o.n_fock, o.omega_max)?;
    let p = DriveParams::new(config.b_x, o.b_y, o.b_z, config.phi)?;
    let deviation = trajectory_deviation(&p, &db, o.h, o.window_fraction)?;
    Ok(OracleSummary {
        dimension: db.dimension(),
        recurrence_time: db.recurrence_time(),
        window: o.window_fraction * db.recurrence_time(),
        deviation,
        tolerance: o.tolerance,
        pass: deviation.iter().all(|&d| d <= o.tolerance),
    })
}
