//! Run configuration. Every key has a default; unknown keys are rejected.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use pumpfield::geometry::DEFAULT_EPSILON;
use pumpfield::scan::ScanSpec;
use pumpfield::{BathSpec, GridGeometry, InitialCondition, PumpPath, ResponseSettings};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ETA_RANGE: [f64; 2] = [0.0, 0.1];
pub const KT_RANGE: [f64; 2] = [0.0, 2.0];
pub const OMEGA_D_RANGE: [f64; 2] = [1.0, 100.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub b_x: f64,
    pub phi: f64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub output: PathBuf,
    pub grid: GridSection,
    pub bath: BathSection,
    pub solver: ResponseSettings,
    pub charge: ChargeSection,
    pub oracle: OracleSection,
    pub scan: ScanSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub b_y: [f64; 2],
    pub b_z: [f64; 2],
    pub n_y: usize,
    pub n_z: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    pub eta: f64,
    pub kt: f64,
    pub omega_d: f64,
    pub matsubara_terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub name: String,
    /// Corners in the `(b_y, b_z)` plane; the path closes on itself.
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChargeSection {
    pub samples_per_edge: usize,
    pub paths: Vec<PathSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub b_y: f64,
    pub b_z: f64,
    pub n_modes: usize,
    pub n_fock: usize,
    pub omega_max: f64,
    pub h: f64,
    /// Compared window as a fraction of the recurrence time.
    pub window_fraction: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub omega_d: Vec<f64>,
    pub b_y_max: Vec<f64>,
    pub initial_conditions: Vec<InitialCondition>,
    pub samples_per_edge: usize,
    pub target_dissipative: f64,
    pub target_coherent: f64,
    pub band: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            b_x: 0.1,
            phi: FRAC_PI_2,
            threads: 0,
            output: PathBuf::from("pumpfield-out"),
            grid: GridSection::default(),
            bath: BathSection::default(),
            solver: ResponseSettings::default(),
            charge: ChargeSection::default(),
            oracle: OracleSection::default(),
            scan: ScanSection::default(),
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            b_y: [DEFAULT_EPSILON, 0.1],
            b_z: [-1.0, 1.0],
            n_y: 100,
            n_z: 100,
        }
    }
}

impl Default for BathSection {
    fn default() -> Self {
        BathSection {
            eta: 0.01,
            kt: 0.25,
            omega_d: 10.0,
            matsubara_terms: pumpfield::bath::DEFAULT_MATSUBARA_TERMS,
        }
    }
}

impl Default for ChargeSection {
    fn default() -> Self {
        let [y0, y1] = GridSection::default().b_y;
        let rect = |name: &str, z0: f64, z1: f64| PathSpec {
            name: name.into(),
            vertices: vec![[y0, z0], [y1, z0], [y1, z1], [y0, z1]],
        };
        ChargeSection {
            samples_per_edge: 200,
            paths: vec![rect("black", -1.0, 1.0), rect("red", 0.0, 1.0)],
        }
    }
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            b_y: 0.08,
            b_z: 0.3,
            n_modes: 4,
            n_fock: 4,
            omega_max: 30.0,
            h: 0.001,
            window_fraction: 0.5,
            tolerance: 0.05,
        }
    }
}

impl Default for ScanSection {
    fn default() -> Self {
        let s = ScanSpec::default();
        ScanSection {
            omega_d: s.omega_d,
            b_y_max: s.b_y_max,
            initial_conditions: s.initial_conditions,
            samples_per_edge: s.samples_per_edge,
            target_dissipative: s.target_dissipative,
            target_coherent: s.target_coherent,
            band: s.band,
        }
    }
}

fn in_closed(name: &str, v: f64, [lo, hi]: [f64; 2]) -> Result<(), CliError> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Range(format!("{name} = {v} outside [{lo}, {hi}]")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Structural problems are config errors, bad numbers range errors.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.grid.n_y < 2 || self.grid.n_z < 2 {
            return Err(CliError::Config("grid needs at least 2 nodes per axis".into()));
        }
        if self.charge.paths.is_empty() {
            return Err(CliError::Config("charge.paths is empty".into()));
        }
        if let Some(p) = self.charge.paths.iter().find(|p| p.vertices.len() < 3) {
            return Err(CliError::Config(format!("path `{}` needs at least 3 vertices", p.name)));
        }
        if self.charge.samples_per_edge == 0 || self.scan.samples_per_edge == 0 {
            return Err(CliError::Config("samples_per_edge must be positive".into()));
        }
        let b = &self.bath;
        in_closed("bath.eta", b.eta, ETA_RANGE)?;
        if !(b.kt > KT_RANGE[0] && b.kt <= KT_RANGE[1]) {
            return Err(CliError::Range(format!("bath.kt = {} outside (0, 2]", b.kt)));
        }
        in_closed("bath.omega_d", b.omega_d, OMEGA_D_RANGE)?;
        for &w in &self.scan.omega_d {
            in_closed("scan.omega_d", w, OMEGA_D_RANGE)?;
        }
        Ok(())
    }

    pub fn bath_spec(&self) -> Result<BathSpec, CliError> {
        let b = &self.bath;
        Ok(BathSpec::new(b.eta, b.omega_d, b.kt)?.with_matsubara_terms(b.matsubara_terms))
    }

    pub fn grid_geometry(&self) -> Result<GridGeometry, CliError> {
        let g = GridGeometry {
            b_x: self.b_x,
            phi: self.phi,
            y_range: self.grid.b_y,
            z_range: self.grid.b_z,
            n_y: self.grid.n_y,
            n_z: self.grid.n_z,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn pump_path(&self, spec: &PathSpec, samples_per_edge: usize) -> Result<PumpPath, CliError> {
        let vertices = spec.vertices.iter().map(|&[y, z]| [self.b_x, y, z]).collect();
        Ok(PumpPath::new(vertices, samples_per_edge)?)
    }

    pub fn scan_spec(&self) -> ScanSpec {
        let s = &self.scan;
        ScanSpec {
            b_x: self.b_x,
            phi: self.phi,
            eta: self.bath.eta,
            kt: self.bath.kt,
            omega_d: s.omega_d.clone(),
            b_y_max: s.b_y_max.clone(),
            initial_conditions: s.initial_conditions.clone(),
            samples_per_edge: s.samples_per_edge,
            target_dissipative: s.target_dissipative,
            target_coherent: s.target_coherent,
            band: s.band,
            settings: self.solver,
        }
    }
}
