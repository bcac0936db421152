use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pumpfield::FieldGrid;
use serde::Serialize;

use crate::error::CliError;

pub const CSV_COLUMNS: [&str; 7] = ["b_y", "b_z", "f_x", "f_y", "f_z", "g_x", "missing"];

/// `missing` column: the field failed at the node (all values NaN).
pub const MISSING_FIELD: u8 = 1;
/// `missing` column: the field is present but no curl stencil fits.
pub const MISSING_CURL: u8 = 2;

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".into()
    }
}

/// Grid rows in node order, `b_z` varying fastest.
pub fn grid_csv(grid: &FieldGrid) -> String {
    let g = &grid.geometry;
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for i in 0..g.n_y {
        for k in 0..g.n_z {
            let idx = g.index(i, k);
            let f = grid.f_samples[idx];
            let flag = if grid.missing_mask[idx] {
                MISSING_FIELD
            } else if grid.curl_missing[idx] {
                MISSING_CURL
            } else {
                0
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{flag}",
                sci(g.b_y(i)),
                sci(g.b_z(k)),
                sci(f[0]),
                sci(f[1]),
                sci(f[2]),
                sci(grid.g_x[idx]),
            );
        }
    }
    out
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(path).map_err(|source| CliError::Write {
            path: path.to_owned(),
            source,
        })?;
        Ok(OutDir(path.to_owned()))
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.0.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, &text)
    }
}
