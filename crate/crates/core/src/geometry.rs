//! Field maps on `(B_y, B_z)` planes, their curl, and pumped charge as a
//! line integral of `F` or a flux of `G_x`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::coherent_field;
use crate::error::{Error, Result};
use crate::response::DissipativeSolver;
use crate::sluice::DriveParams;

/// Smallest `B_y` of the default window.
pub const DEFAULT_EPSILON: f64 = 0.002;

/// Anything that yields `F(B)` at a parameter point.
pub trait FieldProvider: Sync {
    fn field(&self, p: &DriveParams) -> Result<[f64; 3]>;
}

/// Coherent ground-state field.
#[derive(Clone, Copy, Debug, Default)]
pub struct CoherentProvider;

impl FieldProvider for CoherentProvider {
    fn field(&self, p: &DriveParams) -> Result<[f64; 3]> {
        Ok(coherent_field(p, 0)?.f)
    }
}

impl FieldProvider for DissipativeSolver {
    fn field(&self, p: &DriveParams) -> Result<[f64; 3]> {
        let r = self.point(p)?;
        Ok(r.f)
    }
}

/// Field given by a closure of `B`.
pub struct Synthetic<F>(pub F);

impl<F: Fn([f64; 3]) -> [f64; 3] + Sync> Synthetic<F> {
    pub fn new(f: F) -> Self {
        Synthetic(f)
    }
}

impl<F> FieldProvider for Synthetic<F>
where
    F: Fn([f64; 3]) -> [f64; 3] + Sync,
{
    fn field(&self, p: &DriveParams) -> Result<[f64; 3]> {
        Ok((self.0)(p.b()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridGeometry {
    pub b_x: f64,
    pub phi: f64,
    pub y_range: [f64; 2],
    pub z_range: [f64; 2],
    pub n_y: usize,
    pub n_z: usize,
}

impl GridGeometry {
    /// `b_y ∈ [0.002, 0.1]`, `b_z ∈ [-1, 1]`.
    pub fn default_window(b_x: f64, phi: f64, n_y: usize, n_z: usize) -> Self {
        GridGeometry {
            b_x,
            phi,
            y_range: [DEFAULT_EPSILON, 0.1],
            z_range: [-1.0, 1.0],
            n_y,
            n_z,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_y < 3 || self.n_z < 3 {
            return Err(Error::invalid("grid", "need at least 3 nodes per axis"));
        }
        for (name, r) in [("y_range", self.y_range), ("z_range", self.z_range)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(Error::invalid(name, format!("{r:?} must be finite and increasing")));
            }
        }
        if self.y_range[0] < 0.0 {
            return Err(Error::invalid("y_range", "b_y must be non-negative"));
        }
        DriveParams::new(self.b_x, self.y_range[0], self.z_range[0], self.phi)?;
        Ok(())
    }

    pub fn dy(&self) -> f64 {
        (self.y_range[1] - self.y_range[0]) / (self.n_y - 1) as f64
    }

    pub fn dz(&self) -> f64 {
        (self.z_range[1] - self.z_range[0]) / (self.n_z - 1) as f64
    }

    pub fn b_y(&self, i: usize) -> f64 {
        if i == self.n_y - 1 {
            self.y_range[1]
        } else {
            self.y_range[0] + i as f64 * self.dy()
        }
    }

    pub fn b_z(&self, k: usize) -> f64 {
        if k == self.n_z - 1 {
            self.z_range[1]
        } else {
            self.z_range[0] + k as f64 * self.dz()
        }
    }

    pub fn len(&self) -> usize {
        self.n_y * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes are stored with `b_y` varying fastest.
    pub fn index(&self, i: usize, k: usize) -> usize {
        k * self.n_y + i
    }

    pub fn node(&self, idx: usize) -> (usize, usize) {
        (idx % self.n_y, idx / self.n_y)
    }

    pub fn params(&self, idx: usize) -> DriveParams {
        let (i, k) = self.node(idx);
        DriveParams {
            b_x: self.b_x,
            b_y: self.b_y(i),
            b_z: self.b_z(k),
            phi: self.phi,
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, k) = self.node(idx);
        i == 0 || k == 0 || i == self.n_y - 1 || k == self.n_z - 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub geometry: GridGeometry,
    pub f_samples: Vec<[f64; 3]>,
    /// `NaN` where undefined.
    pub g_x: Vec<f64>,
    /// Degenerate or failed evaluation.
    pub missing_mask: Vec<bool>,
    /// Curl unavailable because too few valid neighbours.
    pub curl_missing: Vec<bool>,
}

impl FieldGrid {
    pub fn missing_count(&self) -> usize {
        self.missing_mask.iter().filter(|m| **m).count()
    }

    /// `max |G_x(b_z) - G_x(-b_z)|` over mirrored node pairs; the `b_z`
    /// range must be symmetric.
    pub fn bz_asymmetry(&self) -> Result<f64> {
        let g = &self.geometry;
        if (g.z_range[0] + g.z_range[1]).abs() > 1e-12 * g.z_range[1].abs().max(1.0) {
            return Err(Error::invalid("z_range", "asymmetry needs a range symmetric about 0"));
        }
        let mut worst = 0.0f64;
        for k in 0..g.n_z / 2 {
            for i in 0..g.n_y {
                let a = self.g_x[g.index(i, k)];
                let b = self.g_x[g.index(i, g.n_z - 1 - k)];
                if a.is_finite() && b.is_finite() {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        Ok(worst)
    }

    /// Field at `(b_y, b_z)` by bilinear interpolation.
    pub fn interpolate(&self, b_y: f64, b_z: f64) -> Result<[f64; 3]> {
        let g = &self.geometry;
        let outside = || Error::OutsideGrid { b_y, b_z };
        let locate = |x: f64, r: [f64; 2], n: usize, d: f64| -> Option<(usize, f64)> {
            let tol = 1e-12 * (r[1] - r[0]);
            if x < r[0] - tol || x > r[1] + tol {
                return None;
            }
            let t = ((x - r[0]) / d).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n - 2);
            Some((i, t - i as f64))
        };
        let (i, ty) = locate(b_y, g.y_range, g.n_y, g.dy()).ok_or_else(outside)?;
        let (k, tz) = locate(b_z, g.z_range, g.n_z, g.dz()).ok_or_else(outside)?;
        let corners = [
            (g.index(i, k), (1.0 - ty) * (1.0 - tz)),
            (g.index(i + 1, k), ty * (1.0 - tz)),
            (g.index(i, k + 1), (1.0 - ty) * tz),
            (g.index(i + 1, k + 1), ty * tz),
        ];
        let missing = corners.iter().filter(|(idx, _)| self.missing_mask[*idx]).count();
        if missing > 0 {
            return Err(Error::MissingNodes { count: missing });
        }
        let mut out = [0.0; 3];
        for (idx, w) in corners {
            for c in 0..3 {
                out[c] += w * self.f_samples[idx][c];
            }
        }
        Ok(out)
    }
}

/// Grid-backed field: `b_x` and `φ` are those of the grid.
impl FieldProvider for FieldGrid {
    fn field(&self, p: &DriveParams) -> Result<[f64; 3]> {
        self.interpolate(p.b_y, p.b_z)
    }
}

/// Evaluates `provider` at every node. Failures are recorded in the mask,
/// never propagated; output does not depend on the thread schedule.
pub fn sweep_grid<P: FieldProvider + ?Sized>(geometry: &GridGeometry, provider: &P) -> Result<FieldGrid> {
    geometry.validate()?;
    let results: Vec<Option<[f64; 3]>> = (0..geometry.len())
        .into_par_iter()
        .map(|idx| {
            provider
                .field(&geometry.params(idx))
                .ok()
                .filter(|f| f.iter().all(|x| x.is_finite()))
        })
        .collect();
    let missing_mask: Vec<bool> = results.iter().map(Option::is_none).collect();
    let f_samples = results
        .into_iter()
        .map(|r| r.unwrap_or([f64::NAN; 3]))
        .collect();
    let mut grid = FieldGrid {
        geometry: *geometry,
        f_samples,
        g_x: Vec::new(),
        missing_mask,
        curl_missing: Vec::new(),
    };
    let (g, m) = curl_x(&grid);
    grid.g_x = g;
    grid.curl_missing = m;
    Ok(grid)
}

/// First-derivative weights at 0 for nodes at the given offsets
/// (Fornberg's recursion).
pub fn derivative_weights(offsets: &[f64]) -> Vec<f64> {
    let n = offsets.len();
    // c[j][k]: weight of node j for derivative order k
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                c[i][1] = c1 * (c[i - 1][0] - offsets[i - 1] * c[i - 1][1]) / c2;
                c[i][0] = -c1 * offsets[i - 1] * c[i - 1][0] / c2;
            }
            c[j][1] = (offsets[i] * c[j][1] - c[j][0]) / c3;
            c[j][0] = offsets[i] * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// Stencil width used away from the grid boundary.
const STENCIL: usize = 7;

/// Derivative of `values` (with validity flags) along one axis at position
/// `i`; `None` when no stencil of valid nodes exists.
fn axis_derivative(values: &[f64], valid: &[bool], i: usize, step: f64) -> Option<f64> {
    let n = values.len();
    if !valid[i] {
        return None;
    }
    let offsets_of = |lo: usize, hi: usize| -> Vec<f64> { (lo..=hi).map(|j| j as f64 - i as f64).collect() };
    let (lo, hi) = if i == 0 || i == n - 1 {
        // grid edge: one-sided, second order
        let (lo, hi) = if i == 0 { (0, 2) } else { (n - 3, n - 1) };
        if !(lo..=hi).all(|j| valid[j]) {
            return None;
        }
        (lo, hi)
    } else {
        // widest run of valid nodes around i, capped at STENCIL and centred
        let mut a = i;
        while a > 0 && valid[a - 1] && i - (a - 1) <= STENCIL - 1 {
            a -= 1;
        }
        let mut b = i;
        while b + 1 < n && valid[b + 1] && b + 1 - i <= STENCIL - 1 {
            b += 1;
        }
        let width = (b - a + 1).min(STENCIL);
        if width < 3 {
            return None;
        }
        let half = width / 2;
        let mut lo = i.saturating_sub(half).max(a);
        if lo + width - 1 > b {
            lo = b + 1 - width;
        }
        (lo, lo + width - 1)
    };
    let w = derivative_weights(&offsets_of(lo, hi));
    Some((lo..=hi).zip(w).map(|(j, w)| w * values[j]).sum::<f64>() / step)
}

/// `G_x = ∂F_z/∂B_y - ∂F_y/∂B_z` on every node, plus the nodes where it is
/// undefined.
///
/// Nodes away from the grid edges use seven-point stencils (central where
/// they fit, shifted towards the interior otherwise); edge nodes use
/// one-sided second-order differences. Missing samples shrink or shift the
/// stencil and a node without three valid consecutive neighbours is itself
/// missing.
pub fn curl_x(grid: &FieldGrid) -> (Vec<f64>, Vec<bool>) {
    let g = &grid.geometry;
    let valid: Vec<bool> = grid.missing_mask.iter().map(|m| !m).collect();
    let mut out = vec![f64::NAN; g.len()];
    let mut missing = vec![true; g.len()];
    for k in 0..g.n_z {
        let row: Vec<usize> = (0..g.n_y).map(|i| g.index(i, k)).collect();
        let fz: Vec<f64> = row.iter().map(|&idx| grid.f_samples[idx][2]).collect();
        let ok: Vec<bool> = row.iter().map(|&idx| valid[idx]).collect();
        for i in 0..g.n_y {
            let col: Vec<usize> = (0..g.n_z).map(|kk| g.index(i, kk)).collect();
            let fy: Vec<f64> = col.iter().map(|&idx| grid.f_samples[idx][1]).collect();
            let ok_col: Vec<bool> = col.iter().map(|&idx| valid[idx]).collect();
            let d_fz = axis_derivative(&fz, &ok, i, g.dy());
            let d_fy = axis_derivative(&fy, &ok_col, k, g.dz());
            if let (Some(a), Some(b)) = (d_fz, d_fy) {
                let idx = g.index(i, k);
                out[idx] = a - b;
                missing[idx] = false;
            }
        }
    }
    (out, missing)
}

/// Closed piecewise-linear path in `B`-space; the last vertex connects back
/// to the first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpPath {
    pub vertices: Vec<[f64; 3]>,
    pub samples_per_edge: usize,
}

impl PumpPath {
    pub fn new(vertices: Vec<[f64; 3]>, samples_per_edge: usize) -> Result<Self> {
        let path = PumpPath {
            vertices,
            samples_per_edge,
        };
        path.validate()?;
        Ok(path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 3 {
            return Err(Error::invalid("path", "need at least 3 vertices"));
        }
        if self.samples_per_edge == 0 {
            return Err(Error::invalid("samples_per_edge", "must be positive"));
        }
        if self.vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("path", "vertices must be finite"));
        }
        Ok(())
    }

    /// Rectangle at fixed `b_x`, counter-clockwise in `(b_y, b_z)`.
    pub fn rectangle(b_x: f64, y: [f64; 2], z: [f64; 2], samples_per_edge: usize) -> Result<Self> {
        Self::new(
            vec![
                [b_x, y[0], z[0]],
                [b_x, y[1], z[0]],
                [b_x, y[1], z[1]],
                [b_x, y[0], z[1]],
            ],
            samples_per_edge,
        )
    }

    /// Boundary of the default window.
    pub fn black(b_x: f64, samples_per_edge: usize) -> Self {
        Self::rectangle(b_x, [DEFAULT_EPSILON, 0.1], [-1.0, 1.0], samples_per_edge).unwrap()
    }

    /// Upper half (`b_z ≥ 0`) of the default window.
    pub fn red(b_x: f64, samples_per_edge: usize) -> Self {
        Self::rectangle(b_x, [DEFAULT_EPSILON, 0.1], [0.0, 1.0], samples_per_edge).unwrap()
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        PumpPath {
            vertices,
            samples_per_edge: self.samples_per_edge,
        }
    }

    pub fn with_samples(&self, samples_per_edge: usize) -> Self {
        PumpPath {
            vertices: self.vertices.clone(),
            samples_per_edge,
        }
    }

    /// Sample points with their `dB` trapezoid weights: vertices carry half
    /// of each adjacent edge's interval.
    pub fn quadrature(&self) -> Vec<([f64; 3], [f64; 3])> {
        let n = self.samples_per_edge;
        let v = &self.vertices;
        let m = v.len();
        let edge = |e: usize| {
            let (a, b) = (v[e], v[(e + 1) % m]);
            [b[0] - a[0], b[1] - a[1], b[2] - a[2]].map(|d| d / n as f64)
        };
        let mut out = Vec::with_capacity(m * n);
        for e in 0..m {
            let d = edge(e);
            let prev = edge((e + m - 1) % m);
            for s in 0..n {
                let t = s as f64;
                let point = [0, 1, 2].map(|c| v[e][c] + t * d[c]);
                let w = if s == 0 {
                    [0, 1, 2].map(|c| 0.5 * (d[c] + prev[c]))
                } else {
                    d
                };
                out.push((point, w));
            }
        }
        out
    }
}

/// `q_G = ∮ F·dB` by the composite trapezoid rule. Points share the path's
/// own `b_x` and `phi` in the provider call.
pub fn line_integral<P: FieldProvider + ?Sized>(path: &PumpPath, phi: f64, provider: &P) -> Result<f64> {
    path.validate()?;
    let nodes = path.quadrature();
    let terms: Vec<Result<f64>> = nodes
        .par_iter()
        .map(|(b, w)| {
            let p = DriveParams::new(b[0], b[1], b[2], phi)?;
            let f = provider.field(&p)?;
            Ok(f[0] * w[0] + f[1] * w[1] + f[2] * w[2])
        })
        .collect();
    let mut q = 0.0;
    for t in terms {
        q += t?;
    }
    Ok(q)
}

/// Line integral decomposed into the friction and geometric parts, for
/// dissipative fields.
pub fn line_integral_split(path: &PumpPath, phi: f64, solver: &DissipativeSolver) -> Result<[f64; 3]> {
    path.validate()?;
    let nodes = path.quadrature();
    let terms: Vec<Result<[f64; 3]>> = nodes
        .par_iter()
        .map(|(b, w)| {
            let p = DriveParams::new(b[0], b[1], b[2], phi)?;
            let r = solver.point(&p)?;
            let dot = |f: [f64; 3]| f[0] * w[0] + f[1] * w[1] + f[2] * w[2];
            let ff = r.f_friction.ok_or(Error::PhaseSingularity { sin_phi: phi.sin() })?;
            let fg = r.f_geometric.ok_or(Error::PhaseSingularity { sin_phi: phi.sin() })?;
            Ok([dot(r.f), dot(ff), dot(fg)])
        })
        .collect();
    let mut q = [0.0; 3];
    for t in terms {
        let t = t?;
        for c in 0..3 {
            q[c] += t[c];
        }
    }
    Ok(q)
}

/// Axis-aligned rectangle in `(b_y, b_z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub y: [f64; 2],
    pub z: [f64; 2],
}

/// `∬ G_x dB_y dB_z` by the 2D trapezoid rule over the grid nodes of
/// `region`, whose edges must lie on grid lines.
pub fn surface_integral(grid: &FieldGrid, region: &Region) -> Result<f64> {
    let g = &grid.geometry;
    let snap = |x: f64, r: [f64; 2], d: f64, n: usize| -> Result<usize> {
        let t = (x - r[0]) / d;
        let i = t.round();
        if (t - i).abs() > 1e-6 || i < 0.0 || i > (n - 1) as f64 {
            return Err(Error::invalid("region", format!("edge {x} is not on a grid line")));
        }
        Ok(i as usize)
    };
    let (i0, i1) = (snap(region.y[0], g.y_range, g.dy(), g.n_y)?, snap(region.y[1], g.y_range, g.dy(), g.n_y)?);
    let (k0, k1) = (snap(region.z[0], g.z_range, g.dz(), g.n_z)?, snap(region.z[1], g.z_range, g.dz(), g.n_z)?);
    if i0 >= i1 || k0 >= k1 {
        return Err(Error::invalid("region", "must have positive extent"));
    }
    let missing = (k0..=k1)
        .flat_map(|k| (i0..=i1).map(move |i| (i, k)))
        .filter(|&(i, k)| grid.curl_missing[g.index(i, k)])
        .count();
    if missing > 0 {
        return Err(Error::MissingNodes { count: missing });
    }
    let weight = |i: usize, lo: usize, hi: usize| if i == lo || i == hi { 0.5 } else { 1.0 };
    let mut total = 0.0;
    for k in k0..=k1 {
        for i in i0..=i1 {
            total += weight(i, i0, i1) * weight(k, k0, k1) * grid.g_x[g.index(i, k)];
        }
    }
    Ok(total * g.dy() * g.dz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::analytic_curl;
    use std::f64::consts::FRAC_PI_2;

    fn geom(n_y: usize, n_z: usize) -> GridGeometry {
        GridGeometry::default_window(0.05, FRAC_PI_2, n_y, n_z)
    }

    #[test]
    fn fornberg_reproduces_textbook_stencils() {
        let w = derivative_weights(&[-1.0, 0.0, 1.0]);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = derivative_weights(&[0.0, 1.0, 2.0]);
        assert!((w[0] + 1.5).abs() < 1e-14 && (w[1] - 2.0).abs() < 1e-14 && (w[2] + 0.5).abs() < 1e-14);
        let w = derivative_weights(&[-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let expected = [-1.0 / 60.0, 3.0 / 20.0, -0.75, 0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_field_on_small_grid() {
        let grid = sweep_grid(&geom(3, 3), &Synthetic::new(|_| [1.0, -2.0, 0.5])).unwrap();
        assert!(grid.f_samples.iter().all(|f| *f == [1.0, -2.0, 0.5]));
        assert!(grid.g_x.iter().all(|g| g.abs() < 1e-10));
        assert_eq!(grid.missing_count(), 0);
    }

    #[test]
    fn linear_field_has_unit_curl() {
        let grid = sweep_grid(&geom(9, 11), &Synthetic::new(|b| [0.0, 0.0, b[1]])).unwrap();
        for g in &grid.g_x {
            assert!((g - 1.0).abs() < 1e-9, "{g}");
        }
    }

    #[test]
    fn missing_nodes_shrink_stencils() {
        let g = geom(9, 9);
        let mut grid = sweep_grid(&g, &Synthetic::new(|b| [0.0, -b[2] * b[2], b[1]])).unwrap();
        grid.missing_mask[g.index(4, 4)] = true;
        let (curl, missing) = curl_x(&grid);
        assert!(missing[g.index(4, 4)]);
        // 2 from ∂F_z/∂B_y = 1 and -∂F_y/∂B_z = 2 b_z
        let idx = g.index(3, 4);
        assert!(!missing[idx]);
        assert!((curl[idx] - (1.0 + 2.0 * g.b_z(4))).abs() < 1e-9);
    }

    #[test]
    fn coherent_grid_has_no_missing_nodes() {
        let g = GridGeometry::default_window(0.003, FRAC_PI_2, 50, 50);
        let grid = sweep_grid(&g, &CoherentProvider).unwrap();
        assert_eq!(grid.missing_count(), 0);
    }

    #[test]
    fn coherent_curl_matches_closed_form() {
        let g = geom(120, 120);
        let grid = sweep_grid(&g, &CoherentProvider).unwrap();
        let mut worst = 0.0f64;
        for idx in 0..g.len() {
            let p = g.params(idx);
            if g.is_boundary(idx) || p.gap() <= 0.1 {
                continue;
            }
            let exact = analytic_curl(&p).unwrap()[0];
            worst = worst.max((grid.g_x[idx] - exact).abs() / exact.abs());
        }
        assert!(worst < 1e-2, "{worst}");
    }

    #[test]
    fn gradient_field_has_no_circulation() {
        let path = PumpPath::rectangle(0.1, [0.01, 0.09], [-0.5, 0.7], 50).unwrap();
        let q = line_integral(&path, FRAC_PI_2, &Synthetic::new(|b| [0.0, 2.0 * b[1], 2.0 * b[2]])).unwrap();
        assert!(q.abs() < 1e-14, "{q}");
        let tri = PumpPath::new(vec![[0.1, 0.01, 0.0], [0.2, 0.05, 0.3], [0.1, 0.08, -0.2]], 40).unwrap();
        let q = line_integral(&tri, FRAC_PI_2, &Synthetic::new(|b| [2.0 * b[0], 2.0 * b[1], 2.0 * b[2]])).unwrap();
        assert!(q.abs() < 1e-14);
    }

    #[test]
    fn reversing_path_flips_charge() {
        let path = PumpPath::red(0.1, 30);
        let a = line_integral(&path, FRAC_PI_2, &CoherentProvider).unwrap();
        let b = line_integral(&path.reversed(), FRAC_PI_2, &CoherentProvider).unwrap();
        assert!((a + b).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn uniform_curl_surface_integral() {
        let g = geom(11, 21);
        let grid = sweep_grid(&g, &Synthetic::new(|b| [0.0, -3.0 * b[2], 0.0])).unwrap();
        let region = Region {
            y: [g.b_y(2), g.b_y(8)],
            z: [g.b_z(4), g.b_z(16)],
        };
        let area = (region.y[1] - region.y[0]) * (region.z[1] - region.z[0]);
        let q = surface_integral(&grid, &region).unwrap();
        assert!((q - 3.0 * area).abs() < 1e-12);
    }

    #[test]
    fn surface_integral_refines_quadratically() {
        let flux = |n: usize| {
            let g = GridGeometry {
                b_x: 0.1,
                phi: FRAC_PI_2,
                y_range: [0.0, 1.0],
                z_range: [0.0, 1.0],
                n_y: n,
                n_z: n,
            };
            let grid = sweep_grid(&g, &Synthetic::new(|b| [0.0, 0.0, (3.0 * b[1]).sin() * b[2].exp()])).unwrap();
            surface_integral(&grid, &Region { y: [0.0, 1.0], z: [0.0, 1.0] }).unwrap()
        };
        let exact = (3f64.sin()) * (1f64.exp() - 1.0);
        let (e1, e2) = ((flux(21) - exact).abs(), (flux(41) - exact).abs());
        assert!((e1 / e2 - 4.0).abs() < 0.3, "{}", e1 / e2);
    }

    #[test]
    fn interpolation_outside_grid_is_error() {
        let grid = sweep_grid(&geom(5, 5), &Synthetic::new(|b| [b[1], b[2], 0.0])).unwrap();
        assert!(matches!(grid.interpolate(0.5, 0.0), Err(Error::OutsideGrid { .. })));
        let f = grid.interpolate(0.03, 0.2).unwrap();
        assert!((f[0] - 0.03).abs() < 1e-12 && (f[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_schedule_independent() {
        let g = geom(17, 13);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sweep_grid(&g, &CoherentProvider).unwrap())
        };
        let (a, b) = (run(1), run(3));
        let bits = |v: &FieldGrid| v.f_samples.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
