//! Coherent-regime pumping: eigenstate sums and the closed-form ground-state
//! curl. These are the dissipation-free benchmarks for the rest of the crate.

use serde::{Deserialize, Serialize};

use crate::sluice::{build_hamiltonian, DriveParams, SystemOperators};
use crate::{Error, Result, DEGENERACY_THRESHOLD};

/// Pumping field of eigenstate `state_index`, charge per unit `E_C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentField {
    pub f: [f64; 3],
    pub state_index: usize,
}

fn nondegenerate(p: &DriveParams) -> Result<SystemOperators> {
    let ops = build_hamiltonian(p);
    ops.require_nondegenerate()?;
    Ok(ops)
}

/// `F_n = 2 Im Σ_{k≠n} S_nk I_kn / Ω_kn²`.
pub fn coherent_field(p: &DriveParams, n: usize) -> Result<CoherentField> {
    assert!(n < 2, "two-level system has states 0 and 1");
    let ops = nondegenerate(p)?;
    let k = 1 - n;
    let omega = ops.omega(k, n);
    let current = ops.current_eigen();
    let s = ops.s_eigen();
    let f = s.map(|s| 2.0 * (s[(n, k)] * current[(k, n)]).im / (omega * omega));
    Ok(CoherentField { f, state_index: n })
}

/// Coherent conductance `K_ij = 2 Im Σ_{k≠n} S^j_nk S^i_kn / Ω_kn²` of
/// eigenstate `n`; purely antisymmetric.
pub fn coherent_conductance(p: &DriveParams, n: usize) -> Result<[[f64; 3]; 3]> {
    assert!(n < 2, "two-level system has states 0 and 1");
    let ops = nondegenerate(p)?;
    let k = 1 - n;
    let omega = ops.omega(k, n);
    let s = ops.s_eigen();
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = 2.0 * (s[j][(n, k)] * s[i][(k, n)]).im / (omega * omega);
        }
    }
    Ok(out)
}

/// Geometric magnetism `𝓑_k = -Σ_ij ε_ijk K_ij / 2` of the coherent
/// conductance of eigenstate `n`.
pub fn geometric_magnetism(p: &DriveParams, n: usize) -> Result<[f64; 3]> {
    let k = coherent_conductance(p, n)?;
    Ok([
        -0.5 * (k[1][2] - k[2][1]),
        -0.5 * (k[2][0] - k[0][2]),
        -0.5 * (k[0][1] - k[1][0]),
    ])
}

/// Closed-form curl of the ground-state coherent field:
///
/// ```text
/// G_0 = -[cos φ (B² - B_x B_y cos φ) + 3 B_x B_y] B / (B² + 2 B_x B_y cos φ)^{5/2}
/// ```
pub fn analytic_curl(p: &DriveParams) -> Result<[f64; 3]> {
    let cos_phi = p.phi.cos();
    let b2 = p.b_squared();
    let bxby = p.b_x * p.b_y;
    let base = b2 + 2.0 * bxby * cos_phi;
    if base <= DEGENERACY_THRESHOLD * DEGENERACY_THRESHOLD {
        return Err(Error::Degenerate {
            gap: base.max(0.0).sqrt(),
        });
    }
    let scale = -(cos_phi * (b2 - bxby * cos_phi) + 3.0 * bxby) / base.powf(2.5);
    Ok(p.b().map(|b| scale * b))
}

/// Ground-state Berry curvature in `B`-space at fixed `φ`, from the
/// gauge-invariant product of eigenvector overlaps around a small plaquette.
///
/// Convention: the curvature is the curl of `A = i<u|∇u>`, so the flux through
/// a plaquette is `-arg Π <u_k|u_{k+1}>`.
pub fn berry_curvature(p: &DriveParams) -> Result<[f64; 3]> {
    nondegenerate(p)?;
    let delta = 1e-4 * p.gap().clamp(1e-6, 1.0);
    let base = p.b();
    let ground = |b: [f64; 3]| -> Result<nalgebra::Vector2<num_complex::Complex64>> {
        let ops = nondegenerate(&p.with_b(b))?;
        Ok(ops.eigvecs.column(0).into_owned())
    };
    let mut out = [0.0; 3];
    for (k, v) in out.iter_mut().enumerate() {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let corner = |si: f64, sj: f64| {
            let mut b = base;
            b[i] += 0.5 * si * delta;
            b[j] += 0.5 * sj * delta;
            ground(b)
        };
        // counter-clockwise in the (i, j) plane
        let u = [
            corner(-1.0, -1.0)?,
            corner(1.0, -1.0)?,
            corner(1.0, 1.0)?,
            corner(-1.0, 1.0)?,
        ];
        let mut prod = num_complex::Complex64::new(1.0, 0.0);
        for a in 0..4 {
            prod *= u[a].dotc(&u[(a + 1) % 4]);
        }
        *v = -prod.arg() / (delta * delta);
    }
    Ok(out)
}
