//! Two-level model of the Cooper-pair sluice at a frozen parameter point.
//!
//! In the charge basis `{|0>, |1>}` the Hamiltonian is `H(B) = -B·S` with
//!
//! ```text
//! S_x = [σ_x cos(φ/2) + σ_y sin(φ/2)] / 2
//! S_y = [σ_x cos(φ/2) - σ_y sin(φ/2)] / 2
//! S_z = σ_z / 2
//! ```
//!
//! where `B = (E_JL, E_JR, E_C(1 - 2 n_g))` and `φ` is the phase bias.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::linalg::{c, identity, rotate, sigma_x, sigma_y, sigma_z, Mat2, C64};
use crate::{Error, Result, DEGENERACY_THRESHOLD};

/// Control parameters `B = (b_x, b_y, b_z)` plus the phase bias `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub b_x: f64,
    pub b_y: f64,
    pub b_z: f64,
    pub phi: f64,
}

impl DriveParams {
    /// Validated constructor: Josephson couplings must be non-negative and
    /// the phase must lie in `[0, 2π]`.
    pub fn new(b_x: f64, b_y: f64, b_z: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("b_x", b_x), ("b_y", b_y), ("b_z", b_z), ("phi", phi)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("{v} is not finite")));
            }
        }
        if b_x < 0.0 {
            return Err(Error::invalid("b_x", format!("{b_x} < 0")));
        }
        if b_y < 0.0 {
            return Err(Error::invalid("b_y", format!("{b_y} < 0")));
        }
        if !(0.0..=TAU).contains(&phi) {
            return Err(Error::invalid("phi", format!("{phi} outside [0, 2π]")));
        }
        Ok(DriveParams { b_x, b_y, b_z, phi })
    }

    pub fn b(&self) -> [f64; 3] {
        [self.b_x, self.b_y, self.b_z]
    }

    /// Same phase, different control vector. Used by finite-difference
    /// stencils, which may step outside the physical octant.
    pub fn with_b(&self, b: [f64; 3]) -> Self {
        DriveParams {
            b_x: b[0],
            b_y: b[1],
            b_z: b[2],
            phi: self.phi,
        }
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        DriveParams { phi, ..*self }
    }

    pub fn b_squared(&self) -> f64 {
        self.b_x * self.b_x + self.b_y * self.b_y + self.b_z * self.b_z
    }

    /// `ε_1 - ε_0 = sqrt(B² + 2 b_x b_y cos φ)`.
    pub fn gap(&self) -> f64 {
        (self.b_squared() + 2.0 * self.b_x * self.b_y * self.phi.cos())
            .max(0.0)
            .sqrt()
    }
}

/// Spin operators `[S_x, S_y, S_z]` for phase `phi`.
pub fn build_spin_ops(phi: f64) -> [Mat2; 3] {
    let (s, co) = (0.5 * phi).sin_cos();
    let sx = sigma_x();
    let sy = sigma_y();
    [
        (sx * c(co) + sy * c(s)) * c(0.5),
        (sx * c(co) - sy * c(s)) * c(0.5),
        sigma_z() * c(0.5),
    ]
}

/// Analytic phase derivatives `[∂_φ S_x, ∂_φ S_y]`.
pub fn spin_phase_derivatives(phi: f64) -> [Mat2; 2] {
    let (s, co) = (0.5 * phi).sin_cos();
    let sx = sigma_x();
    let sy = sigma_y();
    [
        (sx * c(-s) + sy * c(co)) * c(0.25),
        (sx * c(-s) - sy * c(co)) * c(0.25),
    ]
}

/// Operators of the sluice at a frozen parameter point, together with the
/// eigensystem of `h`.
#[derive(Clone, Debug)]
pub struct SystemOperators {
    pub params: DriveParams,
    /// `[S_x, S_y, S_z]` in the charge basis.
    pub s: [Mat2; 3],
    pub h: Mat2,
    pub current: Mat2,
    /// `ε_0 <= ε_1`.
    pub eigvals: [f64; 2],
    /// Columns are the eigenvectors of `h`, ground state first.
    pub eigvecs: Mat2,
    pub degenerate: bool,
}

impl SystemOperators {
    pub fn gap(&self) -> f64 {
        self.eigvals[1] - self.eigvals[0]
    }

    /// `Ω_nm = ε_n - ε_m`.
    pub fn omega(&self, n: usize, m: usize) -> f64 {
        self.eigvals[n] - self.eigvals[m]
    }

    /// Express a charge-basis operator in the energy eigenbasis.
    pub fn to_eigenbasis(&self, m: &Mat2) -> Mat2 {
        rotate(m, &self.eigvecs)
    }

    pub fn from_eigenbasis(&self, m: &Mat2) -> Mat2 {
        self.eigvecs * m * self.eigvecs.adjoint()
    }

    /// Spin operators in the eigenbasis.
    pub fn s_eigen(&self) -> [Mat2; 3] {
        self.s.map(|s| self.to_eigenbasis(&s))
    }

    pub fn current_eigen(&self) -> Mat2 {
        self.to_eigenbasis(&self.current)
    }

    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.degenerate {
            Err(Error::Degenerate { gap: self.gap() })
        } else {
            Ok(())
        }
    }
}

/// `h = -(b_x S_x + b_y S_y + b_z S_z)` with its closed-form eigensystem.
pub fn build_hamiltonian(p: &DriveParams) -> SystemOperators {
    let s = build_spin_ops(p.phi);
    let h = -(s[0] * c(p.b_x) + s[1] * c(p.b_y) + s[2] * c(p.b_z));

    // h = -(n·σ)/2
    let (sh, ch) = (0.5 * p.phi).sin_cos();
    let nx = (p.b_x + p.b_y) * ch;
    let ny = (p.b_x - p.b_y) * sh;
    let nz = p.b_z;
    let norm = (nx * nx + ny * ny + nz * nz).sqrt();
    let degenerate = norm < DEGENERACY_THRESHOLD;

    let eigvecs = if degenerate {
        identity()
    } else {
        // ground state is the +1 eigenvector of n̂·σ
        let perp = C64::new(nx, ny);
        let (cos_half, sin_phase) = if nz >= 0.0 {
            let ch = ((norm + nz) / (2.0 * norm)).sqrt();
            (c(ch), perp / (2.0 * norm * ch))
        } else {
            let sh = ((norm - nz) / (2.0 * norm)).sqrt();
            let phase = if perp.norm() > 0.0 {
                perp / perp.norm()
            } else {
                c(1.0)
            };
            (c(perp.norm() / (2.0 * norm * sh)), phase * sh)
        };
        Mat2::new(cos_half, -sin_phase.conj(), sin_phase, cos_half)
    };

    SystemOperators {
        params: *p,
        s,
        h,
        current: current_operator(p),
        eigvals: [-0.5 * norm, 0.5 * norm],
        eigvecs,
        degenerate,
    }
}

/// `I = 2 ∂_φ H = -2 (b_x ∂_φ S_x + b_y ∂_φ S_y)`.
pub fn current_operator(p: &DriveParams) -> Mat2 {
    let [dx, dy] = spin_phase_derivatives(p.phi);
    -(dx * c(p.b_x) + dy * c(p.b_y)) * c(2.0)
}

/// Coefficients `(a, b)` with `I = a S_x + b S_y`, defined for `sin φ ≠ 0`.
pub fn current_coefficients(p: &DriveParams) -> Result<(f64, f64)> {
    let sin_phi = p.phi.sin();
    if sin_phi.abs() <= 1e-9 {
        return Err(Error::PhaseSingularity { sin_phi });
    }
    let cos_phi = p.phi.cos();
    Ok((
        -(p.b_x * cos_phi - p.b_y) / sin_phi,
        -(p.b_y * cos_phi - p.b_x) / sin_phi,
    ))
}

/// Gibbs state of the isolated two-level system.
#[derive(Clone, Debug)]
pub struct ThermalState {
    /// Density matrix in the charge basis.
    pub rho: Mat2,
    /// Eigenstate populations `(p_0, p_1)`.
    pub populations: [f64; 2],
    pub beta: f64,
}

impl ThermalState {
    pub fn rho_eigen(&self) -> Mat2 {
        Mat2::new(
            c(self.populations[0]),
            c(0.0),
            c(0.0),
            c(self.populations[1]),
        )
    }
}

pub fn gibbs_state(ops: &SystemOperators, beta: f64) -> Result<ThermalState> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", format!("{beta} must be positive")));
    }
    let ratio = (-beta * ops.gap()).exp();
    let p0 = 1.0 / (1.0 + ratio);
    let p1 = ratio * p0;
    let diag = Mat2::new(c(p0), c(0.0), c(0.0), c(p1));
    Ok(ThermalState {
        rho: ops.from_eigenbasis(&diag),
        populations: [p0, p1],
        beta,
    })
}
