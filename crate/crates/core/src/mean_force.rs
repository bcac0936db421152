//! Reduced equilibrium state of the coupled system to second order in the
//! coupling, `ρ ∝ Tr_E e^{-β(H_S + H_E + A⊗B)}`, and the initial condition
//! built on it.
//!
//! With `V(τ) = e^{τH_S} A e^{-τH_S}` and the imaginary-time correlator
//! `C_E(u) = (1/β) Σ_n Λ(ν_n) e^{iν_n u}`,
//!
//! ```text
//! ρ ∝ e^{-βH_S} [1 + ∫_0^β dτ ∫_0^τ dτ' V(τ) V(τ') C_E(τ - τ')]
//! ```

use crate::bath::BathSpec;
use crate::eom::{Component, InitialStateProvider, YState};
use crate::linalg::{sigma_z, Mat2, C64};
use crate::oracle::DiscreteBath;
use crate::sluice::{SystemOperators, ThermalState};

/// Matsubara frequencies retained in the imaginary-time sum. Its terms fall
/// off as `ν^-3`.
pub const DEFAULT_MEAN_FORCE_TERMS: usize = 4096;

/// Second-order mean-force Gibbs state of one bath.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanForce {
    beta: f64,
    /// `Λ(ν_n)` for `n = 0..=N`; `Λ` is even in `ν`.
    kernel: Vec<f64>,
}

impl MeanForce {
    pub fn from_kernel(beta: f64, terms: usize, lambda: impl Fn(f64) -> f64) -> Self {
        let nu1 = 2.0 * std::f64::consts::PI / beta;
        MeanForce {
            beta,
            kernel: (0..=terms).map(|n| lambda(n as f64 * nu1)).collect(),
        }
    }

    /// `Λ(ν) = ηω_D²/(ω_D + |ν|)` of the Drude bath.
    pub fn drude(bath: &BathSpec) -> Self {
        let (eta, wd) = (bath.eta, bath.omega_d);
        Self::from_kernel(bath.beta, DEFAULT_MEAN_FORCE_TERMS, |nu| {
            eta * wd * wd / (wd + nu.abs())
        })
    }

    /// `Λ(ν) = Σ_α c_α²/(ω_α² + ν²)` of a discrete bath.
    pub fn discrete(bath: &DiscreteBath) -> Self {
        let modes = bath.modes();
        Self::from_kernel(bath.beta, DEFAULT_MEAN_FORCE_TERMS, |nu| {
            modes.iter().map(|&(w, c)| c * c / (w * w + nu * nu)).sum()
        })
    }

    /// Reduced state in the system eigenbasis, unit trace.
    pub fn state(&self, ops: &SystemOperators) -> Mat2 {
        let beta = self.beta;
        let nu1 = 2.0 * std::f64::consts::PI / beta;
        let a = ops.to_eigenbasis(&sigma_z());
        let e0 = ops.eigvals[0];
        let boltz = ops.eigvals.map(|e| (-beta * (e - e0)).exp());

        let mut x = Mat2::zeros();
        for n in 0..2 {
            for m in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..2 {
                    let (p, q) = (ops.omega(n, k), ops.omega(k, m));
                    let mut sum = double_integral(beta, p, q, 0.0) * self.kernel[0];
                    for (l, lam) in self.kernel.iter().enumerate().skip(1) {
                        let nu = l as f64 * nu1;
                        sum += (double_integral(beta, p, q, nu) + double_integral(beta, p, q, -nu)) * *lam;
                    }
                    acc += a[(n, k)] * a[(k, m)] * sum / beta;
                }
                x[(n, m)] = acc;
            }
        }
        let mut rho = Mat2::zeros();
        for n in 0..2 {
            for m in 0..2 {
                let delta = if n == m { 1.0 } else { 0.0 };
                rho[(n, m)] = (x[(n, m)] + delta) * boltz[n];
            }
        }
        let rho = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
        rho / rho.trace()
    }
}

/// `∫_0^β dτ e^{zτ}`.
fn exp_integral(beta: f64, z: C64) -> C64 {
    if (z * beta).norm() < 1e-8 {
        beta * (1.0 + z * beta / 2.0)
    } else {
        ((z * beta).exp() - 1.0) / z
    }
}

/// `∫_0^β dτ ∫_0^τ dτ' e^{τ(p + iν)} e^{τ'(q - iν)}` for real `p, q`.
fn double_integral(beta: f64, p: f64, q: f64, nu: f64) -> C64 {
    let outer = C64::new(p, nu);
    let inner = C64::new(q, -nu);
    if inner.norm() * beta < 1e-8 {
        // ∫_0^β τ e^{pτ} dτ
        return if p.abs() * beta < 1e-8 {
            C64::new(beta * beta / 2.0, 0.0)
        } else {
            let e = (p * beta).exp();
            C64::new(beta * e / p - (e - 1.0) / (p * p), 0.0)
        };
    }
    // e^{(p + iν)β} = e^{pβ} on the Matsubara grid
    let shifted = if nu == 0.0 {
        exp_integral(beta, outer)
    } else {
        ((p * beta).exp() - 1.0) / outer
    };
    (exp_integral(beta, C64::new(p + q, 0.0)) - shifted) / inner
}

impl InitialStateProvider for MeanForce {
    fn initial_y(&self, ops: &SystemOperators, _rho: &ThermalState, component: Component) -> YState {
        let r = self.state(ops);
        let s = ops.to_eigenbasis(&ops.s[component.index()]);
        let mean = (s * r).trace();
        YState {
            y: (s - Mat2::identity() * mean) * r,
            s: 0.0,
        }
    }
}
