//! Exact reference dynamics: the sluice coupled to a few harmonic modes,
//! diagonalized in the full (truncated) Fock space.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, CorrelatorSeries};
use crate::eom::{initial_y, Component, EomSystem};
use crate::error::{Error, Result};
use crate::linalg::{c, max_abs, sigma_z, Mat2, C64};
use crate::sluice::{build_hamiltonian, gibbs_state, DriveParams};

/// Largest full Hilbert-space dimension diagonalized densely.
pub const DIMENSION_BUDGET: usize = 4096;

/// Highest retained Fock level may hold at most this thermal weight.
pub const FOCK_OCCUPATION_LIMIT: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBath {
    pub n_modes: usize,
    pub n_fock: usize,
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
    pub beta: f64,
}

impl DiscreteBath {
    /// Uniform grid `ω_α = α Δω`, `α = 1..n_modes`, `Δω = ω_max / n_modes`,
    /// with `c_α² = (2/π) J(ω_α) ω_α Δω` (unit masses).
    pub fn discretize(bath: &BathSpec, n_modes: usize, n_fock: usize, omega_max: f64) -> Result<Self> {
        if n_modes < 2 {
            return Err(Error::invalid("n_modes", "need at least 2 modes"));
        }
        if n_fock < 2 {
            return Err(Error::invalid("n_fock", "need at least 2 levels"));
        }
        if !(omega_max >= 3.0 * bath.omega_d) {
            return Err(Error::invalid(
                "omega_max",
                format!("{omega_max} must be at least 3 omega_d"),
            ));
        }
        let dim = n_fock
            .checked_pow(n_modes as u32)
            .and_then(|d| d.checked_mul(2))
            .unwrap_or(usize::MAX);
        if dim > DIMENSION_BUDGET {
            return Err(Error::DimensionBudget {
                dim,
                budget: DIMENSION_BUDGET,
            });
        }
        let dw = omega_max / n_modes as f64;
        let frequencies: Vec<f64> = (1..=n_modes).map(|a| a as f64 * dw).collect();
        let couplings = frequencies
            .iter()
            .map(|&w| (2.0 / std::f64::consts::PI * bath.spectral_density(w) * w * dw).sqrt())
            .collect();
        let db = DiscreteBath {
            n_modes,
            n_fock,
            frequencies,
            couplings,
            beta: bath.beta,
        };
        let occ = db.top_level_occupation();
        if occ >= FOCK_OCCUPATION_LIMIT {
            return Err(Error::invalid(
                "n_fock",
                format!("top Fock level holds thermal weight {occ:e}"),
            ));
        }
        Ok(db)
    }

    pub fn spacing(&self) -> f64 {
        self.frequencies[0]
    }

    /// `2π/Δω`; beyond it the finite bath revives.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.spacing()
    }

    pub fn dimension(&self) -> usize {
        2 * self.n_fock.pow(self.n_modes as u32)
    }

    /// Thermal weight of level `n_fock - 1` in the softest mode.
    pub fn top_level_occupation(&self) -> f64 {
        let x = self.beta * self.spacing();
        (1.0 - (-x).exp()) * (-x * (self.n_fock - 1) as f64).exp()
    }

    /// `Σ_α π c_α²/(2ω_α)` in bins of width `Δω` centred on the modes,
    /// divided by `Δω`: the spectral density the discrete bath represents.
    pub fn binned_spectral_density(&self) -> Vec<(f64, f64)> {
        let dw = self.spacing();
        self.frequencies
            .iter()
            .zip(&self.couplings)
            .map(|(&w, &c)| (w, std::f64::consts::PI * c * c / (2.0 * w) / dw))
            .collect()
    }

    pub fn modes(&self) -> Vec<(f64, f64)> {
        self.frequencies.iter().copied().zip(self.couplings.iter().copied()).collect()
    }

    /// Correlator of the bath coordinate `Σ c_α x_α`.
    pub fn series(&self) -> CorrelatorSeries {
        CorrelatorSeries::from_modes(&self.modes(), self.beta)
    }
}

type Dense = DMatrix<C64>;

fn kron(a: &Dense, b: &Dense) -> Dense {
    a.kronecker(b)
}

fn mat2_dense(m: &Mat2) -> Dense {
    Dense::from_fn(2, 2, |i, j| m[(i, j)])
}

/// Exact `Y_{-s} = Tr_E[U_s ΔS ρ^eq U_s†]` for the full thermal state of
/// system plus discrete bath, `H = H_S ⊗ 1 + 1 ⊗ H_E + σ_z ⊗ Σ c_α x_α`.
pub struct ExactDynamics {
    dim_e: usize,
    energies: DVector<f64>,
    /// `K^{ab}_{pq} = Σ_e V_{(a,e),p} X̃_pq conj V_{(b,e),q}` per component.
    forms: Vec<[Dense; 4]>,
    /// Bare-system eigenvectors for the final rotation.
    eigvecs: Mat2,
    /// `Tr_E ρ^eq` in the bare eigenbasis.
    reduced: Mat2,
}

impl ExactDynamics {
    pub fn new(p: &DriveParams, db: &DiscreteBath, components: &[Component]) -> Result<Self> {
        Self::with_bath_rotation(p, db, components, None)
    }

    /// As [`ExactDynamics::new`] with every bath operator conjugated by
    /// `rotation` (a unitary on the bath space); the partial trace must not
    /// notice.
    pub fn with_bath_rotation(
        p: &DriveParams,
        db: &DiscreteBath,
        components: &[Component],
        rotation: Option<&Dense>,
    ) -> Result<Self> {
        if db.dimension() > DIMENSION_BUDGET {
            return Err(Error::DimensionBudget {
                dim: db.dimension(),
                budget: DIMENSION_BUDGET,
            });
        }
        let ops = build_hamiltonian(p);
        ops.require_nondegenerate()?;
        let nf = db.n_fock;
        let dim_e = nf.pow(db.n_modes as u32);
        let annihilate = Dense::from_fn(nf, nf, |i, j| {
            if j == i + 1 {
                c((j as f64).sqrt())
            } else {
                c(0.0)
            }
        });
        let number = annihilate.adjoint() * &annihilate;
        let x_single = (&annihilate + annihilate.adjoint()) * c(1.0);
        let id_f = Dense::identity(nf, nf);
        let embed = |op: &Dense, mode: usize| {
            (0..db.n_modes).fold(Dense::identity(1, 1), |acc, m| {
                kron(&acc, if m == mode { op } else { &id_f })
            })
        };
        let mut h_e = Dense::zeros(dim_e, dim_e);
        let mut coupling = Dense::zeros(dim_e, dim_e);
        for (mode, (&w, &cpl)) in db.frequencies.iter().zip(&db.couplings).enumerate() {
            h_e += embed(&number, mode) * c(w);
            coupling += embed(&x_single, mode) * c(cpl / (2.0 * w).sqrt());
        }
        if let Some(u) = rotation {
            h_e = u.adjoint() * &h_e * u;
            coupling = u.adjoint() * &coupling * u;
        }
        let id_e = Dense::identity(dim_e, dim_e);
        let id_s = Dense::identity(2, 2);
        let total = kron(&mat2_dense(&ops.h), &id_e) + kron(&id_s, &h_e) + kron(&mat2_dense(&sigma_z()), &coupling);
        let eig = total.symmetric_eigen();
        let energies = eig.eigenvalues.clone();
        let v = eig.eigenvectors;
        let e0 = energies.min();
        let weights: Vec<f64> = energies.iter().map(|e| (-db.beta * (e - e0)).exp()).collect();
        let z: f64 = weights.iter().sum();

        let dim = 2 * dim_e;
        let blocks = [v.rows(0, dim_e).into_owned(), v.rows(dim_e, dim_e).into_owned()];
        let site_state = Mat2::from_fn(|a, b| {
            let mut acc = C64::new(0.0, 0.0);
            for q in 0..dim {
                let col = blocks[a].column(q).dot(&blocks[b].column(q).conjugate());
                acc += col * (weights[q] / z);
            }
            acc
        });
        let mut forms = Vec::with_capacity(components.len());
        for comp in components {
            let s_full = kron(&mat2_dense(&ops.s[comp.index()]), &id_e);
            let s_eig = v.adjoint() * &s_full * &v;
            let mean: C64 = (0..dim).map(|q| s_eig[(q, q)] * (weights[q] / z)).sum();
            // X̃ = V† ΔS ρ V in the full eigenbasis
            let x = Dense::from_fn(dim, dim, |pp, q| {
                let ds = if pp == q { s_eig[(pp, q)] - mean } else { s_eig[(pp, q)] };
                ds * (weights[q] / z)
            });
            let form = |a: usize, b: usize| {
                let g = blocks[a].transpose() * blocks[b].conjugate();
                g.component_mul(&x)
            };
            forms.push([form(0, 0), form(0, 1), form(1, 0), form(1, 1)]);
        }
        Ok(ExactDynamics {
            dim_e,
            energies,
            forms,
            eigvecs: ops.eigvecs,
            reduced: ops.eigvecs.adjoint() * site_state * ops.eigvecs,
        })
    }

    /// Reduced thermal state of the system, bare eigenbasis.
    pub fn reduced_state(&self) -> Mat2 {
        self.reduced
    }

    pub fn bath_dimension(&self) -> usize {
        self.dim_e
    }

    /// `Y` of the `index`-th requested component at each time, in the bare
    /// system eigenbasis.
    pub fn trajectory(&self, index: usize, s_grid: &[f64]) -> Vec<Mat2> {
        let forms = &self.forms[index];
        s_grid
            .iter()
            .map(|&s| {
                let u = DVector::from_iterator(
                    self.energies.len(),
                    self.energies.iter().map(|e| C64::new(0.0, -e * s).exp()),
                );
                let uc = u.conjugate();
                let entry = |k: &Dense| u.dot(&(k * &uc));
                let site = Mat2::new(entry(&forms[0]), entry(&forms[1]), entry(&forms[2]), entry(&forms[3]));
                self.eigvecs.adjoint() * site * self.eigvecs
            })
            .collect()
    }
}

/// Exact trajectory of one component.
pub fn exact_y_trajectory(p: &DriveParams, db: &DiscreteBath, component: Component, s_grid: &[f64]) -> Result<Vec<Mat2>> {
    let window = 0.5 * db.recurrence_time();
    if let Some(&s) = s_grid.iter().find(|&&s| s > window + 1e-12) {
        return Err(Error::invalid(
            "s_grid",
            format!("time {s} beyond half the recurrence time {window}"),
        ));
    }
    Ok(ExactDynamics::new(p, db, &[component])?.trajectory(0, s_grid))
}

/// Largest relative max-norm deviation of the weak-coupling EOM from the
/// exact trajectory, per component, over `[0, fraction · t_recurrence]`.
/// The EOM is driven by the discrete bath's own correlator.
pub fn trajectory_deviation(p: &DriveParams, db: &DiscreteBath, h: f64, fraction: f64) -> Result<[f64; 3]> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::invalid("fraction", format!("{fraction} outside (0, 0.5]")));
    }
    let ops = build_hamiltonian(p);
    let rho = gibbs_state(&ops, db.beta)?;
    let series = db.series();
    let sys = EomSystem::new(&ops, &series, db.beta)?;
    let exact = ExactDynamics::new(p, db, &Component::ALL)?;
    let s_max = fraction * db.recurrence_time();
    let mut out = [0.0; 3];
    for comp in Component::ALL {
        let traj = sys.propagate(&initial_y(&ops, &rho, comp), s_max, h)?;
        let grid: Vec<f64> = traj.iter().map(|y| y.s).collect();
        let reference = exact.trajectory(comp.index(), &grid);
        let scale = reference.iter().map(max_abs).fold(0.0, f64::max);
        let dev = traj
            .iter()
            .zip(&reference)
            .map(|(y, r)| max_abs(&(y.y - r)))
            .fold(0.0, f64::max);
        out[comp.index()] = dev / scale;
    }
    Ok(out)
}
