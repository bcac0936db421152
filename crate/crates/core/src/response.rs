//! Dissipative pumping field and adiabatic conductance from propagated
//! `Y` trajectories:
//!
//! ```text
//! F_j  = -2 ∫_0^∞ s Im Tr(I   Y^{(j)}_{-s}) ds
//! K_ij = -2 ∫_0^∞ s Im Tr(S_i Y^{(j)}_{-s}) ds
//! ```
//!
//! The integrals use the trapezoid rule on the RK4 step grid. Once every
//! memory tail has decayed the generator is constant, each further RK4 step
//! is the same matrix `P`, and the rest of the trapezoid sum is a geometric
//! series summed in closed form. Slow population relaxation would otherwise
//! require `s` far beyond any practical cutoff.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, CorrelatorSeries};
use crate::eom::{Component, EomSystem, InitialStateProvider, Stepper, ZerothOrder};
use crate::error::{Error, Result};
use crate::linalg::{flatten, Mat2, Mat4, Vec4, C64};
use crate::mean_force::MeanForce;
use crate::sluice::{build_hamiltonian, current_coefficients, gibbs_state, DriveParams};

/// Initial condition of the `Y` propagation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCondition {
    /// Factorized Gibbs state.
    #[default]
    Zeroth,
    /// Mean-force Gibbs state to second order in the coupling.
    MeanForce,
}

/// `|sin φ|` below which the friction/geometric split is not attempted.
pub const DECOMPOSITION_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResponseSettings {
    /// RK4 step.
    pub h: f64,
    /// Hard limit on explicit stepping.
    pub s_cap: f64,
    /// Look-back window of the explicit convergence test.
    pub window: f64,
    /// Windowed contribution relative to the accumulated integrals.
    pub window_tol: f64,
    /// Sum the frozen-generator tail in closed form.
    pub closed_form_tail: bool,
    pub initial_condition: InitialCondition,
}

impl Default for ResponseSettings {
    fn default() -> Self {
        ResponseSettings {
            h: 0.01,
            s_cap: 2000.0,
            window: 20.0,
            window_tol: 1e-6,
            closed_form_tail: true,
            initial_condition: InitialCondition::Zeroth,
        }
    }
}

impl ResponseSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::invalid("h", format!("{} must be positive", self.h)));
        }
        if !(self.s_cap > self.h) {
            return Err(Error::invalid("s_cap", format!("{} must exceed h", self.s_cap)));
        }
        if !(self.window > 0.0 && self.window_tol > 0.0) {
            return Err(Error::invalid("window", "window and tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    pub f: [f64; 3],
    /// `K[i][j]`: response of `S_i` to driving `B_j`.
    pub k_matrix: [[f64; 3]; 3],
    pub friction: [[f64; 3]; 3],
    pub magnetism: [f64; 3],
    pub f_friction: Option<[f64; 3]>,
    pub f_geometric: Option<[f64; 3]>,
    pub converged: bool,
    /// Backward time reached by explicit stepping.
    pub s_used: f64,
    /// Whether the remainder beyond `s_used` was summed in closed form.
    pub closed_tail: bool,
    /// Largest imaginary residue of the complex-valued integrals.
    pub imag_residue: f64,
}

impl ResponsePoint {
    fn from_integrals(p: &DriveParams, acc: &Integrals, s_used: f64, closed_tail: bool) -> Self {
        let f = [0, 1, 2].map(|j| -2.0 * acc.value[0][j].re);
        let k = [1, 2, 3].map(|o| [0, 1, 2].map(|j| -2.0 * acc.value[o][j].re));
        let mut friction = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                friction[i][j] = 0.5 * (k[i][j] + k[j][i]);
            }
        }
        let magnetism = magnetism_vector(&k);
        let mut point = ResponsePoint {
            f,
            k_matrix: k,
            friction,
            magnetism,
            f_friction: None,
            f_geometric: None,
            converged: true,
            s_used,
            closed_tail,
            imag_residue: acc.imag_residue(),
        };
        if let Ok((ff, fg)) = decompose_field(p, &point) {
            point.f_friction = Some(ff);
            point.f_geometric = Some(fg);
        }
        point
    }
}

/// `𝓑_k = -Σ_ij ε_ijk (K - Kᵀ)_ij / 4`.
pub fn magnetism_vector(k: &[[f64; 3]; 3]) -> [f64; 3] {
    [
        -0.5 * (k[1][2] - k[2][1]),
        -0.5 * (k[2][0] - k[0][2]),
        -0.5 * (k[0][1] - k[1][0]),
    ]
}

/// `F = F_friction + F_geometric` with `F_j = a K_xj + b K_yj` split into
/// the symmetric and antisymmetric parts of `K`.
pub fn decompose_field(p: &DriveParams, resp: &ResponsePoint) -> Result<([f64; 3], [f64; 3])> {
    let sin_phi = p.phi.sin();
    if sin_phi.abs() <= DECOMPOSITION_THRESHOLD {
        return Err(Error::PhaseSingularity { sin_phi });
    }
    let (a, b) = current_coefficients(p)?;
    let k = &resp.k_matrix;
    let mut ff = [0.0; 3];
    let mut fg = [0.0; 3];
    for j in 0..3 {
        let sym = |i: usize| 0.5 * (k[i][j] + k[j][i]);
        let anti = |i: usize| 0.5 * (k[i][j] - k[j][i]);
        ff[j] = a * sym(0) + b * sym(1);
        fg[j] = a * anti(0) + b * anti(1);
    }
    Ok((ff, fg))
}

/// Observables `[I, S_x, S_y, S_z]` as row vectors in eigenbasis:
/// `Tr(O Y) = o · vec(Y)` with `o[2n + m] = O_mn`.
fn observable_rows(ops: &crate::sluice::SystemOperators) -> [Vec4; 4] {
    let row = |o: Mat2| flatten(&o.transpose());
    let s = ops.s_eigen();
    [row(ops.current_eigen()), row(s[0]), row(s[1]), row(s[2])]
}

/// `∫ s Tr(O_o Y^{(j)}) ds` for every observable `o` and component `j`,
/// kept complex: the field uses `Im`, and `Re` must be dropped exactly.
struct Integrals {
    obs: [Vec4; 4],
    value: [[C64; 3]; 4],
    residue: f64,
}

impl Integrals {
    fn new(obs: [Vec4; 4]) -> Self {
        Integrals {
            obs,
            value: [[C64::new(0.0, 0.0); 3]; 4],
            residue: 0.0,
        }
    }

    /// Contribution `weight · Im Tr(O Y)` folded into `re` slots; the
    /// complex combination `i(Tr OY - Tr OY†)` is evaluated to monitor
    /// reality.
    fn add(&mut self, weight: f64, ys: &[Vec4]) -> f64 {
        let mut largest = 0.0f64;
        for (o, row) in self.obs.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                let z = row.dot(y);
                // Tr(O Y†) = conj(Tr(O Y)) for Hermitian O
                let combo = C64::new(0.0, 1.0) * (z - z.conj());
                self.residue = self.residue.max(combo.im.abs());
                let inc = weight * z.im;
                self.value[o][j] += C64::new(inc, 0.0);
                largest = largest.max(inc.abs());
            }
        }
        largest
    }

    fn scale(&self) -> f64 {
        self.value
            .iter()
            .flatten()
            .fold(0.0f64, |acc, z| acc.max(z.norm()))
    }

    fn imag_residue(&self) -> f64 {
        let stored = self
            .value
            .iter()
            .flatten()
            .fold(0.0f64, |acc, z| acc.max(z.im.abs()));
        stored.max(self.residue)
    }
}

/// Constant-generator RK4 map restricted to traceless `Y`, in the
/// coordinates `u = (Y_00, Y_01, Y_10)`, `Y_11 = -Y_00`.
struct FrozenTail {
    m: Matrix3<C64>,
    h: f64,
}

impl FrozenTail {
    fn new(g: &Mat4, h: f64) -> Self {
        let mut m = Matrix3::zeros();
        for r in 0..3 {
            m[(r, 0)] = g[(r, 0)] - g[(r, 3)];
            m[(r, 1)] = g[(r, 1)];
            m[(r, 2)] = g[(r, 2)];
        }
        FrozenTail { m, h }
    }

    fn poly(z: C64) -> C64 {
        C64::new(1.0, 0.0) + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0
    }

    /// Spectral radius of the one-step map.
    fn radius(&self) -> Option<f64> {
        let eig = self.m.schur().eigenvalues()?;
        Some(eig.iter().map(|l| Self::poly(*l * self.h).norm()).fold(0.0, f64::max))
    }

    /// `(Σ_{k≥1} Pᵏ u, Σ_{k≥1} k Pᵏ u)`.
    ///
    /// `I - P = -hM Q` with `Q = I + hM/2 + (hM)²/6 + (hM)³/24`, which keeps
    /// the slow modes free of cancellation.
    fn sums(&self, u: &Vector3<C64>) -> Option<(Vector3<C64>, Vector3<C64>)> {
        let hm = self.m * C64::new(self.h, 0.0);
        let id = Matrix3::<C64>::identity();
        let hm2 = hm * hm;
        let q = id + hm * C64::new(0.5, 0.0) + hm2 / C64::new(6.0, 0.0) + hm2 * hm / C64::new(24.0, 0.0);
        let p = id + hm * q;
        let lu_m = hm.lu();
        let lu_q = q.lu();
        let inv = |v: &Vector3<C64>| -> Option<Vector3<C64>> {
            let x = lu_m.solve(v)?;
            Some(-lu_q.solve(&x)?)
        };
        let t1 = inv(&(p * u))?;
        let t2 = inv(&t1)?;
        Some((t1, t2))
    }
}

fn traceless_coords(y: &Vec4) -> Vector3<C64> {
    Vector3::new(y[0], y[1], y[2])
}

fn traceless_row(o: &Vec4) -> Vector3<C64> {
    Vector3::new(o[0] - o[3], o[1], o[2])
}

/// Reusable evaluator for one bath.
#[derive(Clone, Debug)]
pub struct DissipativeSolver {
    pub bath: BathSpec,
    pub settings: ResponseSettings,
    series: CorrelatorSeries,
    mean_force: MeanForce,
}

impl DissipativeSolver {
    pub fn new(bath: BathSpec, settings: ResponseSettings) -> Result<Self> {
        settings.validate()?;
        if bath.eta <= 0.0 {
            return Err(Error::invalid(
                "eta",
                "dissipative response needs eta > 0; use the coherent field at eta = 0",
            ));
        }
        Ok(DissipativeSolver {
            series: CorrelatorSeries::drude(&bath)?,
            mean_force: MeanForce::drude(&bath),
            bath,
            settings,
        })
    }

    pub fn series(&self) -> &CorrelatorSeries {
        &self.series
    }

    pub fn point(&self, p: &DriveParams) -> Result<ResponsePoint> {
        match self.settings.initial_condition {
            InitialCondition::Zeroth => self.point_with(p, &ZerothOrder),
            InitialCondition::MeanForce => self.point_with(p, &self.mean_force),
        }
    }

    pub fn point_with(&self, p: &DriveParams, init: &dyn InitialStateProvider) -> Result<ResponsePoint> {
        let ops = build_hamiltonian(p);
        ops.require_nondegenerate()?;
        let rho = gibbs_state(&ops, self.bath.beta)?;
        let system = EomSystem::new(&ops, &self.series, self.bath.beta)?;
        let h = self.settings.h;
        system.check_step(h)?;

        let ys = Component::ALL
            .iter()
            .map(|&c| flatten(&init.initial_y(&ops, &rho, c).y))
            .collect();
        let mut acc = Integrals::new(observable_rows(&ops));
        let mut stepper = Stepper::new(&system, ys, 0.0, h);

        let window_steps = (self.settings.window / h).ceil() as usize;
        let mut recent = std::collections::VecDeque::with_capacity(window_steps + 1);
        let mut window_sum = 0.0;
        let mut tail_tried = false;
        loop {
            let s = stepper.step()?;
            // trapezoid on [0, ∞): the s = 0 end carries no weight
            let largest = acc.add(h * s, stepper.states());
            recent.push_back(largest);
            window_sum += largest;
            if recent.len() > window_steps {
                window_sum -= recent.pop_front().unwrap();
            }

            if self.settings.closed_form_tail && stepper.is_frozen() && !tail_tried {
                tail_tried = true;
                if let Some(done) = self.close_tail(&mut acc, &stepper, s) {
                    if done {
                        return Ok(ResponsePoint::from_integrals(p, &acc, s, true));
                    }
                }
            }

            let scale = acc.scale();
            let ratio = if scale > 0.0 { window_sum / scale } else { 0.0 };
            if recent.len() == window_steps && ratio < self.settings.window_tol {
                return Ok(ResponsePoint::from_integrals(p, &acc, s, false));
            }
            if s >= self.settings.s_cap {
                return Err(Error::NotConverged { s, ratio });
            }
        }
    }

    /// Adds `h Σ_{k≥1} (s_N + kh) Im Tr(O Pᵏ y_N)` to every integral.
    /// `None` when the frozen map is not contracting.
    fn close_tail(&self, acc: &mut Integrals, stepper: &Stepper, s_n: f64) -> Option<bool> {
        let h = self.settings.h;
        let tail = FrozenTail::new(stepper.generator(), h);
        if tail.radius()? >= 1.0 - 1e-15 {
            return None;
        }
        let mut sums = Vec::with_capacity(3);
        for y in stepper.states() {
            sums.push(tail.sums(&traceless_coords(y))?);
        }
        for o in 0..4 {
            let row = traceless_row(&acc.obs[o]);
            for (j, (t1, t2)) in sums.iter().enumerate() {
                let z = row.dot(t1) * s_n + row.dot(t2) * h;
                acc.value[o][j] += C64::new(h * z.im, 0.0);
            }
        }
        Some(true)
    }
}

/// Dissipative field and conductance at one point.
pub fn conductance_matrix(p: &DriveParams, bath: &BathSpec, settings: &ResponseSettings) -> Result<ResponsePoint> {
    DissipativeSolver::new(*bath, *settings)?.point(p)
}

pub fn pumping_field(p: &DriveParams, bath: &BathSpec, settings: &ResponseSettings) -> Result<[f64; 3]> {
    Ok(conductance_matrix(p, bath, settings)?.f)
}
