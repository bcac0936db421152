//! Weak-coupling, non-Markovian equation of motion for the auxiliary
//! response operator `Y_{-s} = Tr_E[U_s ΔS ρ^eq U_s†]`.
//!
//! In the energy eigenbasis of the system,
//!
//! ```text
//! dY_nm/ds = -iΩ_nm Y_nm + Σ_kl (R + J)^{kl}_{nm}(s) Y_kl
//! ```
//!
//! where `R` builds up the bath memory over `[0, s]` and `J` carries the
//! initial system-bath correlations through the tails `W(s, ∞)`.
//! The coupling operator is `A = σ_z`.

use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, CorrelatorSeries, WKernel};
use crate::error::{Error, Result};
use crate::linalg::{c, flatten, sigma_z, unflatten, Mat2, Mat4, Vec4, C64, I};
use crate::sluice::{SystemOperators, ThermalState};

/// `|Y|` entries beyond this abort propagation.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Required bound on `h · max(|Ω|, |R + J|)`.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];

    pub fn index(self) -> usize {
        match self {
            Component::X => 0,
            Component::Y => 1,
            Component::Z => 2,
        }
    }
}

/// `Y` in the system energy eigenbasis at backward time `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YState {
    pub y: Mat2,
    pub s: f64,
}

impl YState {
    pub fn trace(&self) -> C64 {
        self.y.trace()
    }
}

/// Source of the initial condition `Y_0`.
pub trait InitialStateProvider {
    fn initial_y(&self, ops: &SystemOperators, rho: &ThermalState, component: Component) -> YState;
}

/// Factorized Gibbs initial state `Y_0 = (S_j - ⟨S_j⟩) ρ_S`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZerothOrder;

impl InitialStateProvider for ZerothOrder {
    fn initial_y(&self, ops: &SystemOperators, rho: &ThermalState, component: Component) -> YState {
        initial_y(ops, rho, component)
    }
}

pub fn initial_y(ops: &SystemOperators, rho: &ThermalState, component: Component) -> YState {
    let s = ops.to_eigenbasis(&ops.s[component.index()]);
    let r = rho.rho_eigen();
    let mean = (s * r).trace();
    YState {
        y: (s - Mat2::identity() * mean) * r,
        s: 0.0,
    }
}

type Tensor4 = [[[[C64; 2]; 2]; 2]; 2];

/// Relaxation and initial-value tensors at one time, indexed `[n][m][k][l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EomTensors {
    pub s: f64,
    pub r: Tensor4,
    pub j: Tensor4,
    pub a_matrix: Mat2,
}

impl EomTensors {
    pub fn max_abs(&self) -> f64 {
        let flat = |t: &Tensor4| {
            t.iter()
                .flatten()
                .flatten()
                .flatten()
                .fold(0.0f64, |acc, z| acc.max(z.norm()))
        };
        flat(&self.r).max(flat(&self.j))
    }
}

/// The generator data of one parameter point: eigenvalues, coupling in the
/// eigenbasis and the memory kernels at the three transition frequencies.
#[derive(Clone, Debug)]
pub struct EomSystem<'a> {
    series: &'a CorrelatorSeries,
    beta: f64,
    eigvals: [f64; 2],
    a: Mat2,
    /// kernels at `Ω = 0, ε_1-ε_0, ε_0-ε_1`
    kernels: [WKernel; 3],
}

/// Index into `kernels` for `Ω_nk`.
fn kernel_index(n: usize, k: usize) -> usize {
    match (n, k) {
        (1, 0) => 1,
        (0, 1) => 2,
        _ => 0,
    }
}

impl<'a> EomSystem<'a> {
    pub fn new(ops: &SystemOperators, series: &'a CorrelatorSeries, beta: f64) -> Result<Self> {
        ops.require_nondegenerate()?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", format!("{beta} must be positive")));
        }
        let gap = ops.gap();
        let kernels = [0.0, gap, -gap].map(|w| WKernel::new(series, w));
        Ok(EomSystem {
            series,
            beta,
            eigvals: ops.eigvals,
            a: ops.to_eigenbasis(&sigma_z()),
            kernels,
        })
    }

    pub fn for_bath(ops: &SystemOperators, series: &'a CorrelatorSeries, bath: &BathSpec) -> Result<Self> {
        Self::new(ops, series, bath.beta)
    }

    pub fn omega(&self, n: usize, m: usize) -> f64 {
        self.eigvals[n] - self.eigvals[m]
    }

    pub fn coupling(&self) -> &Mat2 {
        &self.a
    }

    /// Backward time beyond which the generator is constant to within
    /// `1e-20` of the memory tail; `None` for undamped (discrete) baths.
    pub fn freeze_time(&self) -> Option<f64> {
        let rate = self.series.slowest_rate();
        (rate > 0.0).then(|| 46.0 / rate)
    }

    fn memory(&self, s: f64) -> ([[C64; 2]; 2], [[C64; 2]; 2]) {
        let splits = self.kernels.map(|k| k.split(self.series, s));
        let mut head = [[C64::new(0.0, 0.0); 2]; 2];
        let mut tail = head;
        for n in 0..2 {
            for k in 0..2 {
                let (h, t) = splits[kernel_index(n, k)];
                head[n][k] = h;
                tail[n][k] = t;
            }
        }
        (head, tail)
    }

    pub fn tensors(&self, s: f64) -> EomTensors {
        let a = &self.a;
        let (w0, ws) = self.memory(s);
        // X_lm = W*_ml(s,∞) - e^{βΩ_lm} W_lm(s,∞)
        let mut x = [[C64::new(0.0, 0.0); 2]; 2];
        for l in 0..2 {
            for m in 0..2 {
                x[l][m] = ws[m][l].conj() - (self.beta * self.omega(l, m)).exp() * ws[l][m];
            }
        }
        let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut r = [[[[C64::new(0.0, 0.0); 2]; 2]; 2]; 2];
        let mut jt = r;
        for n in 0..2 {
            for m in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let mut rv = a[(n, k)] * a[(l, m)] * (w0[n][k] + w0[m][l].conj());
                        let mut jv = a[(n, k)] * a[(l, m)] * x[l][m];
                        for j in 0..2 {
                            rv -= delta(l, m) * a[(n, j)] * a[(j, k)] * w0[j][k];
                            rv -= delta(n, k) * a[(l, j)] * a[(j, m)] * w0[j][l].conj();
                            jv -= delta(n, k) * a[(l, j)] * a[(j, m)] * x[l][j];
                        }
                        r[n][m][k][l] = rv;
                        jt[n][m][k][l] = jv;
                    }
                }
            }
        }
        EomTensors {
            s,
            r,
            j: jt,
            a_matrix: self.a,
        }
    }

    /// Flattened generator acting on `vec(Y)` with index `2n + m`.
    pub fn generator(&self, s: f64) -> Mat4 {
        let t = self.tensors(s);
        let mut g = Mat4::zeros();
        for n in 0..2 {
            for m in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        g[(2 * n + m, 2 * k + l)] = t.r[n][m][k][l] + t.j[n][m][k][l];
                    }
                }
                g[(2 * n + m, 2 * n + m)] -= I * self.omega(n, m);
            }
        }
        g
    }

    /// Scale entering the step-size precondition.
    pub fn generator_scale(&self) -> f64 {
        let mut times = vec![0.0, 1e-3];
        if let Some(t) = self.freeze_time() {
            times.push(t);
        }
        times
            .into_iter()
            .map(|s| self.generator(s).iter().fold(0.0f64, |acc, z| acc.max(z.norm())))
            .fold(self.omega(1, 0).abs(), f64::max)
    }

    pub fn check_step(&self, h: f64) -> Result<()> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", format!("{h} must be positive")));
        }
        let scale = self.generator_scale();
        if h * scale >= STABILITY_LIMIT {
            return Err(Error::StepTooLarge { step: h, scale });
        }
        Ok(())
    }

    /// Classic RK4 from `y0.s` to `s_max`, returning every step.
    pub fn propagate(&self, y0: &YState, s_max: f64, h: f64) -> Result<Vec<YState>> {
        self.check_step(h)?;
        let steps = ((s_max - y0.s) / h).round().max(0.0) as usize;
        let mut out = Vec::with_capacity(steps + 1);
        out.push(*y0);
        let mut stepper = Stepper::new(self, [flatten(&y0.y)].to_vec(), y0.s, h);
        for _ in 0..steps {
            let s = stepper.step()?;
            out.push(YState {
                y: unflatten(&stepper.states()[0]),
                s,
            });
        }
        Ok(out)
    }
}

/// RK4 integrator advancing several `Y` vectors under one generator,
/// reusing the end-of-step generator as the next start.
pub struct Stepper<'s, 'a> {
    system: &'s EomSystem<'a>,
    ys: Vec<Vec4>,
    s0: f64,
    steps: usize,
    s: f64,
    h: f64,
    start: Mat4,
    frozen: Option<Mat4>,
}

impl<'s, 'a> Stepper<'s, 'a> {
    pub fn new(system: &'s EomSystem<'a>, ys: Vec<Vec4>, s: f64, h: f64) -> Self {
        Stepper {
            system,
            ys,
            s0: s,
            steps: 0,
            s,
            h,
            start: system.generator(s),
            frozen: None,
        }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn states(&self) -> &[Vec4] {
        &self.ys
    }

    /// `true` once every stage time is past the freeze time.
    pub fn is_frozen(&self) -> bool {
        self.frozen.is_some()
    }

    pub fn generator(&self) -> &Mat4 {
        &self.start
    }

    fn at(&self, s: f64) -> Mat4 {
        match self.frozen {
            Some(m) => m,
            None => self.system.generator(s),
        }
    }

    pub fn step(&mut self) -> Result<f64> {
        let h = self.h;
        let mid = self.at(self.s + 0.5 * h);
        let end = self.at(self.s + h);
        let half = c(0.5 * h);
        let sixth = c(h / 6.0);
        for y in self.ys.iter_mut() {
            let k1 = self.start * *y;
            let k2 = mid * (*y + k1 * half);
            let k3 = mid * (*y + k2 * half);
            let k4 = end * (*y + k3 * c(h));
            *y += (k1 + (k2 + k3) * c(2.0) + k4) * sixth;
            if y.iter().any(|z| !(z.norm() <= DIVERGENCE_LIMIT)) {
                return Err(Error::Diverged { s: self.s + h });
            }
        }
        self.steps += 1;
        self.s = self.s0 + self.steps as f64 * h;
        self.start = end;
        if self.frozen.is_none() {
            if let Some(t) = self.system.freeze_time() {
                if self.s >= t {
                    self.frozen = Some(end);
                }
            }
        }
        Ok(self.s)
    }
}
