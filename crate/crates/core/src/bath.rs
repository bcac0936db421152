//! Ohmic bath with Lorentz-Drude cutoff, `J(ω) = ηω / (1 + ω²/ω_D²)`.
//!
//! The correlator is a sum of damped exponentials
//! `C(s) = Σ_k c_k e^{-μ_k s}` (one Drude pole plus the Matsubara ladder
//! `ν_l = 2πl/β`), so the memory integrals
//! `W(Ω; s1, s2) = ∫_{s1}^{s2} e^{-iΩs} C(s) ds` are closed-form term by term.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Used when the caller does not pick a Matsubara truncation.
pub const DEFAULT_MATSUBARA_TERMS: usize = 400;

/// Tail terms with `e^{-Re μ s}` below `e^{-46} ≈ 1e-20` are dropped.
const LADDER_CUTOFF: f64 = 46.0;

/// How the Matsubara sum beyond the explicit `L` terms is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MatsubaraTail {
    /// Exact: the `s = 0` remainder `Σ_{l>L} c_l/(ν_l + iΩ)` is added in
    /// closed form (Euler-Maclaurin) and, for `s > 0`, the ladder is continued
    /// until the terms are exponentially negligible.
    #[default]
    Remainder,
    /// Plain `L`-term truncation.
    Truncated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub eta: f64,
    pub omega_d: f64,
    pub beta: f64,
    pub matsubara_terms: usize,
    #[serde(default)]
    pub tail: MatsubaraTail,
}

impl BathSpec {
    /// Bath at temperature `kt` (`k_B T` in `E_C`) with the default
    /// truncation and remainder.
    pub fn new(eta: f64, omega_d: f64, kt: f64) -> Result<Self> {
        if !(kt.is_finite() && kt > 0.0) {
            return Err(Error::invalid("temperature", format!("{kt} must be positive")));
        }
        Self::from_beta(eta, omega_d, 1.0 / kt)
    }

    pub fn from_beta(eta: f64, omega_d: f64, beta: f64) -> Result<Self> {
        let spec = BathSpec {
            eta,
            omega_d,
            beta,
            matsubara_terms: DEFAULT_MATSUBARA_TERMS,
            tail: MatsubaraTail::Remainder,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_matsubara_terms(mut self, terms: usize) -> Self {
        self.matsubara_terms = terms;
        self
    }

    pub fn with_tail(mut self, tail: MatsubaraTail) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn kt(&self) -> f64 {
        1.0 / self.beta
    }

    /// First Matsubara frequency `2π/β`.
    pub fn nu1(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.beta
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::invalid("eta", format!("{} must be non-negative", self.eta)));
        }
        if !(self.omega_d.is_finite() && self.omega_d > 0.0) {
            return Err(Error::invalid(
                "omega_d",
                format!("{} must be positive", self.omega_d),
            ));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::invalid("beta", format!("{} must be positive", self.beta)));
        }
        if self.matsubara_terms == 0 {
            return Err(Error::invalid("matsubara_terms", "must be at least 1"));
        }
        let nu1 = self.nu1();
        let index = (self.omega_d / nu1).round();
        if index >= 1.0 && (self.omega_d - index * nu1).abs() <= 1e-9 {
            return Err(Error::MatsubaraPole {
                omega_d: self.omega_d,
                index: index as usize,
            });
        }
        Ok(())
    }

    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.eta * omega / (1.0 + (omega / self.omega_d).powi(2))
    }

    /// Smallest `L` for which the next Matsubara term's contribution to
    /// `W(0; 0, ∞)` falls below `rel_tol` of the running sum.
    ///
    /// The partial sums of a plain truncation converge only as `1/L`, so
    /// for small `rel_tol` this can be very large; with
    /// [`MatsubaraTail::Remainder`] the explicit `L` hardly matters.
    pub fn truncation_rule(&self, rel_tol: f64, max_terms: usize) -> usize {
        let drude = drude_weight(self);
        let mut sum = drude / C64::new(self.omega_d, 0.0);
        for l in 1..=max_terms {
            let nu = l as f64 * self.nu1();
            sum += matsubara_weight(self, nu) / nu;
            let next_nu = (l + 1) as f64 * self.nu1();
            let next = matsubara_weight(self, next_nu) / next_nu;
            if next.abs() < rel_tol * sum.norm() {
                return l;
            }
        }
        max_terms
    }
}

fn drude_weight(b: &BathSpec) -> C64 {
    let x = 0.5 * b.beta * b.omega_d;
    0.5 * b.eta * b.omega_d * b.omega_d * C64::new(1.0 / x.tan(), -1.0)
}

fn matsubara_weight(b: &BathSpec, nu: f64) -> f64 {
    let r = nu / b.omega_d;
    -2.0 * b.eta / b.beta * nu / (1.0 - r * r)
}

/// One exponential `c e^{-μ s}` of the correlator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm {
    pub mu: C64,
    pub c: C64,
}

impl ExpTerm {
    /// `∫_s^∞ e^{-iΩt} c e^{-μt} dt`, with the upper limit dropped for
    /// purely oscillatory terms (Abel regularization).
    fn tail(&self, omega: f64, s: f64) -> C64 {
        let z = self.mu + C64::new(0.0, omega);
        if s == 0.0 {
            self.c / z
        } else {
            self.c * (-z * s).exp() / z
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Ladder {
    /// `2η/β`
    prefactor: f64,
    nu1: f64,
    omega_d: f64,
    explicit: usize,
    tail: MatsubaraTail,
}

/// Below this `ν_1 s` the damped ladder is summed by Euler-Maclaurin
/// instead of term by term (which would need `46/(ν_1 s)` terms).
const DIRECT_LADDER_RATE: f64 = 0.05;

/// `e^{z} E_1(z)` for `Re z > 0`.
fn scaled_e1(z: C64) -> C64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if z.norm() <= 2.0 {
        let mut term = C64::new(1.0, 0.0);
        let mut sum = C64::new(0.0, 0.0);
        for k in 1..60 {
            term *= -z / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.norm() < 1e-17 * sum.norm().max(1e-300) {
                break;
            }
        }
        return z.exp() * (-EULER_GAMMA - z.ln() - sum);
    }
    // modified Lentz on the continued fraction
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = C64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

/// `Σ_{l≥n} e^{-ν_l s} Σ_i A_i/(ν_l + a_i)` by Euler-Maclaurin, valid for
/// `ν_1 s` small and `|ν_n + a_i| ≫ ν_1`.
fn damped_fraction_sum(nu1: f64, s: f64, n: usize, fractions: &[(C64, C64)]) -> C64 {
    let kappa = nu1 * s;
    let x = n as f64 * nu1;
    let envelope = (-kappa * n as f64).exp();
    const BERNOULLI: [(usize, f64); 4] = [
        (1, 1.0 / 12.0),
        (3, -1.0 / 720.0),
        (5, 1.0 / 30240.0),
        (7, -1.0 / 1209600.0),
    ];
    fractions
        .iter()
        .map(|&(coef, shift)| {
            let y = x + shift;
            // ∫_n^∞ e^{-κt}/(ν_1 t + a) dt
            let integral = envelope * scaled_e1(s * y) / nu1;
            // g^{(j)}(n) of g = 1/(ν_1 t + a)
            let g = |j: usize| {
                let fact: f64 = (1..=j).map(|k| k as f64).product();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * fact * nu1.powi(j as i32) / y.powi(j as i32 + 1)
            };
            let deriv = |m: usize| -> C64 {
                let mut binom = 1.0;
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..=m {
                    acc += binom * (-kappa).powi((m - j) as i32) * g(j);
                    binom *= (m - j) as f64 / (j + 1) as f64;
                }
                acc * envelope
            };
            let corrections: C64 = BERNOULLI.iter().map(|&(m, b)| b * deriv(m)).sum();
            coef * (integral + 0.5 * deriv(0) - corrections)
        })
        .sum()
}

impl Ladder {
    fn weight(&self, nu: f64) -> f64 {
        let r = nu / self.omega_d;
        -self.prefactor * nu / (1.0 - r * r)
    }

    /// First index from which the partial-fraction expansion in powers of
    /// `ν_1/ν_l` is safe.
    fn reach(&self, omega: f64, first: usize) -> usize {
        let reach = 4.0 * (self.omega_d + omega.abs()) / self.nu1;
        first.max(reach.ceil() as usize + 1)
    }

    /// `Σ_{l≥first} f(l) e^{-ν_l s}` until the exponentials drop below
    /// `e^{-46}`, with `f` the term shape and `fractions` its partial
    /// fractions (scaled by `2ηω_D²/β`) used once the sum grows long.
    fn damped<F: Fn(f64) -> C64>(&self, s: f64, omega: f64, f: F, fractions: &[(C64, C64)]) -> C64 {
        let first = self.explicit + 1;
        let ratio = (-self.nu1 * s).exp();
        let direct = |from: usize, to: Option<usize>| {
            let mut decay = (-(from as f64) * self.nu1 * s).exp();
            let mut acc = C64::new(0.0, 0.0);
            let mut l = from;
            while to.map_or((l as f64) * self.nu1 * s <= LADDER_CUTOFF, |t| l < t) {
                acc += f(l as f64 * self.nu1) * decay;
                decay *= ratio;
                l += 1;
            }
            acc
        };
        if self.nu1 * s >= DIRECT_LADDER_RATE {
            return direct(first, None);
        }
        let n = self.reach(omega, first);
        let scale = self.prefactor * self.omega_d * self.omega_d;
        direct(first, Some(n)) + scale * damped_fraction_sum(self.nu1, s, n, fractions)
    }

    /// Partial fractions of `c_l/(ν_l + iΩ)` in units of `2ηω_D²/β`.
    fn fractions(&self, omega: f64) -> [(C64, C64); 3] {
        let wd = self.omega_d;
        let iw = C64::new(0.0, omega);
        [
            (0.5 / (wd + iw), C64::new(-wd, 0.0)),
            (0.5 / (iw - wd), C64::new(wd, 0.0)),
            (iw / (omega * omega + wd * wd), iw),
        ]
    }

    /// Ladder part of `C(s)` beyond the explicit terms, `s > 0`.
    fn correlator_tail(&self, s: f64) -> f64 {
        // c_l = 2ηω_D²/β · ½[1/(ν_l - ω_D) + 1/(ν_l + ω_D)]
        let wd = self.omega_d;
        let half = C64::new(0.5, 0.0);
        let fr = [(half, C64::new(-wd, 0.0)), (half, C64::new(wd, 0.0))];
        self.damped(s, 0.0, |nu| C64::new(self.weight(nu), 0.0), &fr).re
    }

    /// `Σ_{l≥n} c_l / (ν_l + iΩ)` by Euler-Maclaurin on the partial
    /// fractions `c_l/(ν_l+iΩ) = 2ηω_D²/β · Σ_i A_i/(ν_l + a_i)`.
    fn remainder(&self, omega: f64, n: usize) -> C64 {
        let (wd, nu1) = (self.omega_d, self.nu1);
        let fr = self.fractions(omega);
        let (coef, shift) = (fr.map(|f| f.0), fr.map(|f| f.1));
        let x = n as f64 * nu1;
        // g^{(m)}(n) = Σ A_i (-1)^m m! ν1^m / (ν1 n + a_i)^{m+1}
        let deriv = |m: i32| -> C64 {
            let fact: f64 = (1..=m).map(f64::from).product();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            (0..3)
                .map(|i| coef[i] * sign * fact * nu1.powi(m) / (x + shift[i]).powi(m + 1))
                .sum()
        };
        let integral: C64 = -(0..3).map(|i| coef[i] * (x + shift[i]).ln()).sum::<C64>() / nu1;
        // B_2k / (2k)!
        const BERNOULLI: [(i32, f64); 4] = [
            (1, 1.0 / 12.0),
            (3, -1.0 / 720.0),
            (5, 1.0 / 30240.0),
            (7, -1.0 / 1209600.0),
        ];
        let corrections: C64 = BERNOULLI.iter().map(|&(m, b)| b * deriv(m)).sum();
        let total = integral + 0.5 * deriv(0) - corrections;
        self.prefactor * wd * wd * total
    }

    /// Contribution of `l > explicit` to `W(Ω; s, ∞)`.
    fn beyond_explicit(&self, omega: f64, s: f64) -> C64 {
        if self.tail == MatsubaraTail::Truncated {
            return C64::new(0.0, 0.0);
        }
        let first = self.explicit + 1;
        let iw = C64::new(0.0, omega);
        if s == 0.0 {
            // keep the partial-fraction expansion well inside its radius
            let n = self.reach(omega, first);
            let direct: C64 = (first..n)
                .map(|l| {
                    let nu = l as f64 * self.nu1;
                    self.weight(nu) / (nu + iw)
                })
                .sum();
            return direct + self.remainder(omega, n);
        }
        let shape = |nu: f64| self.weight(nu) / (nu + iw);
        self.damped(s, omega, shape, &self.fractions(omega)) * (-iw * s).exp()
    }
}

/// Exponential representation of the bath correlator.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorSeries {
    terms: Vec<ExpTerm>,
    ladder: Option<Ladder>,
}

impl CorrelatorSeries {
    /// Drude pole and `L` explicit Matsubara terms of `b`.
    pub fn drude(b: &BathSpec) -> Result<Self> {
        b.validate()?;
        let mut terms = Vec::with_capacity(b.matsubara_terms + 1);
        terms.push(ExpTerm {
            mu: C64::new(b.omega_d, 0.0),
            c: drude_weight(b),
        });
        terms.extend((1..=b.matsubara_terms).map(|l| {
            let nu = l as f64 * b.nu1();
            ExpTerm {
                mu: C64::new(nu, 0.0),
                c: C64::new(matsubara_weight(b, nu), 0.0),
            }
        }));
        Ok(CorrelatorSeries {
            terms,
            ladder: Some(Ladder {
                prefactor: 2.0 * b.eta / b.beta,
                nu1: b.nu1(),
                omega_d: b.omega_d,
                explicit: b.matsubara_terms,
                tail: b.tail,
            }),
        })
    }

    /// Correlator of independent thermal oscillators coupled through
    /// `Σ c_α x_α` with unit masses: `(ω_α, c_α)` pairs.
    pub fn from_modes(modes: &[(f64, f64)], beta: f64) -> Self {
        let terms = modes
            .iter()
            .flat_map(|&(w, c)| {
                let n = 1.0 / (beta * w).exp_m1();
                let a = c * c / (2.0 * w);
                [
                    ExpTerm {
                        mu: C64::new(0.0, w),
                        c: C64::new(a * (n + 1.0), 0.0),
                    },
                    ExpTerm {
                        mu: C64::new(0.0, -w),
                        c: C64::new(a * n, 0.0),
                    },
                ]
            })
            .collect();
        CorrelatorSeries {
            terms,
            ladder: None,
        }
    }

    pub fn exponents(&self) -> impl Iterator<Item = C64> + '_ {
        self.terms.iter().map(|t| t.mu)
    }

    pub fn weights(&self) -> impl Iterator<Item = C64> + '_ {
        self.terms.iter().map(|t| t.c)
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    /// Slowest decay rate among the exponentials (0 for undamped modes).
    pub fn slowest_rate(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.mu.re)
            .fold(f64::INFINITY, f64::min)
    }

    /// `C(s)` for `s ≥ 0`. At `s = 0` only the explicit terms are summed
    /// (the exact Drude value diverges logarithmically).
    pub fn correlator(&self, s: f64) -> C64 {
        let explicit: C64 = self.terms.iter().map(|t| t.c * (-t.mu * s).exp()).sum();
        match self.ladder {
            Some(lad) if s > 0.0 && lad.tail == MatsubaraTail::Remainder => {
                explicit + lad.correlator_tail(s)
            }
            _ => explicit,
        }
    }

    /// `W(Ω; s, ∞) = ∫_s^∞ e^{-iΩt} C(t) dt`.
    pub fn w_tail(&self, omega: f64, s: f64) -> C64 {
        let iw = C64::new(0.0, omega);
        let mut acc = C64::new(0.0, 0.0);
        if s == 0.0 {
            acc = self.terms.iter().map(|t| t.tail(omega, 0.0)).sum();
        } else {
            let phase = (-iw * s).exp();
            for (i, t) in self.terms.iter().enumerate() {
                if self.ladder.is_some() && t.mu.re * s > LADDER_CUTOFF {
                    // Drude pole first, then Matsubara rates in ascending order
                    if i == 0 {
                        continue;
                    }
                    break;
                }
                let z = t.mu + iw;
                acc += t.c * (-t.mu * s).exp() * phase / z;
            }
        }
        if let Some(lad) = self.ladder {
            acc += lad.beyond_explicit(omega, s);
        }
        acc
    }

    /// Bath spectrum `γ(Ω) = ∫_{-∞}^{∞} e^{-iΩs} C(s) ds = 2 Re W(Ω; 0, ∞)`.
    pub fn spectrum(&self, omega: f64) -> f64 {
        2.0 * self.w_tail(omega, 0.0).re
    }
}

/// `W(Ω; s1, s2) = ∫_{s1}^{s2} e^{-iΩs} C(s) ds`; `s2` may be infinite.
pub fn w_integral(series: &CorrelatorSeries, omega: f64, s1: f64, s2: f64) -> C64 {
    assert!(0.0 <= s1 && s1 <= s2, "need 0 <= s1 <= s2, got {s1}, {s2}");
    if s1 == s2 {
        return C64::new(0.0, 0.0);
    }
    let upper = if s2.is_infinite() {
        C64::new(0.0, 0.0)
    } else {
        series.w_tail(omega, s2)
    };
    series.w_tail(omega, s1) - upper
}

/// Detailed-balance residual `|γ(Ω) - e^{-βΩ} γ(-Ω)| / |γ(Ω)|`.
///
/// With `γ(Ω) = ∫ e^{-iΩs} C(s) ds`, a thermal bath absorbs energy `Ω`
/// at the rate `γ(-Ω)` and emits it at `γ(Ω)`, hence the Boltzmann factor
/// on the absorption side.
pub fn kms_check(series: &CorrelatorSeries, beta: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    let g_plus = series.spectrum(omega);
    let g_minus = series.spectrum(-omega);
    (g_plus - (-beta * omega).exp() * g_minus).abs() / g_plus.abs()
}

/// Memory integrals at one transition frequency, with the `s = 0`
/// tail cached.
#[derive(Clone, Copy, Debug)]
pub struct WKernel {
    pub omega: f64,
    full: C64,
}

impl WKernel {
    pub fn new(series: &CorrelatorSeries, omega: f64) -> Self {
        WKernel {
            omega,
            full: series.w_tail(omega, 0.0),
        }
    }

    /// `(W(Ω; 0, s), W(Ω; s, ∞))`.
    pub fn split(&self, series: &CorrelatorSeries, s: f64) -> (C64, C64) {
        if s == 0.0 {
            return (C64::new(0.0, 0.0), self.full);
        }
        let tail = series.w_tail(self.omega, s);
        (self.full - tail, tail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{adaptive, drude_correlator_oracle};
    use proptest::prelude::*;

    fn bath(eta: f64, wd: f64, kt: f64) -> BathSpec {
        BathSpec::new(eta, wd, kt).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(BathSpec::new(-0.1, 10.0, 0.25).is_err());
        assert!(BathSpec::new(0.01, 0.0, 0.25).is_err());
        assert!(BathSpec::new(0.01, 10.0, 0.0).is_err());
        // ω_D = ν_2 at k_BT = 10/(4π)
        let kt = 10.0 / (4.0 * std::f64::consts::PI);
        match BathSpec::new(0.01, 10.0, kt) {
            Err(Error::MatsubaraPole { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected pole error, got {other:?}"),
        }
    }

    #[test]
    fn series_weights() {
        let b = bath(0.01, 10.0, 0.5);
        let s = CorrelatorSeries::drude(&b).unwrap();
        let c: Vec<_> = s.weights().collect();
        let mu: Vec<_> = s.exponents().collect();
        assert_eq!(c.len(), 401);
        assert!((c[0].im + 0.5).abs() < 1e-15);
        assert!((c[0].re - 0.5 / 10f64.tan()).abs() < 1e-14);
        let nu1 = 2.0 * std::f64::consts::PI * 0.5;
        assert!((mu[1].re - nu1).abs() < 1e-15);
        let expected = -2.0 * 0.01 * 0.5 * nu1 / (1.0 - (nu1 / 10.0).powi(2));
        assert!((c[1].re - expected).abs() < 1e-16);
        assert!(s.exponents().all(|m| m.re > 0.0));
    }

    #[test]
    fn imaginary_part_is_temperature_independent() {
        for kt in [0.05, 0.25, 2.0] {
            let s = CorrelatorSeries::drude(&bath(0.01, 10.0, kt)).unwrap();
            for t in [0.01, 0.3, 2.0] {
                let im = s.correlator(t).im;
                let expected = -0.5 * 0.01 * 100.0 * (-10.0 * t).exp();
                assert!((im - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn correlator_matches_spectral_quadrature() {
        let b = bath(0.01, 10.0, 0.5);
        let s = CorrelatorSeries::drude(&b).unwrap();
        let c = s.correlator(0.5);
        let oracle = drude_correlator_oracle(&b, 0.5);
        assert!((c - oracle).norm() <= 1e-6 * oracle.norm(), "{c} vs {oracle}");
    }

    #[test]
    fn correlator_on_log_grid() {
        // below ~1e-9 the oracle itself loses relative accuracy to
        // cancellation between its zero-temperature and thermal parts
        let b = bath(0.01, 10.0, 0.5);
        let s = CorrelatorSeries::drude(&b).unwrap();
        let n = 17;
        for i in 0..n {
            let t = 1e-3 * (20.0f64 / 1e-3).powf(i as f64 / (n - 1) as f64);
            let c = s.correlator(t);
            let oracle = drude_correlator_oracle(&b, t);
            let err = (c - oracle).norm();
            assert!(
                err <= 1e-5 * oracle.norm() || err <= 1e-11,
                "s = {t}: {c} vs {oracle}"
            );
        }
    }

    #[test]
    fn correlator_decays() {
        let s = CorrelatorSeries::drude(&bath(0.01, 10.0, 0.25)).unwrap();
        let rate = 2.0 * std::f64::consts::PI * 0.25;
        let a = s.correlator(10.0).norm();
        let b = s.correlator(12.0).norm();
        assert!(b < a);
        assert!(((a / b).ln() / 2.0 - rate).abs() < 1e-3 * rate);
    }

    #[test]
    fn empty_interval_is_zero() {
        let s = CorrelatorSeries::drude(&bath(0.01, 10.0, 0.25)).unwrap();
        assert_eq!(w_integral(&s, 0.4, 1.5, 1.5), C64::new(0.0, 0.0));
        assert_eq!(w_integral(&s, 0.4, 0.0, 0.0), C64::new(0.0, 0.0));
    }

    #[test]
    fn w_matches_time_quadrature() {
        let b = bath(0.01, 10.0, 0.5);
        let s = CorrelatorSeries::drude(&b).unwrap();
        let w = w_integral(&s, 1.3, 0.0, 2.0);
        // s = 2u² absorbs the logarithmic singularity of C at 0
        let oracle = adaptive(
            |u| {
                let t = 2.0 * u * u;
                C64::new(0.0, -1.3 * t).exp() * drude_correlator_oracle(&b, t) * (4.0 * u)
            },
            0.0,
            1.0,
            1e-11,
        );
        assert!((w - oracle).norm() <= 1e-8, "{w} vs {oracle}");
    }

    #[test]
    fn kms_residual_zero_frequency() {
        let s = CorrelatorSeries::drude(&bath(0.01, 10.0, 0.25)).unwrap();
        assert_eq!(kms_check(&s, 4.0, 0.0), 0.0);
    }

    #[test]
    fn kms_at_l400() {
        let b = bath(0.01, 10.0, 0.25);
        let s = CorrelatorSeries::drude(&b).unwrap();
        for omega in [0.05, 0.33, 1.0, 3.0] {
            let r = kms_check(&s, b.beta, omega);
            assert!(r <= 1e-4, "Ω = {omega}: residual {r}");
        }
    }

    #[test]
    fn spectrum_matches_golden_rule() {
        let b = bath(0.01, 10.0, 0.25);
        let s = CorrelatorSeries::drude(&b).unwrap();
        for omega in [0.2f64, 0.7, 2.5] {
            let n = 1.0 / (b.beta * omega).exp_m1();
            let absorbed = 2.0 * b.spectral_density(omega) * (n + 1.0);
            let emitted = 2.0 * b.spectral_density(omega) * n;
            assert!((s.spectrum(-omega) - absorbed).abs() < 1e-10 * absorbed);
            assert!((s.spectrum(omega) - emitted).abs() < 1e-10 * emitted);
        }
    }

    #[test]
    fn truncation_residual_decreases_with_l() {
        let b = bath(0.01, 10.0, 0.25).with_tail(MatsubaraTail::Truncated);
        let mut last = f64::INFINITY;
        // below a few hundred terms the residual is not yet in its 1/L regime
        for l in [400, 800, 1600, 3200, 6400] {
            let s = CorrelatorSeries::drude(&b.with_matsubara_terms(l)).unwrap();
            let r = kms_check(&s, b.beta, 0.33);
            assert!(r < last, "L = {l}: {r} >= {last}");
            last = r;
        }
    }

    #[test]
    fn remainder_matches_long_direct_sum() {
        let b = bath(0.01, 10.0, 0.25);
        let long = CorrelatorSeries::drude(
            &b.with_matsubara_terms(20_000).with_tail(MatsubaraTail::Truncated),
        )
        .unwrap();
        let short = CorrelatorSeries::drude(&b.with_matsubara_terms(200)).unwrap();
        for omega in [0.0, 0.4, -2.0] {
            let lad = short.ladder.unwrap();
            let direct: C64 = (20_001..2_000_000)
                .map(|l| {
                    let nu = l as f64 * lad.nu1;
                    lad.weight(nu) / C64::new(nu, omega)
                })
                .sum();
            // Σ_{l≥2e6} w(ν)/ν with w(ν) ≈ const·ν^-1 far above ω_D
            let nu_m = 2e6 * lad.nu1;
            let far = lad.weight(nu_m) * nu_m / (lad.nu1 * lad.nu1) / (2e6 - 0.5);
            let reference = long.w_tail(omega, 0.0) + direct + far;
            let w = short.w_tail(omega, 0.0);
            assert!((w - reference).norm() < 2e-9, "{w} vs {reference}");
        }
    }

    fn direct_ladder(lad: &Ladder, s: f64, shape: impl Fn(f64) -> C64) -> C64 {
        (lad.explicit + 1..)
            .map(|l| l as f64 * lad.nu1)
            .take_while(|nu| nu * s <= 60.0)
            .map(|nu| shape(nu) * (-nu * s).exp())
            .sum()
    }

    #[test]
    fn short_time_ladder_matches_direct_sum() {
        let b = bath(0.01, 10.0, 0.25);
        let lad = CorrelatorSeries::drude(&b).unwrap().ladder.unwrap();
        for s in [1e-2, 1e-3, 5e-5] {
            let direct = direct_ladder(&lad, s, |nu| C64::new(lad.weight(nu), 0.0)).re;
            let em = lad.correlator_tail(s);
            assert!((em - direct).abs() <= 1e-10 * direct.abs(), "s = {s}: {em} vs {direct}");
            for omega in [0.0, 0.7, -3.0] {
                let iw = C64::new(0.0, omega);
                let direct = direct_ladder(&lad, s, |nu| lad.weight(nu) / (nu + iw)) * (-iw * s).exp();
                let em = lad.beyond_explicit(omega, s);
                assert!((em - direct).norm() <= 1e-10 * direct.norm(), "s = {s}, Ω = {omega}");
            }
        }
    }

    #[test]
    fn ladder_continuous_across_switch() {
        let b = bath(0.01, 10.0, 0.25);
        let series = CorrelatorSeries::drude(&b).unwrap();
        let lad = series.ladder.unwrap();
        let s = DIRECT_LADDER_RATE / lad.nu1;
        let (lo, hi) = (series.correlator(s * (1.0 - 1e-9)), series.correlator(s * (1.0 + 1e-9)));
        assert!((lo - hi).norm() < 1e-8 * lo.norm());
    }

    #[test]
    fn complex_exponential_integral() {
        // e^z E1(z) against ∫_0^∞ e^{-u}/(u + z) du
        for z in [C64::new(0.3, 0.0), C64::new(1.5, -1.2), C64::new(4.0, 3.0), C64::new(0.01, 0.5)] {
            let re = adaptive(|u| C64::new((-u).exp(), 0.0) / (u + z), 0.0, 60.0, 1e-14);
            assert!((scaled_e1(z) - re).norm() < 1e-12 * re.norm(), "{z}");
        }
    }

    #[test]
    fn truncation_rule_is_monotone_in_tolerance() {
        let b = bath(0.01, 10.0, 0.25);
        let loose = b.truncation_rule(1e-4, 1_000_000);
        let tight = b.truncation_rule(1e-6, 1_000_000);
        assert!(loose < tight);
    }

    #[test]
    fn kernel_split_is_consistent() {
        let s = CorrelatorSeries::drude(&bath(0.01, 10.0, 0.25)).unwrap();
        let k = WKernel::new(&s, 0.7);
        let (a, b) = k.split(&s, 0.8);
        assert!((a - w_integral(&s, 0.7, 0.0, 0.8)).norm() < 1e-15);
        assert!((b - w_integral(&s, 0.7, 0.8, f64::INFINITY)).norm() < 1e-15);
    }

    #[test]
    fn discrete_modes_satisfy_detailed_balance() {
        let beta = 2.0;
        let s = CorrelatorSeries::from_modes(&[(1.5, 0.2), (3.0, 0.1)], beta);
        let terms = s.terms();
        for pair in terms.chunks(2) {
            let ratio = pair[1].c.re / pair[0].c.re;
            let w = pair[0].mu.im;
            assert!((ratio - (-beta * w).exp()).abs() < 1e-14);
        }
        // C(-s) = C(s)* as ⟨x(s)x⟩ for a Hermitian x
        let c0 = s.correlator(0.0);
        assert!(c0.im.abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn interval_additivity(omega in -3.0f64..3.0, t in 0.001f64..30.0) {
            let s = CorrelatorSeries::drude(&bath(0.01, 10.0, 0.25)).unwrap();
            let lhs = w_integral(&s, omega, 0.0, t) + w_integral(&s, omega, t, f64::INFINITY);
            let rhs = w_integral(&s, omega, 0.0, f64::INFINITY);
            prop_assert!((lhs - rhs).norm() <= 1e-15 * (1.0 + rhs.norm()));
        }

        #[test]
        fn tail_consistent_with_correlator(omega in -3.0f64..3.0, t in 0.05f64..5.0) {
            // d/ds W(Ω; s, ∞) = -e^{-iΩs} C(s)
            let s = CorrelatorSeries::drude(&bath(0.01, 10.0, 0.5)).unwrap();
            let h = 1e-5 * t;
            let deriv = (s.w_tail(omega, t + h) - s.w_tail(omega, t - h)) / (2.0 * h);
            let expected = -C64::new(0.0, -omega * t).exp() * s.correlator(t);
            prop_assert!((deriv - expected).norm() <= 1e-6 * (1.0 + expected.norm()));
        }
    }
}
