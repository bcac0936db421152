//! Test-only numerical integration utilities and brute-force oracles.

use num_complex::Complex64 as C64;

use crate::bath::BathSpec;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let pair = f(c - x) + f(c + x);
        kronrod += pair * WGK[i];
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).norm())
}

struct Part {
    lo: f64,
    hi: f64,
    value: C64,
    err: f64,
}

impl PartialEq for Part {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Part {}
impl PartialOrd for Part {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Part {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15): bisects the interval with the
/// largest error estimate until the total estimate is below `tol` (or the
/// rounding floor of the summands) or the interval budget is spent.
pub fn adaptive<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, tol: f64) -> C64 {
    const MAX_INTERVALS: usize = 5_000;
    let part = |lo: f64, hi: f64| {
        let (value, err) = gk15(&f, lo, hi);
        Part { lo, hi, value, err }
    };
    let first = part(a, b);
    let (mut err, mut mass) = (first.err, first.value.norm());
    let mut heap = std::collections::BinaryHeap::from([first]);
    while err > tol.max(1e-15 * mass) && heap.len() < MAX_INTERVALS {
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            err -= worst.err;
            heap.push(Part { err: 0.0, ..worst });
            continue;
        }
        let (l, r) = (part(worst.lo, mid), part(mid, worst.hi));
        err += l.err + r.err - worst.err;
        mass += l.value.norm() + r.value.norm() - worst.value.norm();
        heap.push(l);
        heap.push(r);
    }
    heap.iter().map(|p| p.value).sum()
}

pub fn adaptive_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive(|x| C64::new(f(x), 0.0), a, b, tol).re
}

/// `e^{-x} Ei(x)` for `x > 0` from the power series (all terms positive).
fn scaled_ei(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut term = 1.0;
    let mut sum = 0.0;
    let mut k = 1.0;
    loop {
        term *= x / k;
        let add = term / k;
        sum += add;
        if add < 1e-17 * sum && k > x {
            break;
        }
        k += 1.0;
    }
    (-x).exp() * (EULER_GAMMA + x.ln() + sum)
}

/// `e^{x} E1(x) = ∫_0^∞ e^{-u} / (u + x) du`.
fn scaled_e1(x: f64) -> f64 {
    adaptive_real(|u| (-u).exp() / (u + x), 0.0, 60.0, 1e-15)
}

/// `C(s)` of the Drude bath from its spectral representation
/// `(1/π) ∫ J(ω) [coth(βω/2) cos ωs - i sin ωs] dω`, independent of any
/// pole expansion.
///
/// `coth = 1 + 2n(ω)`: the zero-temperature cosine integral is reduced to
/// exponential integrals, the thermal part decays exponentially in `ω`.
pub fn drude_correlator_oracle(b: &BathSpec, s: f64) -> C64 {
    let (eta, wd, beta) = (b.eta, b.omega_d, b.beta);
    let a = wd * s;
    let zero_t = -0.5 * (scaled_ei(a) - scaled_e1(a));
    let thermal = adaptive_real(
        |w| {
            if w == 0.0 {
                2.0 / (beta * wd * wd)
            } else {
                w / (w * w + wd * wd) * 2.0 / (beta * w).exp_m1() * (w * s).cos()
            }
        },
        0.0,
        60.0 / beta,
        1e-14,
    );
    let re = eta * wd * wd / std::f64::consts::PI * (zero_t + thermal);
    let im = -0.5 * eta * wd * wd * (-wd * s).exp();
    C64::new(re, im)
}

#[test]
fn gauss_kronrod_polynomial_exact() {
    let v = adaptive_real(|x| x.powi(9) - 3.0 * x * x, -1.0, 2.0, 1e-14);
    let exact = (2f64.powi(10) - 1.0) / 10.0 - (8.0 + 1.0);
    assert!((v - exact).abs() < 1e-12);
}

#[test]
fn exponential_integral_identity() {
    // ∫_0^∞ x cos(bx)/(x² + a²) dx at a = 10, b = 0.37
    let v = -0.5 * (scaled_ei(3.7) - scaled_e1(3.7));
    assert!((v + 0.087_126_482_7).abs() < 1e-9);
}
