//! Special functions and quadrature used by the lattice sums.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Argument at which the Bessel functions switch from the power series to the
/// large-argument Hankel expansion.
pub const BESSEL_SWITCH: f64 = 12.0;

/// Outgoing spherical Hankel function h_ℓ⁽¹⁾(s) for ℓ ∈ {0, 2}.
pub fn spherical_hankel(ell: u32, s: f64) -> Result<Complex64> {
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::Domain {
            what: "spherical Hankel function",
            value: s,
        });
    }
    let phase = Complex64::from_polar(1.0, s);
    match ell {
        0 => Ok(phase / (I * s)),
        2 => Ok(hankel2_unchecked(s, phase)),
        _ => Err(Error::Domain {
            what: "spherical Hankel order (only 0 and 2 are provided)",
            value: ell as f64,
        }),
    }
}

/// h₀⁽¹⁾ and h₂⁽¹⁾ together, sharing the phase e^{is}. `s` must be positive.
#[inline]
pub(crate) fn hankel02(s: f64) -> (Complex64, Complex64) {
    let phase = Complex64::from_polar(1.0, s);
    (phase / (I * s), hankel2_unchecked(s, phase))
}

#[inline]
fn hankel2_unchecked(s: f64, phase: Complex64) -> Complex64 {
    let inv = 1.0 / s;
    let inv2 = inv * inv;
    Complex64::new(-3.0 * inv2, inv - 3.0 * inv2 * inv) * phase
}

/// Cylindrical Bessel function J_n(x) of the first kind for n ∈ {0, 1, 2}
/// and x ≥ 0.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    debug_assert!(n <= 2);
    let x = x.abs();
    if x < BESSEL_SWITCH {
        bessel_series(n, x)
    } else {
        bessel_asymptotic(n, x)
    }
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j(0, x)
}

pub fn bessel_j2(x: f64) -> f64 {
    bessel_j(2, x)
}

fn bessel_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let quarter_sq = half * half;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -quarter_sq / (k * (k + n as f64));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs().max(1e-300) && k > half {
            break;
        }
        if k > 200.0 {
            break;
        }
    }
    sum
}

fn bessel_asymptotic(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let chi = x - (0.5 * n as f64 + 0.25) * PI;
    // a_k(n)/x^k, alternating into P (even k) and Q (odd k)
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (8.0 * k as f64 * x);
        let mag = term.abs();
        if mag > prev {
            break;
        }
        prev = mag;
        // signs: P = a0 − a2/x² + a4/x⁴ …, Q = a1/x − a3/x³ + …
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if mag < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Gauss–Legendre nodes and weights on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    let (_, d) = legendre_with_derivative(n, z);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// ∫_a^b f with this rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

const MIN_ORDER_LOG2: usize = 4;
const MAX_ORDER_LOG2: usize = 12;

fn cached_rule(log2: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<OnceLock<GaussLegendre>>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=MAX_ORDER_LOG2).map(|_| OnceLock::new()).collect());
    rules[log2].get_or_init(|| GaussLegendre::new(1 << log2))
}

/// Integrate a smooth function on [a, b] with Gauss–Legendre rules of
/// doubling order (16, 32, …, 4096) until successive estimates agree to
/// `rel_tol` (or to `rel_tol` absolute when the integral is near zero).
pub fn integrate_doubling<F: Fn(f64) -> f64>(a: f64, b: f64, rel_tol: f64, f: F) -> Result<f64> {
    let mut prev = cached_rule(MIN_ORDER_LOG2).integrate(a, b, &f);
    let mut change = f64::INFINITY;
    for log2 in MIN_ORDER_LOG2 + 1..=MAX_ORDER_LOG2 {
        let next = cached_rule(log2).integrate(a, b, &f);
        change = (next - prev).abs() / next.abs().max(1.0);
        if change < rel_tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature {
        achieved: change,
        order: 1 << MAX_ORDER_LOG2,
    })
}
