//! The sums 𝒞^P_j = Σ_{m≠0,j} g(m)⟨P_j σ⁻_m⟩ for P ∈ {σ⁺, σ⁻, e}.
//!
//! Under the closure the pair inside the sum is ⟨P⟩⟨σ⁻⟩ plus a cumulant
//! c_P(m − j) that vanishes outside the window, so
//!
//! 𝒞^P_j = ⟨P⟩⟨σ⁻⟩(𝒢 − g(j)) + Σ_{d∈W} g(j + d) c_P(d)
//!
//! with g(0) = 0 removing the excluded term d = −j. The second term is a
//! two-dimensional correlation and is evaluated by FFT on a grid large
//! enough to avoid wrap-around.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{PairKind, PairWindow, WindowIndex};
use crate::lattice::{in_plane_green, SquareTable};

/// The operator P in 𝒞^P.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CKind {
    Plus,
    Minus,
    Zero,
}

impl CKind {
    pub const ALL: [CKind; 3] = [CKind::Plus, CKind::Minus, CKind::Zero];

    fn slot(self) -> usize {
        self as usize
    }

    /// ⟨P₀σ⁻_d⟩ as a stored pair kind.
    fn pair_kind(self) -> PairKind {
        match self {
            CKind::Plus => PairKind::Pm,
            CKind::Minus => PairKind::Ss,
            CKind::Zero => PairKind::Es,
        }
    }

    fn single(self, w: &PairWindow) -> Complex64 {
        match self {
            CKind::Plus => w.singles.sigma_minus.conj(),
            CKind::Minus => w.singles.sigma_minus,
            CKind::Zero => Complex64::new(w.singles.e_pop, 0.0),
        }
    }
}

/// How the 𝒞-sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum CMode {
    /// Exact decomposition, correlation by FFT.
    Fft,
    /// Exact decomposition, correlation summed directly.
    Direct,
    /// The sum as written, truncated at m² < radius², with pairs looked up
    /// (factorised outside the window).
    Raw { radius: usize },
}

/// 𝒞^P at the origin and at every window separation.
#[derive(Debug, Clone, PartialEq)]
pub struct CSums {
    pub origin: [Complex64; 3],
    pub values: [Vec<Complex64>; 3],
}

impl CSums {
    #[inline]
    pub fn at(&self, kind: CKind, i: usize) -> Complex64 {
        self.values[kind.slot()][i]
    }

    #[inline]
    pub fn at_origin(&self, kind: CKind) -> Complex64 {
        self.origin[kind.slot()]
    }
}

/// c_P(d) on the window slots.
fn cumulants(w: &PairWindow) -> [Vec<Complex64>; 3] {
    let s = w.singles.sigma_minus;
    let e = w.singles.e_pop;
    let plus = w.sp.iter().map(|v| v.conj() - s.norm_sqr()).collect();
    let minus = w.ss.iter().map(|v| v - s * s).collect();
    let zero = w.es.iter().map(|v| v - e * s).collect();
    [plus, minus, zero]
}

fn assemble(
    g_big: Complex64,
    g_sep: &[Complex64],
    w: &PairWindow,
    corr: [Vec<Complex64>; 3],
) -> CSums {
    // corr[k][0] is the origin, corr[k][1 + i] the window slot i
    let s = w.singles.sigma_minus;
    let mut origin = [Complex64::new(0.0, 0.0); 3];
    let mut values: [Vec<Complex64>; 3] = Default::default();
    for kind in CKind::ALL {
        let k = kind.slot();
        let prod = kind.single(w) * s;
        origin[k] = prod * g_big + corr[k][0];
        values[k] = g_sep
            .iter()
            .zip(&corr[k][1..])
            .map(|(&g, &c)| prod * (g_big - g) + c)
            .collect();
    }
    CSums { origin, values }
}

/// Σ_{d∈W} g(j + d) c(d) at j = 0 and every slot, directly.
pub(crate) fn direct_sums(
    g_big: Complex64,
    g_sep: &[Complex64],
    gtab: &SquareTable<Complex64>,
    w: &PairWindow,
) -> CSums {
    let idx = &w.index;
    let cum = cumulants(w);
    let corr_at = |j: (i64, i64), c: &[Complex64]| -> Complex64 {
        idx.seps
            .iter()
            .zip(c)
            .map(|(&(dy, dz), &v)| gtab.get(j.0 + dy, j.1 + dz) * v)
            .sum()
    };
    let mut corr: [Vec<Complex64>; 3] = Default::default();
    for k in 0..3 {
        let mut out = Vec::with_capacity(idx.len() + 1);
        out.push(corr_at((0, 0), &cum[k]));
        out.extend(idx.seps.iter().map(|&j| corr_at(j, &cum[k])));
        corr[k] = out;
    }
    assemble(g_big, g_sep, w, corr)
}

/// The sums as written, truncated at m² < radius², with g evaluated on the
/// fly for separations beyond the table.
pub(crate) fn raw_sums(
    a: f64,
    pol: crate::config::Polarization,
    radius: usize,
    w: &PairWindow,
) -> CSums {
    let r = radius as i64;
    let r2 = r * r;
    let mut terms = Vec::new();
    for my in -r..=r {
        for mz in -r..=r {
            if (my, mz) != (0, 0) && my * my + mz * mz < r2 {
                terms.push(((my, mz), in_plane_green(a, pol, my, mz)));
            }
        }
    }
    let sum_at = |kind: CKind, j: (i64, i64)| -> Complex64 {
        let pk = kind.pair_kind();
        terms
            .iter()
            .filter(|(m, _)| *m != j)
            .map(|&((my, mz), g)| g * w.pair_lookup(pk, (my - j.0, mz - j.1)))
            .sum()
    };
    let mut origin = [Complex64::new(0.0, 0.0); 3];
    let mut values: [Vec<Complex64>; 3] = Default::default();
    for kind in CKind::ALL {
        origin[kind.slot()] = sum_at(kind, (0, 0));
        values[kind.slot()] = w.index.seps.iter().map(|&j| sum_at(kind, j)).collect();
    }
    CSums { origin, values }
}

/// Precomputed FFT of g on an M×M periodic grid.
pub(crate) struct CorrelationPlan {
    m: usize,
    g_hat: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CorrelationPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorrelationPlan")
            .field("m", &self.m)
            .finish()
    }
}

impl CorrelationPlan {
    pub(crate) fn new(index: &WindowIndex, gtab: &SquareTable<Complex64>) -> Self {
        let n_w = index.n_w as i64;
        let m = (4 * index.n_w + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let reach = (2 * n_w).min(gtab.radius as i64);
        let mut grid = vec![Complex64::new(0.0, 0.0); m * m];
        for vy in -reach..=reach {
            for vz in -reach..=reach {
                grid[wrap(vy, m) * m + wrap(vz, m)] = gtab.get(vy, vz);
            }
        }
        let mut plan = CorrelationPlan {
            m,
            g_hat: Vec::new(),
            fwd,
            inv,
        };
        plan.transform(&mut grid, false);
        plan.g_hat = grid;
        plan
    }

    /// Unnormalised 2-D transform; output of the forward pass is transposed,
    /// and the inverse pass restores the orientation.
    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let m = self.m;
        let fft = if inverse { &self.inv } else { &self.fwd };
        fft.process(buf);
        transpose(buf, m);
        fft.process(buf);
    }

    fn correlate(&self, idx: &WindowIndex, c: &[Complex64]) -> Vec<Complex64> {
        let m = self.m;
        let mut grid = vec![Complex64::new(0.0, 0.0); m * m];
        for (&(dy, dz), &v) in idx.seps.iter().zip(c) {
            grid[wrap(-dy, m) * m + wrap(-dz, m)] = v;
        }
        self.transform(&mut grid, false);
        for (x, g) in grid.iter_mut().zip(&self.g_hat) {
            *x *= g;
        }
        self.transform(&mut grid, true);
        let scale = 1.0 / (m * m) as f64;
        let mut out = Vec::with_capacity(idx.len() + 1);
        out.push(grid[0] * scale);
        out.extend(
            idx.seps
                .iter()
                .map(|&(jy, jz)| grid[wrap(jy, m) * m + wrap(jz, m)] * scale),
        );
        out
    }

    pub(crate) fn sums(&self, g_big: Complex64, g_sep: &[Complex64], w: &PairWindow) -> CSums {
        let cum = cumulants(w);
        let corr = [
            self.correlate(&w.index, &cum[0]),
            self.correlate(&w.index, &cum[1]),
            self.correlate(&w.index, &cum[2]),
        ];
        assemble(g_big, g_sep, w, corr)
    }
}

#[inline]
fn wrap(v: i64, m: usize) -> usize {
    v.rem_euclid(m as i64) as usize
}

fn transpose(buf: &mut [Complex64], m: usize) {
    for r in 0..m {
        for c in r + 1..m {
            buf.swap(r * m + c, c * m + r);
        }
    }
}

/// A single 𝒞^P_n by the exact decomposition, summed directly.
pub fn compute_c(
    g_big: Complex64,
    gtab: &SquareTable<Complex64>,
    w: &PairWindow,
    kind: CKind,
    n: (i64, i64),
) -> Complex64 {
    let s = w.singles.sigma_minus;
    let g_n = if n == (0, 0) {
        Complex64::new(0.0, 0.0)
    } else {
        gtab.get(n.0, n.1)
    };
    let single = kind.single(w);
    let pk = kind.pair_kind();
    let corr: Complex64 = w
        .index
        .seps
        .iter()
        .map(|&(dy, dz)| gtab.get(n.0 + dy, n.1 + dz) * (w.pair_lookup(pk, (dy, dz)) - single * s))
        .sum();
    single * s * (g_big - g_n) + corr
}
