//! Second-order mean-field (pair-cumulant) dynamics for a single array.
//!
//! Two-atom expectation values are kept for separations inside a window and
//! replaced by products of singles outside it. Triples are closed as
//!
//! ⟨ABC⟩ → ⟨AB⟩⟨C⟩ + ⟨AC⟩⟨B⟩ + ⟨BC⟩⟨A⟩ − 2⟨A⟩⟨B⟩⟨C⟩.
//!
//! Stored per separation n ≠ 0:
//!
//! | table | value        |
//! |-------|--------------|
//! | `es`  | ⟨e₀σ⁻_n⟩     |
//! | `ss`  | ⟨σ⁻₀σ⁻_n⟩    |
//! | `ee`  | ⟨e₀e_n⟩      |
//! | `sp`  | ⟨σ⁻₀σ⁺_n⟩    |
//!
//! All four tables span the full window. `ss`, `ee` and `sp` satisfy
//! ss(−n) = ss(n), ee(−n) = ee(n), sp(−n) = sp(n)*; `es` has no such
//! relation and couples n to −n.

mod csum;
mod evolve;
mod rhs;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{SingleState, POSITIVITY_SLACK};
use crate::error::{Error, Result};
use crate::integrate::OdeVector;

pub use csum::{compute_c, CKind, CMode, CSums};
pub use evolve::{
    diagnostics, evolve_mf2_to_steady, evolve_model, Mf2Diagnostics, Mf2Report, Mf2Settings,
    DEFAULT_MF2_STEP,
};
pub use rhs::{Mf2Model, RhsMode};

/// Which separations the window keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowShape {
    /// 0 < m_y² + m_z² < N_w² on the square lattice.
    Disk,
    /// 0 < |m_y| < N_w with m_z = 0: a one-dimensional toy chain.
    Chain,
}

impl WindowShape {
    pub fn contains(self, n_w: usize, my: i64, mz: i64) -> bool {
        let r2 = (n_w * n_w) as i64;
        match self {
            WindowShape::Disk => my * my + mz * mz < r2,
            WindowShape::Chain => mz == 0 && my * my < r2,
        }
    }
}

/// Enumeration of the separations in a window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowIndex {
    pub n_w: usize,
    pub shape: WindowShape,
    /// Separations n ≠ 0, in row-major order over (m_y, m_z).
    pub seps: Vec<(i64, i64)>,
    /// Position of −n for each n.
    pub neg: Vec<usize>,
    /// Entries with m_y > 0, or m_y = 0 and m_z > 0.
    pub canonical: Vec<usize>,
    slots: Vec<Option<usize>>,
}

impl WindowIndex {
    pub fn new(n_w: usize, shape: WindowShape) -> Self {
        let r = n_w as i64;
        let side = 2 * n_w + 1;
        let mut slots = vec![None; side * side];
        let mut seps = Vec::new();
        for my in -r..=r {
            for mz in -r..=r {
                if (my, mz) != (0, 0) && shape.contains(n_w, my, mz) {
                    slots[((my + r) as usize) * side + (mz + r) as usize] = Some(seps.len());
                    seps.push((my, mz));
                }
            }
        }
        let mut index = WindowIndex {
            n_w,
            shape,
            seps,
            neg: Vec::new(),
            canonical: Vec::new(),
            slots,
        };
        index.neg = index
            .seps
            .iter()
            .map(|&(y, z)| index.slot(-y, -z).expect("window is symmetric"))
            .collect();
        index.canonical = (0..index.seps.len())
            .filter(|&i| {
                let (y, z) = index.seps[i];
                y > 0 || (y == 0 && z > 0)
            })
            .collect();
        index
    }

    pub fn len(&self) -> usize {
        self.seps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seps.is_empty()
    }

    /// Slot of separation (m_y, m_z), or `None` outside the window or at 0.
    #[inline]
    pub fn slot(&self, my: i64, mz: i64) -> Option<usize> {
        let r = self.n_w as i64;
        if my.abs() > r || mz.abs() > r {
            return None;
        }
        let side = 2 * self.n_w + 1;
        self.slots[((my + r) as usize) * side + (mz + r) as usize]
    }

    /// Indices on the outermost ring, (N_w − 1)² ≤ m² < N_w².
    pub fn edge(&self) -> Vec<usize> {
        let inner = ((self.n_w - 1) * (self.n_w - 1)) as i64;
        (0..self.len())
            .filter(|&i| {
                let (y, z) = self.seps[i];
                y * y + z * z >= inner
            })
            .collect()
    }
}

/// Two-site expectation value kinds, all of the form ⟨A₀B_d⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    /// ⟨e₀σ⁻_d⟩
    Es,
    /// ⟨σ⁻₀σ⁻_d⟩
    Ss,
    /// ⟨e₀e_d⟩
    Ee,
    /// ⟨σ⁻₀σ⁺_d⟩
    Sp,
    /// ⟨σ⁺₀σ⁻_d⟩
    Pm,
}

impl std::str::FromStr for PairKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "es" => Ok(PairKind::Es),
            "ss" => Ok(PairKind::Ss),
            "ee" => Ok(PairKind::Ee),
            "sp" => Ok(PairKind::Sp),
            "pm" => Ok(PairKind::Pm),
            _ => Err(Error::UnknownName {
                what: "pair kind",
                name: s.to_string(),
            }),
        }
    }
}

/// Singles plus the windowed pair tables.
#[derive(Debug, Clone, PartialEq)]
pub struct PairWindow {
    pub index: Arc<WindowIndex>,
    pub singles: SingleState,
    pub es: Vec<Complex64>,
    pub ss: Vec<Complex64>,
    pub ee: Vec<f64>,
    pub sp: Vec<Complex64>,
}

impl PairWindow {
    /// All-zero window (the ground state).
    pub fn zeros(index: Arc<WindowIndex>) -> Self {
        let p = index.len();
        let z = Complex64::new(0.0, 0.0);
        PairWindow {
            index,
            singles: SingleState::ground(),
            es: vec![z; p],
            ss: vec![z; p],
            ee: vec![0.0; p],
            sp: vec![z; p],
        }
    }

    pub fn n_w(&self) -> usize {
        self.index.n_w
    }

    /// Replace every pair by the product of singles.
    pub fn factorize(&mut self) {
        let s = self.singles.sigma_minus;
        let e = self.singles.e_pop;
        self.es.fill(e * s);
        self.ss.fill(s * s);
        self.ee.fill(e * e);
        self.sp.fill(s * s.conj());
    }

    /// A window whose pairs are exactly the products of `singles`.
    pub fn factorized(index: Arc<WindowIndex>, singles: SingleState) -> Self {
        let mut w = Self::zeros(index);
        w.singles = singles;
        w.factorize();
        w
    }

    /// ⟨A₀B_d⟩ with the window's symmetry maps, operator algebra at d = 0
    /// and factorisation outside the window. At d = 0, `Sp` and `Pm` both
    /// return the normally ordered ⟨σ⁺σ⁻⟩ = ⟨e⟩.
    pub fn pair_lookup(&self, kind: PairKind, d: (i64, i64)) -> Complex64 {
        let s = self.singles.sigma_minus;
        let e = Complex64::new(self.singles.e_pop, 0.0);
        if d == (0, 0) {
            return match kind {
                PairKind::Es | PairKind::Ss => Complex64::new(0.0, 0.0),
                PairKind::Ee | PairKind::Sp | PairKind::Pm => e,
            };
        }
        match self.index.slot(d.0, d.1) {
            Some(i) => match kind {
                PairKind::Es => self.es[i],
                PairKind::Ss => self.ss[i],
                PairKind::Ee => Complex64::new(self.ee[i], 0.0),
                PairKind::Sp => self.sp[i],
                PairKind::Pm => self.sp[i].conj(),
            },
            None => match kind {
                PairKind::Es => e * s,
                PairKind::Ss => s * s,
                PairKind::Ee => e * e,
                PairKind::Sp | PairKind::Pm => s * s.conj(),
            },
        }
    }

    /// Largest cumulant magnitude over all four tables at index `i`.
    pub fn cumulant_at(&self, i: usize) -> f64 {
        let s = self.singles.sigma_minus;
        let e = self.singles.e_pop;
        (self.es[i] - e * s)
            .norm()
            .max((self.ss[i] - s * s).norm())
            .max((self.ee[i] - e * e).abs())
            .max((self.sp[i] - s.norm_sqr()).norm())
    }

    /// Largest deviation from ss(−n) = ss(n), ee(−n) = ee(n),
    /// sp(−n) = sp(n)*.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &j) in self.index.neg.iter().enumerate() {
            worst = worst
                .max((self.ss[i] - self.ss[j]).norm())
                .max((self.ee[i] - self.ee[j]).abs())
                .max((self.sp[i] - self.sp[j].conj()).norm());
        }
        worst
    }

    /// Physical-region checks: single-site positivity and
    /// −ε ≤ ⟨e₀e_n⟩ ≤ ⟨e⟩ + ε.
    pub fn check(&self, slack: f64) -> std::result::Result<(), String> {
        self.singles.check(slack)?;
        let e = self.singles.e_pop;
        for (i, &v) in self.ee.iter().enumerate() {
            if !v.is_finite() || v < -slack || v > e + slack {
                return Err(format!(
                    "⟨e₀e_n⟩ = {v:e} at n = {:?} outside [0, ⟨e⟩ = {e:e}]",
                    self.index.seps[i]
                ));
            }
        }
        Ok(())
    }

    pub fn snapshot(&self) -> WindowSnapshot {
        WindowSnapshot {
            n_w: self.index.n_w,
            shape: self.index.shape,
            separations: self.index.seps.clone(),
            singles: self.singles,
            es: self.es.clone(),
            ss: self.ss.clone(),
            ee: self.ee.clone(),
            sp: self.sp.clone(),
        }
    }

    pub fn from_snapshot(snap: WindowSnapshot) -> Result<Self> {
        let index = WindowIndex::new(snap.n_w, snap.shape);
        let p = index.len();
        let lengths_ok = [snap.es.len(), snap.ss.len(), snap.ee.len(), snap.sp.len()]
            .iter()
            .all(|&l| l == p);
        if snap.separations != index.seps || !lengths_ok {
            return Err(Error::CacheCoverage {
                what: "window snapshot entries",
                needed: p,
                available: snap.separations.len(),
            });
        }
        Ok(PairWindow {
            index: Arc::new(index),
            singles: snap.singles,
            es: snap.es,
            ss: snap.ss,
            ee: snap.ee,
            sp: snap.sp,
        })
    }
}

/// Serializable form of a [`PairWindow`] for restarts and offline Q⁽²⁾.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSnapshot {
    pub n_w: usize,
    pub shape: WindowShape,
    pub separations: Vec<(i64, i64)>,
    pub singles: SingleState,
    pub es: Vec<Complex64>,
    pub ss: Vec<Complex64>,
    pub ee: Vec<f64>,
    pub sp: Vec<Complex64>,
}

impl OdeVector for PairWindow {
    fn axpy(&mut self, h: f64, x: &Self) {
        self.singles.axpy(h, &x.singles);
        for (y, v) in self.es.iter_mut().zip(&x.es) {
            *y += v * h;
        }
        for (y, v) in self.ss.iter_mut().zip(&x.ss) {
            *y += v * h;
        }
        for (y, v) in self.ee.iter_mut().zip(&x.ee) {
            *y += h * v;
        }
        for (y, v) in self.sp.iter_mut().zip(&x.sp) {
            *y += v * h;
        }
    }

    fn max_norm(&self) -> f64 {
        let c = |v: &Vec<Complex64>| {
            v.iter()
                .fold(0.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()))
        };
        self.singles
            .max_norm()
            .max(c(&self.es))
            .max(c(&self.ss))
            .max(c(&self.sp))
            .max(self.ee.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

pub(crate) fn check_window(w: &PairWindow, time: f64) -> Result<()> {
    w.check(POSITIVITY_SLACK)
        .map_err(|detail| Error::Invariant { time, detail })
}
