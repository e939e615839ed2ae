//! Equations of motion for the singles and the four pair tables.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::csum::{direct_sums, raw_sums, CKind, CMode, CSums, CorrelationPlan};
use super::{PairWindow, WindowIndex, WindowShape};
use crate::config::{Drive, Polarization, SingleState};
use crate::error::{Error, Result};
use crate::lattice::{SquareTable, SumCache};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which separations are evaluated explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhsMode {
    /// ss, ee and sp on the canonical half, mirrored to −n.
    Half,
    /// Every table at every separation; the symmetry relations are then a
    /// property of the dynamics rather than of storage.
    Full,
}

/// Couplings and precomputed transforms for one window.
#[derive(Debug)]
pub struct Mf2Model {
    pub index: Arc<WindowIndex>,
    pub g_big: Complex64,
    pub c_mode: CMode,
    pub rhs_mode: RhsMode,
    g_sep: Vec<Complex64>,
    gtab: SquareTable<Complex64>,
    plan: CorrelationPlan,
    lattice: Option<(f64, Polarization)>,
}

impl Mf2Model {
    /// Model on the square lattice of `cache` with window radius `n_w`.
    pub fn from_cache(cache: &SumCache, n_w: usize) -> Result<Self> {
        if n_w < 2 {
            return Err(Error::Domain {
                what: "window radius N_w",
                value: n_w as f64,
            });
        }
        let gtab = cache.g_table(n_w)?.clone();
        let index = Arc::new(WindowIndex::new(n_w, WindowShape::Disk));
        let mut model = Self::from_couplings(cache.g_big, gtab, index)?;
        model.lattice = Some((cache.config.a_over_lambda, cache.config.polarization));
        Ok(model)
    }

    /// Model with arbitrary even couplings g(m) = g(−m) given by `gtab`
    /// (zero at the origin) and in-plane total `g_big`.
    pub fn from_couplings(
        g_big: Complex64,
        gtab: SquareTable<Complex64>,
        index: Arc<WindowIndex>,
    ) -> Result<Self> {
        let needed = 2 * index.n_w;
        if gtab.radius < needed {
            return Err(Error::CacheCoverage {
                what: "g-table radius",
                needed,
                available: gtab.radius,
            });
        }
        let g_sep = index.seps.iter().map(|&(y, z)| gtab.get(y, z)).collect();
        let plan = CorrelationPlan::new(&index, &gtab);
        Ok(Mf2Model {
            index,
            g_big,
            c_mode: CMode::Fft,
            rhs_mode: RhsMode::Half,
            g_sep,
            gtab,
            plan,
            lattice: None,
        })
    }

    pub fn with_modes(mut self, c_mode: CMode, rhs_mode: RhsMode) -> Self {
        self.c_mode = c_mode;
        self.rhs_mode = rhs_mode;
        self
    }

    pub fn g_table(&self) -> &SquareTable<Complex64> {
        &self.gtab
    }

    pub fn zeros(&self) -> PairWindow {
        PairWindow::zeros(self.index.clone())
    }

    /// All 𝒞-sums for the current window.
    pub fn c_sums(&self, w: &PairWindow) -> CSums {
        match self.c_mode {
            CMode::Fft => self.plan.sums(self.g_big, &self.g_sep, w),
            CMode::Direct => direct_sums(self.g_big, &self.g_sep, &self.gtab, w),
            CMode::Raw { radius } => {
                let (a, pol) = self.lattice.expect("raw 𝒞-sums need a lattice model");
                raw_sums(a, pol, radius, w)
            }
        }
    }

    /// d/dt of the singles alone.
    pub fn rhs_singles(&self, w: &PairWindow, drive: &Drive) -> SingleState {
        self.singles_from(&self.c_sums(w), w, drive)
    }

    fn singles_from(&self, c: &CSums, w: &PairWindow, drive: &Drive) -> SingleState {
        let s = w.singles.sigma_minus;
        let e = w.singles.e_pop;
        let om = drive.omega;
        SingleState {
            sigma_minus: Complex64::new(-0.5, drive.delta) * s
                + 0.5 * I * om * (2.0 * e - 1.0)
                + 2.0 * c.at_origin(CKind::Zero)
                - self.g_big * s,
            e_pop: -e - om * s.im - 2.0 * c.at_origin(CKind::Plus).re,
        }
    }

    /// d/dt of the whole window.
    pub fn rhs(&self, w: &PairWindow, drive: &Drive) -> PairWindow {
        let c = self.c_sums(w);
        let om = drive.omega;
        let lin = Complex64::new(-0.5, drive.delta);
        let cp0 = c.at_origin(CKind::Plus);
        let c00 = c.at_origin(CKind::Zero);

        let singles = self.singles_from(&c, w, drive);

        let ctx = Context {
            w,
            c: &c,
            g_big: self.g_big,
            g_sep: &self.g_sep,
            om,
            lin,
            cp0,
            c00,
        };
        let p = self.index.len();
        let es: Vec<Complex64> = (0..p).into_par_iter().map(|i| ctx.d_es(i)).collect();
        let (ss, ee, sp) = match self.rhs_mode {
            RhsMode::Full => {
                let sym: Vec<_> = (0..p).into_par_iter().map(|i| ctx.d_sym(i)).collect();
                unzip3(sym)
            }
            RhsMode::Half => {
                let canon = &self.index.canonical;
                let half: Vec<_> = canon.par_iter().map(|&i| ctx.d_sym(i)).collect();
                let zero = Complex64::new(0.0, 0.0);
                let (mut ss, mut ee, mut sp) = (vec![zero; p], vec![0.0; p], vec![zero; p]);
                for (&i, &(dss, dee, dsp)) in canon.iter().zip(&half) {
                    let j = self.index.neg[i];
                    ss[i] = dss;
                    ss[j] = dss;
                    ee[i] = dee;
                    ee[j] = dee;
                    sp[i] = dsp;
                    sp[j] = dsp.conj();
                }
                (ss, ee, sp)
            }
        };
        PairWindow {
            index: self.index.clone(),
            singles,
            es,
            ss,
            ee,
            sp,
        }
    }
}

fn unzip3(v: Vec<(Complex64, f64, Complex64)>) -> (Vec<Complex64>, Vec<f64>, Vec<Complex64>) {
    let mut a = Vec::with_capacity(v.len());
    let mut b = Vec::with_capacity(v.len());
    let mut c = Vec::with_capacity(v.len());
    for (x, y, z) in v {
        a.push(x);
        b.push(y);
        c.push(z);
    }
    (a, b, c)
}

struct Context<'a> {
    w: &'a PairWindow,
    c: &'a CSums,
    g_big: Complex64,
    g_sep: &'a [Complex64],
    om: f64,
    lin: Complex64,
    cp0: Complex64,
    c00: Complex64,
}

impl Context<'_> {
    /// d⟨e₀σ⁻_n⟩/dt.
    fn d_es(&self, i: usize) -> Complex64 {
        let w = self.w;
        let j = w.index.neg[i];
        let s = w.singles.sigma_minus;
        let sb = s.conj();
        let e = w.singles.e_pop;
        let g = self.g_sep[i];
        let gm = self.g_big - g;
        let (es, es_mn, ss, ee, sp) = (w.es[i], w.es[j], w.ss[i], w.ee[i], w.sp[i]);
        let pm = sp.conj();
        let cp_n = self.c.at(CKind::Plus, i);
        let cm_n = self.c.at(CKind::Minus, i);
        let c0_mn = self.c.at(CKind::Zero, j);
        let half_om = 0.5 * I * self.om;

        let v1 = gm * (pm - 2.0 * s.norm_sqr()) * s + (self.cp0 - g * pm) * s + cm_n * sb;
        let v2 = gm.conj() * (ss - 2.0 * s * s) * sb
            + (self.cp0.conj() - g.conj() * sp) * s
            + cp_n.conj() * s;
        let v3 = gm * (ee - 2.0 * e * e) * s + (self.c00 - g * es_mn) * e + c0_mn * e;
        let v4 = c0_mn;

        -es + half_om * (ss - pm) + self.lin * es + half_om * (2.0 * ee - e)
            - g.conj() * es_mn
            - v1
            - v2
            + 2.0 * v3
            - v4
    }

    /// d/dt of (⟨σ⁻₀σ⁻_n⟩, ⟨e₀e_n⟩, ⟨σ⁻₀σ⁺_n⟩).
    fn d_sym(&self, i: usize) -> (Complex64, f64, Complex64) {
        let w = self.w;
        let j = w.index.neg[i];
        let s = w.singles.sigma_minus;
        let sb = s.conj();
        let e = w.singles.e_pop;
        let g = self.g_sep[i];
        let gm = self.g_big - g;
        let (es, es_mn, ss, ee, sp) = (w.es[i], w.es[j], w.ss[i], w.ee[i], w.sp[i]);
        let pm = sp.conj();
        let cp_n = self.c.at(CKind::Plus, i);
        let cp_mn = self.c.at(CKind::Plus, j);
        let cm_n = self.c.at(CKind::Minus, i);
        let cm_mn = self.c.at(CKind::Minus, j);
        let c0_n = self.c.at(CKind::Zero, i);
        let c0_mn = self.c.at(CKind::Zero, j);
        let (c00, cp0, om) = (self.c00, self.cp0, self.om);
        let es_prod = e * s;

        let v5 = gm * (es - 2.0 * es_prod) * s + (c00 - g * es) * s + cm_n * e;
        let v6 = cm_n;
        let v7 = gm * (es_mn - 2.0 * es_prod) * s + (c00 - g * es_mn) * s + cm_mn * e;
        let v8 = cm_mn;
        let dss = 2.0 * self.lin * ss + I * om * (es + es_mn - s) + 2.0 * v5 - v6 + 2.0 * v7 - v8;

        let v9 = gm * (es_mn.conj() - 2.0 * sb * e) * s + (cp0 - g * pm) * e + c0_n * sb;
        let v11 = gm * (es.conj() - 2.0 * e * sb) * s + (cp0 - g * sp) * e + c0_mn * sb;
        let dee = -2.0 * ee - om * (es_mn + es).im - 2.0 * v9.re - 2.0 * v11.re;

        let v13 = gm * (es.conj() - 2.0 * e * sb) * s + (c00 - g * es) * sb + cp_n * e;
        let v14 = cp_n;
        let v15 = gm.conj() * (es_mn - 2.0 * es_prod) * sb
            + (c00 - g * es_mn).conj() * s
            + cp_mn.conj() * e;
        let v16 = cp_mn.conj();
        let half_om = 0.5 * I * om;
        let dsp = -sp + half_om * (2.0 * es.conj() - sb) - half_om * (2.0 * es_mn - s)
            + 2.0 * g.re * (2.0 * ee - e)
            + 2.0 * v13
            - v14
            + 2.0 * v15
            - v16;

        (dss, dee, dsp)
    }
}
