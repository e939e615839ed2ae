//! Brute-force operator algebra for two-level atoms on a lattice.
//!
//! Operators are sums of products of 2×2 matrices on distinct sites. The
//! Heisenberg generator is built from the single-atom drive and decay plus
//! the pairwise exchange and collective decay with g = Γ_ab/2 + iJ_ab.
//! Expectation values of products on up to three sites are closed with the
//! second-order cumulant rule and evaluated against a pair window.

#![allow(dead_code)]

use std::collections::BTreeMap;

use atomarray::mf2::PairWindow;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub type Site = (i64, i64);
type Mat = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

// basis order (g, e); rows index the output state
pub const LOWER: Mat = [[ZERO, ONE], [ZERO, ZERO]];
pub const RAISE: Mat = [[ZERO, ZERO], [ONE, ZERO]];
pub const EXCITED: Mat = [[ZERO, ZERO], [ZERO, ONE]];

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

#[derive(Clone, Debug)]
pub struct Term {
    pub coef: Complex64,
    pub ops: BTreeMap<Site, Mat>,
}

#[derive(Clone, Debug, Default)]
pub struct Op(pub Vec<Term>);

impl Op {
    pub fn local(site: Site, m: Mat) -> Op {
        Op(vec![Term {
            coef: ONE,
            ops: BTreeMap::from([(site, m)]),
        }])
    }

    pub fn product(factors: &[(Site, Mat)]) -> Op {
        factors
            .iter()
            .fold(Op::identity(), |acc, &(s, m)| acc.mul(&Op::local(s, m)))
    }

    pub fn identity() -> Op {
        Op(vec![Term {
            coef: ONE,
            ops: BTreeMap::new(),
        }])
    }

    pub fn mul(&self, other: &Op) -> Op {
        let mut out = Vec::with_capacity(self.0.len() * other.0.len());
        for a in &self.0 {
            for b in &other.0 {
                let mut ops = a.ops.clone();
                for (site, mb) in &b.ops {
                    let m = match ops.get(site) {
                        Some(ma) => matmul(ma, mb),
                        None => *mb,
                    };
                    ops.insert(*site, m);
                }
                out.push(Term {
                    coef: a.coef * b.coef,
                    ops,
                });
            }
        }
        Op(out)
    }

    pub fn scale(mut self, c: Complex64) -> Op {
        for t in &mut self.0 {
            t.coef *= c;
        }
        self
    }

    pub fn add(mut self, other: Op) -> Op {
        self.0.extend(other.0);
        self
    }

    pub fn commutator(&self, other: &Op) -> Op {
        self.mul(other).add(other.mul(self).scale(-ONE))
    }

    pub fn support(&self) -> Vec<Site> {
        let mut s: Vec<Site> = self.0.iter().flat_map(|t| t.ops.keys().copied()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Short-range couplings g(m) = g(−m) on a square of the given radius.
pub struct Couplings {
    pub radius: i64,
    pub values: BTreeMap<Site, Complex64>,
}

impl Couplings {
    pub fn get(&self, d: Site) -> Complex64 {
        self.values.get(&d).copied().unwrap_or(ZERO)
    }

    pub fn total(&self) -> Complex64 {
        self.values.values().sum()
    }

    /// Random couplings on a chain (m_z = 0) or on the full square.
    pub fn random(radius: i64, chain: bool, rng: &mut StdRng) -> Couplings {
        let mut values = BTreeMap::new();
        for my in 0..=radius {
            for mz in if chain { 0..=0 } else { -radius..=radius } {
                if (my, mz) <= (0, 0) {
                    continue;
                }
                let g = Complex64::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
                values.insert((my, mz), g);
                values.insert((-my, -mz), g);
            }
        }
        Couplings { radius, values }
    }
}

/// Heisenberg time derivative of `a` for uniform drive `omega` and detuning
/// `delta`, with dipole-dipole couplings `g`.
pub fn generator(a: &Op, omega: f64, delta: f64, g: &Couplings) -> Op {
    let supp = a.support();
    let mut out = Op::default();
    for &j in &supp {
        let h = Op::local(j, EXCITED)
            .scale(Complex64::new(-delta, 0.0))
            .add(Op::local(j, RAISE).scale(Complex64::new(0.5 * omega, 0.0)))
            .add(Op::local(j, LOWER).scale(Complex64::new(0.5 * omega, 0.0)));
        out = out.add(h.commutator(a).scale(I));
        let jump = Op::local(j, RAISE).mul(a).mul(&Op::local(j, LOWER));
        let e = Op::local(j, EXCITED);
        let anti = e.mul(a).add(a.mul(&e)).scale(Complex64::new(-0.5, 0.0));
        out = out.add(jump).add(anti);
    }
    let mut pairs = Vec::new();
    for &s in &supp {
        for &d in g.values.keys() {
            let other = (s.0 + d.0, s.1 + d.1);
            pairs.push((s, other));
            pairs.push((other, s));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    for (ra, rb) in pairs {
        let gab = g.get((rb.0 - ra.0, rb.1 - ra.1));
        let (half_gamma, j) = (gab.re, gab.im);
        let sp_a = Op::local(ra, RAISE);
        let sm_b = Op::local(rb, LOWER);
        let x = sp_a.mul(&sm_b);
        out = out.add(x.commutator(a).scale(I * j));
        let dis = sp_a
            .mul(&a.commutator(&sm_b))
            .add(sp_a.commutator(a).mul(&sm_b));
        out = out.add(dis.scale(Complex64::new(half_gamma, 0.0)));
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Basis {
    Lower,
    Raise,
    Excited,
}

/// Coefficients on 1 (`None`), σ⁻, σ⁺ and ê.
type Components = Vec<(Option<Basis>, Complex64)>;

fn decompose(m: &Mat) -> Components {
    [
        (None, m[0][0]),
        (Some(Basis::Lower), m[0][1]),
        (Some(Basis::Raise), m[1][0]),
        (Some(Basis::Excited), m[1][1] - m[0][0]),
    ]
    .into_iter()
    .filter(|(_, c)| *c != ZERO)
    .collect()
}

/// Closed expectation values against a translation-invariant window.
pub struct Closure<'a> {
    pub w: &'a PairWindow,
}

impl Closure<'_> {
    fn single(&self, b: Basis) -> Complex64 {
        let s = self.w.singles.sigma_minus;
        match b {
            Basis::Lower => s,
            Basis::Raise => s.conj(),
            Basis::Excited => Complex64::new(self.w.singles.e_pop, 0.0),
        }
    }

    fn pair(&self, (x, p): (Site, Basis), (y, q): (Site, Basis)) -> Complex64 {
        let d = (y.0 - x.0, y.1 - x.1);
        let idx = &self.w.index;
        let (Some(i), Some(j)) = (idx.slot(d.0, d.1), idx.slot(-d.0, -d.1)) else {
            return self.single(p) * self.single(q);
        };
        let w = self.w;
        use Basis::*;
        match (p, q) {
            (Lower, Lower) => w.ss[i],
            (Raise, Raise) => w.ss[i].conj(),
            (Excited, Excited) => Complex64::new(w.ee[i], 0.0),
            (Excited, Lower) => w.es[i],
            (Lower, Excited) => w.es[j],
            (Excited, Raise) => w.es[i].conj(),
            (Raise, Excited) => w.es[j].conj(),
            (Lower, Raise) => w.sp[i],
            (Raise, Lower) => w.sp[i].conj(),
        }
    }

    fn product(&self, ops: &[(Site, Basis)]) -> Complex64 {
        match ops {
            [] => ONE,
            [(_, a)] => self.single(*a),
            [a, b] => self.pair(*a, *b),
            [a, b, c] => {
                let (sa, sb, sc) = (self.single(a.1), self.single(b.1), self.single(c.1));
                self.pair(*a, *b) * sc + self.pair(*a, *c) * sb + self.pair(*b, *c) * sa
                    - 2.0 * sa * sb * sc
            }
            _ => panic!("closure beyond three sites"),
        }
    }

    pub fn expect(&self, op: &Op) -> Complex64 {
        let mut total = ZERO;
        for t in &op.0 {
            let sites: Vec<(Site, Components)> =
                t.ops.iter().map(|(s, m)| (*s, decompose(m))).collect();
            let mut stack: Vec<(Vec<(Site, Basis)>, Complex64)> = vec![(Vec::new(), t.coef)];
            for (site, comps) in &sites {
                let mut next = Vec::new();
                for (ops, c) in &stack {
                    for (b, cb) in comps {
                        let mut ops = ops.clone();
                        if let Some(b) = b {
                            ops.push((*site, *b));
                        }
                        next.push((ops, c * cb));
                    }
                }
                stack = next;
            }
            for (ops, c) in stack {
                total += c * self.product(&ops);
            }
        }
        total
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random window obeying the reflection relations of the stored tables.
pub fn random_window(w: &mut PairWindow, rng: &mut StdRng) {
    let mut c = || Complex64::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
    w.singles.sigma_minus = c();
    w.singles.e_pop = c().re.abs() + 0.1;
    for i in 0..w.index.len() {
        w.es[i] = c();
        w.ss[i] = c();
        w.ee[i] = c().re;
        w.sp[i] = c();
    }
    for &i in &w.index.canonical.clone() {
        let j = w.index.neg[i];
        w.ss[j] = w.ss[i];
        w.ee[j] = w.ee[i];
        w.sp[j] = w.sp[i].conj();
    }
}
