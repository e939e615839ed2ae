//! Dipole Green's function and regularised lattice sums.
//!
//! The in-plane sum 𝒢 = Σ_{m≠0} g(R_m) converges only conditionally. It is
//! evaluated with the Gaussian weight W_m = exp[−36(m²)²/N⁴] over m² < N²,
//! which converges rapidly, and for comparison with the bare square
//! truncation |m_y|, |m_z| ≤ N.
//!
//! Every sum runs over one quadrant with multiplicities (g is even in m_y and
//! in m_z for both dipole orientations) and uses Neumaier compensated
//! summation. Rows are summed in parallel and combined in a fixed order so
//! results do not depend on the thread count.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ArrayConfig, Polarization, WAVENUMBER};
use crate::error::{Error, Result};
use crate::special::{bessel_j0, bessel_j2, hankel02, integrate_doubling};

/// Smallest cutoff accepted by [`calc_g`].
pub const MIN_CUTOFF: usize = 50;
/// Ratio N·a/L required by [`calc_g_bar`].
pub const GBAR_CUTOFF_RATIO: f64 = 20.0;
/// Extra g-table margin beyond the doubled window radius.
pub const G_TABLE_MARGIN: usize = 4;
/// Relative tolerance of the q_m quadrature.
pub const QM_TOLERANCE: f64 = 1e-10;
/// Default cutoff for 𝒢̄. Near a cavity resonance the two-array response
/// amplifies coupling errors by the finesse, so 𝒢̄ needs ~10⁻¹² accuracy.
pub const DEFAULT_GBAR_CUTOFF: usize = 4000;

const CACHE_FORMAT: u32 = 1;

/// Truncation of the conditionally convergent lattice sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    /// Gaussian weight exp[−36(m²)²/N⁴] over m² < N².
    Smooth,
    /// Unweighted square |m_y|, |m_z| ≤ N.
    Hard,
}

/// The weight W_m = exp[−36(m²)²/N⁴].
#[inline]
pub fn smooth_weight(m2: f64, n: f64) -> f64 {
    let r = m2 / (n * n);
    (-36.0 * r * r).exp()
}

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ComplexSum {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexSum {
    #[inline]
    fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    fn merge(&mut self, other: ComplexSum) {
        self.re.add(other.re.sum);
        self.re.add(other.re.comp);
        self.im.add(other.im.sum);
        self.im.add(other.im.comp);
    }

    fn value(self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// e^{2πit} for a phase `t` measured in wavelengths, reduced to [−½, ½]
/// before scaling so large distances keep full relative precision.
#[inline]
fn cycle_phase(t_hi: f64, t_lo: f64) -> Complex64 {
    let f = (t_hi - t_hi.round()) + t_lo;
    let (s, c) = (2.0 * PI * f).sin_cos();
    Complex64::new(c, s)
}

/// a·√n2 as an unevaluated sum hi + lo.
#[inline]
fn scaled_root(a: f64, n2: f64) -> (f64, f64) {
    let r = n2.sqrt();
    let r_lo = (-r).mul_add(r, n2) / (2.0 * r);
    let p = a * r;
    let p_lo = a.mul_add(r, -p) + a * r_lo;
    (p, p_lo)
}

/// ½[h₀(s) + c·h₂(s)] without the e^{is} factor.
#[inline]
fn green_envelope(s: f64, c: f64) -> Complex64 {
    let inv = 1.0 / s;
    let inv2 = inv * inv;
    // h₀e^{−is} = −i/s, h₂e^{−is} = −3/s² + i(1/s − 3/s³)
    Complex64::new(-3.0 * c * inv2, -inv + c * (inv - 3.0 * inv2 * inv)) * 0.5
}

/// Angular coefficient of h₂ for a unit vector with components (x̂, ẑ)
/// along the array normal and the in-plane z axis.
#[inline]
fn angular_coefficient(polarization: Polarization, x_hat2: f64, z_hat2: f64) -> f64 {
    match polarization {
        Polarization::DeltaM0 => 0.5 * (3.0 * z_hat2 - 1.0),
        Polarization::DeltaMpm1 => -0.25 * (3.0 * x_hat2 - 1.0),
    }
}

/// Dipole-dipole coupling g(R) = (Γ/2)[h₀(kR) + c·h₂(kR)] for a displacement
/// (X, Y, Z) in wavelengths, X along the array normal.
pub fn green_fn(displacement: [f64; 3], polarization: Polarization) -> Result<Complex64> {
    let [x, y, z] = displacement;
    let r2 = x * x + y * y + z * z;
    if !r2.is_finite() || r2 <= 0.0 {
        return Err(Error::Domain {
            what: "Green's function displacement |R|",
            value: r2.sqrt(),
        });
    }
    let r = r2.sqrt();
    let c = angular_coefficient(polarization, x * x / r2, z * z / r2);
    let (h0, h2) = hankel02(WAVENUMBER * r);
    Ok(0.5 * (h0 + c * h2))
}

/// g between two atoms of the same array separated by (m_y, m_z) lattice
/// steps. Evaluated with a range-reduced phase; m ≠ 0.
#[inline]
pub fn in_plane_green(a: f64, polarization: Polarization, my: i64, mz: i64) -> Complex64 {
    let n2 = (my * my + mz * mz) as f64;
    let (t, t_lo) = scaled_root(a, n2);
    let c = angular_coefficient(polarization, 0.0, (mz * mz) as f64 / n2);
    green_envelope(WAVENUMBER * (t + t_lo), c) * cycle_phase(t, t_lo)
}

/// Coupling to the atom at lattice offset (m_y, m_z) of a parallel plane a
/// distance x away, multiplied by e^{−ikx}.
#[inline]
fn offset_plane_green(a: f64, polarization: Polarization, x: f64, my: i64, mz: i64) -> Complex64 {
    let n2 = (my * my + mz * mz) as f64;
    let rho2 = a * a * n2;
    let r2 = x * x + rho2;
    let r = r2.sqrt();
    let excess = rho2 / (r + x);
    let c = angular_coefficient(polarization, x * x / r2, a * a * (mz * mz) as f64 / r2);
    green_envelope(WAVENUMBER * r, c) * cycle_phase(excess, 0.0)
}

fn quadrant_multiplicity(my: i64, mz: i64) -> f64 {
    (if my == 0 { 1.0 } else { 2.0 }) * (if mz == 0 { 1.0 } else { 2.0 })
}

/// Σ over the quadrant m_y, m_z ∈ [0, extent] of multiplicity·term(m_y, m_z).
fn quadrant_sum<F>(extent: i64, include_origin: bool, term: F) -> Complex64
where
    F: Fn(i64, i64) -> Option<Complex64> + Sync,
{
    let rows: Vec<ComplexSum> = (0..=extent)
        .into_par_iter()
        .map(|my| {
            let mut acc = ComplexSum::default();
            for mz in 0..=extent {
                if my == 0 && mz == 0 && !include_origin {
                    continue;
                }
                if let Some(v) = term(my, mz) {
                    acc.add(v * quadrant_multiplicity(my, mz));
                }
            }
            acc
        })
        .collect();
    let mut total = ComplexSum::default();
    for row in rows {
        total.merge(row);
    }
    total.value()
}

fn check_spacing(config: &ArrayConfig) -> Result<()> {
    let a = config.a_over_lambda;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain {
            what: "lattice spacing a/λ (must lie in (0, 1))",
            value: a,
        });
    }
    Ok(())
}

/// The in-plane lattice sum 𝒢(N) = iδ + γ/2.
pub fn calc_g(config: &ArrayConfig, n: usize, cutoff: Cutoff) -> Result<Complex64> {
    check_spacing(config)?;
    if n < MIN_CUTOFF {
        return Err(Error::CutoffTooSmall {
            n,
            required: MIN_CUTOFF,
            reason: "in-plane lattice sum",
        });
    }
    let a = config.a_over_lambda;
    let pol = config.polarization;
    let nf = n as f64;
    let extent = n as i64;
    let sum = match cutoff {
        Cutoff::Smooth => quadrant_sum(extent, false, |my, mz| {
            let m2 = (my * my + mz * mz) as f64;
            (m2 < nf * nf).then(|| in_plane_green(a, pol, my, mz) * smooth_weight(m2, nf))
        }),
        Cutoff::Hard => quadrant_sum(extent, false, |my, mz| Some(in_plane_green(a, pol, my, mz))),
    };
    Ok(sum)
}

/// Fractional error of Re 𝒢(N) against the closed form γ/2.
pub fn g_fractional_error(config: &ArrayConfig, g: Complex64) -> f64 {
    let exact = config.collective_half_width();
    ((g.re - exact) / exact).abs()
}

/// e^{−ikx} Σ_m g(x, m_y a, m_z a) W_m: the field of a uniformly polarised
/// plane, seen at distance x on the axis through an atom, with the outgoing
/// phase removed. No lower bound on N is imposed here.
pub fn plane_sum(config: &ArrayConfig, x: f64, n: usize) -> Result<Complex64> {
    check_spacing(config)?;
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain {
            what: "distance from the array",
            value: x,
        });
    }
    let a = config.a_over_lambda;
    let pol = config.polarization;
    let nf = n as f64;
    Ok(quadrant_sum(n as i64, true, |my, mz| {
        let m2 = (my * my + mz * mz) as f64;
        (m2 < nf * nf).then(|| offset_plane_green(a, pol, x, my, mz) * smooth_weight(m2, nf))
    }))
}

/// Smallest cutoff accepted by [`calc_g_bar`] for separation `l`.
pub fn g_bar_min_cutoff(a: f64, l: f64) -> usize {
    (GBAR_CUTOFF_RATIO * l / a).ceil() as usize
}

/// The inter-array sum 𝒢̄(N) = e^{−ikL} Σ_m g(L, m_y a, m_z a) W_m.
pub fn calc_g_bar(config: &ArrayConfig, n: usize) -> Result<Complex64> {
    let l = config.separation().ok_or(Error::Domain {
        what: "𝒢̄ requires two arrays; num_arrays",
        value: config.num_arrays as f64,
    })?;
    let required = g_bar_min_cutoff(config.a_over_lambda, l);
    if n < required {
        return Err(Error::CutoffTooSmall {
            n,
            required,
            reason: "inter-array sum needs N >= 20 L/a",
        });
    }
    plane_sum(config, l, n)
}

/// Ω²·q_m, the far-field kernel of the pair contribution to incoherent
/// scattering (the 1/Ω² is applied by the caller). Separation (0, 0) gives
/// the single-atom prefactor 3π/(ka)².
pub fn calc_qm(m: (i64, i64), config: &ArrayConfig) -> Result<f64> {
    check_spacing(config)?;
    let ka = config.ka();
    let m2 = (m.0 * m.0 + m.1 * m.1) as f64;
    let kappa = ka * m2.sqrt();
    let cos2phi = match config.polarization {
        Polarization::DeltaM0 if m2 > 0.0 => (m.0 * m.0 - m.1 * m.1) as f64 / m2,
        _ => 0.0,
    };
    let integral = integrate_doubling(0.0, 0.5 * PI, QM_TOLERANCE, |theta| {
        let (st, _) = theta.sin_cos();
        let st2 = st * st;
        let arg = kappa * st;
        let mut v = (2.0 - st2) * bessel_j0(arg);
        if cos2phi != 0.0 {
            v -= st2 * cos2phi * bessel_j2(arg);
        }
        st * v
    })?;
    let pref = 1.5 / ka;
    Ok(PI * pref * pref * integral)
}

/// Dense table on the square |m_y|, |m_z| ≤ radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareTable<T> {
    pub radius: usize,
    pub values: Vec<T>,
}

impl<T: Copy> SquareTable<T> {
    fn side(&self) -> usize {
        2 * self.radius + 1
    }

    #[inline]
    pub fn covers(&self, my: i64, mz: i64) -> bool {
        let r = self.radius as i64;
        my.abs() <= r && mz.abs() <= r
    }

    #[inline]
    pub fn get(&self, my: i64, mz: i64) -> T {
        let r = self.radius as i64;
        self.values[((my + r) as usize) * self.side() + (mz + r) as usize]
    }

    /// Mirror quadrant rows `rows[m_y][m_z]` (m_y, m_z ≥ 0) to the full square.
    fn from_quadrant(radius: usize, fill: T, rows: Vec<Vec<T>>) -> Self {
        let side = 2 * radius + 1;
        let r = radius as i64;
        let mut values = vec![fill; side * side];
        for (my, row) in rows.iter().enumerate() {
            for (mz, &v) in row.iter().enumerate() {
                let (my, mz) = (my as i64, mz as i64);
                for (sy, sz) in [(1, 1), (-1, 1), (1, -1), (-1, -1)] {
                    let idx = ((sy * my + r) as usize) * side + (sz * mz + r) as usize;
                    values[idx] = v;
                }
            }
        }
        SquareTable { radius, values }
    }
}

fn quadrant_rows<T, F>(radius: usize, f: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(i64, i64) -> Result<T> + Sync,
{
    let r = radius as i64;
    (0..=r)
        .into_par_iter()
        .map(|my| (0..=r).map(|mz| f(my, mz)).collect::<Result<Vec<T>>>())
        .collect()
}

/// Numerical settings for building a [`SumCache`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumSettings {
    /// Cutoff N for 𝒢.
    pub n_cut: usize,
    /// Cutoff N for 𝒢̄ (two arrays only).
    pub n_bar: usize,
    /// MF2 window radius; `None` skips the g- and q-tables.
    pub n_w: Option<usize>,
}

impl Default for SumSettings {
    fn default() -> Self {
        SumSettings {
            n_cut: 1000,
            n_bar: DEFAULT_GBAR_CUTOFF,
            n_w: None,
        }
    }
}

/// Precomputed lattice quantities for one geometry. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumCache {
    pub config: ArrayConfig,
    pub settings: SumSettings,
    /// 𝒢 = iδ + γ/2.
    pub g_big: Complex64,
    /// 𝒢̄ for two arrays.
    pub g_bar: Option<Complex64>,
    /// g(m_y, m_z) over radius 2N_w + 4, zero at the origin.
    pub g_table: Option<SquareTable<Complex64>>,
    /// Ω²q_m over radius N_w (the origin holds 3π/(ka)²).
    pub q_table: Option<SquareTable<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format: u32,
    cache: SumCache,
}

impl SumCache {
    pub fn build(config: &ArrayConfig, settings: SumSettings) -> Result<Self> {
        let a = config.a_over_lambda;
        let pol = config.polarization;
        let g_big = calc_g(config, settings.n_cut, Cutoff::Smooth)?;
        let g_bar = if config.is_pair() {
            Some(calc_g_bar(config, settings.n_bar)?)
        } else {
            None
        };
        let (g_table, q_table) = match settings.n_w {
            None => (None, None),
            Some(n_w) => {
                let radius = 2 * n_w + G_TABLE_MARGIN;
                let zero = Complex64::new(0.0, 0.0);
                let g_rows = quadrant_rows(radius, |my, mz| {
                    Ok(if my == 0 && mz == 0 {
                        zero
                    } else {
                        in_plane_green(a, pol, my, mz)
                    })
                })?;
                let q_rows = quadrant_rows(n_w, |my, mz| calc_qm((my, mz), config))?;
                (
                    Some(SquareTable::from_quadrant(radius, zero, g_rows)),
                    Some(SquareTable::from_quadrant(n_w, 0.0, q_rows)),
                )
            }
        };
        debug!(
            "built sums for a={a}, {}: 𝒢={g_big}, 𝒢̄={g_bar:?}",
            pol.label()
        );
        Ok(SumCache {
            config: *config,
            settings,
            g_big,
            g_bar,
            g_table,
            q_table,
        })
    }

    /// A cache with prescribed couplings and no tables, for decoupled or
    /// synthetic test modes.
    pub fn from_couplings(
        config: &ArrayConfig,
        g_big: Complex64,
        g_bar: Option<Complex64>,
    ) -> Self {
        SumCache {
            config: *config,
            settings: SumSettings {
                n_cut: 0,
                n_bar: 0,
                n_w: None,
            },
            g_big,
            g_bar,
            g_table: None,
            q_table: None,
        }
    }

    /// (𝒢, 𝒢̄); 𝒢̄ is zero for a single array.
    pub fn couplings(&self) -> (Complex64, Complex64) {
        (self.g_big, self.g_bar.unwrap_or_default())
    }

    /// Collective shift δ = Im 𝒢.
    pub fn delta_shift(&self) -> f64 {
        self.g_big.im
    }

    pub fn window_radius(&self) -> Option<usize> {
        self.q_table.as_ref().map(|q| q.radius)
    }

    pub fn g_table(&self, n_w: usize) -> Result<&SquareTable<Complex64>> {
        let needed = 2 * n_w + G_TABLE_MARGIN;
        match &self.g_table {
            Some(t) if t.radius >= needed => Ok(t),
            other => Err(Error::CacheCoverage {
                what: "g-table radius",
                needed,
                available: other.as_ref().map_or(0, |t| t.radius),
            }),
        }
    }

    pub fn q_table(&self, n_w: usize) -> Result<&SquareTable<f64>> {
        match &self.q_table {
            Some(t) if t.radius >= n_w => Ok(t),
            other => Err(Error::CacheCoverage {
                what: "q-table radius",
                needed: n_w,
                available: other.as_ref().map_or(0, |t| t.radius),
            }),
        }
    }

    /// File name identifying (a/λ, polarization, L/λ, N, N̄, N_w).
    pub fn cache_key(config: &ArrayConfig, settings: &SumSettings) -> String {
        let bar = if config.is_pair() { settings.n_bar } else { 0 };
        format!(
            "sums_a{}_{}_L{}_N{}_Nbar{bar}_Nw{}.json",
            config.a_over_lambda,
            config.polarization.label(),
            config.separation().unwrap_or(0.0),
            settings.n_cut,
            settings
                .n_w
                .map_or_else(|| "none".to_string(), |n| n.to_string()),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CacheFile {
            format: CACHE_FORMAT,
            cache: self.clone(),
        };
        fs::write(path, serde_json::to_vec(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: CacheFile = serde_json::from_slice(&fs::read(path)?)?;
        if file.format != CACHE_FORMAT {
            return Err(Error::UnknownName {
                what: "cache format",
                name: file.format.to_string(),
            });
        }
        Ok(file.cache)
    }

    /// Load from `dir` when a matching file exists, otherwise build and
    /// store. Returns the cache and whether it was a hit.
    pub fn load_or_build(
        dir: &Path,
        config: &ArrayConfig,
        settings: SumSettings,
    ) -> Result<(Self, bool)> {
        let path: PathBuf = dir.join(Self::cache_key(config, &settings));
        if path.exists() {
            match Self::load(&path) {
                Ok(c) if c.config == *config && c.settings == settings => {
                    info!("sum cache hit: {}", path.display());
                    return Ok((c, true));
                }
                Ok(_) => info!("sum cache key collision at {}, rebuilding", path.display()),
                Err(e) => info!("unreadable sum cache {} ({e}), rebuilding", path.display()),
            }
        } else {
            info!("sum cache miss: {}", path.display());
        }
        let cache = Self::build(config, settings)?;
        fs::create_dir_all(dir)?;
        cache.save(&path)?;
        Ok((cache, false))
    }
}
