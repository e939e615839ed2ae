//! Reflection, transmission, incoherent scattering and cavity intensity.
//!
//! Probabilities are per incident photon, so every observable divides by
//! Ω and is undefined at Ω = 0.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{ArrayConfig, Drive, ScatterResult, SingleState, TwoArrayState};
use crate::error::{Error, Result};
use crate::lattice::{plane_sum, smooth_weight, SumCache};
use crate::mf2::PairWindow;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Smallest |1 − ℛ²e^{2ikL}| accepted by [`wfa_two`].
pub const POLE_GUARD: f64 = 1e-12;

fn require_drive(drive: &Drive) -> Result<()> {
    if drive.omega > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "observables per incident photon need Ω > 0; Ω",
            value: drive.omega,
        })
    }
}

/// 3πΓ/(k²a²), the far-field amplitude per unit ⟨σ⁻⟩/Ω (up to −i).
fn plane_amplitude(config: &ArrayConfig) -> f64 {
    let ka = config.ka();
    3.0 * PI / (ka * ka)
}

/// ℛ = −3iΓπ⟨σ⁻⟩/(Ωk²a²).
pub fn reflection_amplitude(
    sigma_minus: Complex64,
    drive: &Drive,
    config: &ArrayConfig,
) -> Result<Complex64> {
    require_drive(drive)?;
    Ok(-I * plane_amplitude(config) * sigma_minus / drive.omega)
}

/// Q⁽¹⁾ = 3π(Γ/Ωka)²(⟨e⟩ − |⟨σ⁺⟩|²).
pub fn q1(state: &SingleState, drive: &Drive, config: &ArrayConfig) -> Result<f64> {
    require_drive(drive)?;
    Ok(plane_amplitude(config) * state.incoherent_weight() / (drive.omega * drive.omega))
}

/// Ω²Q⁽²⁾ = Σ_{m∈W} Ω²q_m (⟨σ⁺₀σ⁻_m⟩ − |⟨σ⁻⟩|²) W_m, with the Gaussian weight
/// W_m = exp[−36(m²)²/N_w⁴] when `weighted`.
pub fn q2_scaled(window: &PairWindow, cache: &SumCache, weighted: bool) -> Result<f64> {
    let n_w = window.n_w();
    let q = cache.q_table(n_w)?;
    let s2 = window.singles.sigma_minus.norm_sqr();
    let nf = n_w as f64;
    let mut total = 0.0;
    for (&(my, mz), sp) in window.index.seps.iter().zip(&window.sp) {
        let w = if weighted {
            smooth_weight((my * my + mz * mz) as f64, nf)
        } else {
            1.0
        };
        total += q.get(my, mz) * (sp.re - s2) * w;
    }
    Ok(total)
}

/// R, T, S for one array from MF1 singles (Q⁽²⁾ = 0).
pub fn rts_one(state: &SingleState, drive: &Drive, config: &ArrayConfig) -> Result<ScatterResult> {
    rts_one_with_pairs(state, 0.0, drive, config)
}

/// R, T, S for one array from an MF2 window.
pub fn rts_one_mf2(
    window: &PairWindow,
    drive: &Drive,
    cache: &SumCache,
    weighted: bool,
) -> Result<ScatterResult> {
    let q2 = q2_scaled(window, cache, weighted)?;
    rts_one_with_pairs(&window.singles, q2, drive, &cache.config)
}

fn rts_one_with_pairs(
    state: &SingleState,
    q2_scaled: f64,
    drive: &Drive,
    config: &ArrayConfig,
) -> Result<ScatterResult> {
    let r = reflection_amplitude(state.sigma_minus, drive, config)?;
    let q1 = q1(state, drive, config)?;
    let q2 = q2_scaled / (drive.omega * drive.omega);
    Ok(ScatterResult {
        refl: r.norm_sqr(),
        trans: (1.0 + r).norm_sqr(),
        scat: 2.0 * (q1 + q2),
        q1,
        q2,
        refl_amp: r,
        refl_amp_beta: None,
    })
}

/// R, T, S for two arrays.
pub fn rts_two(
    state: &TwoArrayState,
    drive: &Drive,
    config: &ArrayConfig,
) -> Result<ScatterResult> {
    let e = config.cavity_phase();
    let ra = reflection_amplitude(state.alpha.sigma_minus, drive, config)?;
    let rb = reflection_amplitude(state.beta.sigma_minus, drive, config)?;
    let q1 = q1(&state.alpha, drive, config)? + q1(&state.beta, drive, config)?;
    Ok(ScatterResult {
        refl: (ra + rb * e).norm_sqr(),
        trans: (1.0 + ra + rb / e).norm_sqr(),
        scat: 2.0 * q1,
        q1,
        q2: 0.0,
        refl_amp: ra,
        refl_amp_beta: Some(rb),
    })
}

/// ⟨I⟩/I_inc = |1 + ℛ_α|² + |ℛ_β|² between two arrays.
pub fn cavity_intensity(state: &TwoArrayState, drive: &Drive, config: &ArrayConfig) -> Result<f64> {
    let l = config.separation().unwrap_or(0.0);
    if (l - l.round()).abs() > 0.05 {
        warn!("L = {l}λ is not within 0.05λ of an integer; the cavity average is approximate");
    }
    let ra = reflection_amplitude(state.alpha.sigma_minus, drive, config)?;
    let rb = reflection_amplitude(state.beta.sigma_minus, drive, config)?;
    Ok((1.0 + ra).norm_sqr() + rb.norm_sqr())
}

/// Weak-field reflection amplitude of one array,
/// ℛ = −(3iΓπ/k²a²)·(1/2)/(Δ + iΓ/2 + i𝒢).
pub fn wfa_single(delta: f64, cache: &SumCache) -> Complex64 {
    let denom = delta + 0.5 * I + I * cache.g_big;
    -I * plane_amplitude(&cache.config) * 0.5 / denom
}

/// Weak-field amplitudes of two arrays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WfaTwoArrayResult {
    pub r_single: Complex64,
    pub a_alpha: Complex64,
    pub a_beta: Complex64,
    pub r_tot: Complex64,
    pub t_tot: Complex64,
    pub cavity_gain: f64,
}

/// Multiple-reflection sum between two weak-field mirrors a distance L
/// apart.
pub fn wfa_two(delta: f64, cache: &SumCache) -> Result<WfaTwoArrayResult> {
    let l = cache.config.separation().ok_or(Error::Domain {
        what: "two-array weak-field amplitudes need two arrays; num_arrays",
        value: cache.config.num_arrays as f64,
    })?;
    if l <= 1.0 {
        return Err(Error::Domain {
            what: "array separation L/λ (must exceed 1)",
            value: l,
        });
    }
    let r = wfa_single(delta, cache);
    let e = cache.config.cavity_phase();
    let denom = 1.0 - r * r * e * e;
    if denom.norm() < POLE_GUARD {
        return Err(Error::Pole {
            modulus: denom.norm(),
        });
    }
    let a_alpha = r * (1.0 + r) * e * e / denom;
    let a_beta = (1.0 + r) * e / denom;
    Ok(WfaTwoArrayResult {
        r_single: r,
        a_alpha,
        a_beta,
        r_tot: r + (1.0 + r) * a_alpha,
        t_tot: (1.0 + r) * a_beta / e,
        cavity_gain: a_beta.norm_sqr() * (1.0 + r.norm_sqr()),
    })
}

/// Field of a uniformly polarised array on the axis through an atom, per
/// unit dipole amplitude, together with its plane-wave part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearFieldPoint {
    pub x: f64,
    pub field: Complex64,
    pub asymptote: Complex64,
    /// |field − asymptote|.
    pub residual: f64,
}

/// Lattice-summed field at distance `x` (0.5λ ≤ x ≤ 10λ) from the array.
pub fn near_field(config: &ArrayConfig, x: f64, n: usize) -> Result<NearFieldPoint> {
    if !(0.5..=10.0).contains(&x) {
        return Err(Error::Domain {
            what: "near-field probe distance x/λ (allowed 0.5 to 10)",
            value: x,
        });
    }
    let reduced = plane_sum(config, x, n)?;
    let outgoing = Complex64::from_polar(1.0, config.ka() / config.a_over_lambda * x);
    let far = config.far_array_coupling();
    Ok(NearFieldPoint {
        x,
        field: reduced * outgoing,
        asymptote: far * outgoing,
        residual: (reduced - far).norm(),
    })
}

/// Exponential fit of the near-field residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub points: Vec<NearFieldPoint>,
    /// Least-squares slope of −ln|residual|; `None` when the residual is
    /// below 10⁻¹⁴ (already fully asymptotic).
    pub kappa_fit: Option<f64>,
    /// k√((λ/a)² − 1).
    pub kappa_predicted: f64,
}

pub fn fit_near_field_decay(config: &ArrayConfig, xs: &[f64], n: usize) -> Result<DecayFit> {
    let points = xs
        .iter()
        .map(|&x| near_field(config, x, n))
        .collect::<Result<Vec<_>>>()?;
    let usable = points.len() >= 2 && points.iter().all(|p| p.residual > 1e-14);
    let kappa_fit = usable.then(|| {
        let m = points.len() as f64;
        let mx = points.iter().map(|p| p.x).sum::<f64>() / m;
        let my = points.iter().map(|p| p.residual.ln()).sum::<f64>() / m;
        let sxy: f64 = points
            .iter()
            .map(|p| (p.x - mx) * (p.residual.ln() - my))
            .sum();
        let sxx: f64 = points.iter().map(|p| (p.x - mx).powi(2)).sum();
        -sxy / sxx
    });
    Ok(DecayFit {
        points,
        kappa_fit,
        kappa_predicted: config.evanescent_kappa(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Polarization;

    fn cache() -> SumCache {
        let c = ArrayConfig::single(0.8, Polarization::DeltaMpm1);
        SumCache::from_couplings(&c, Complex64::new(c.collective_half_width(), 0.0048), None)
    }

    #[test]
    fn wfa_total_reflection_on_resonance() {
        let c = cache();
        let r = wfa_single(c.delta_shift(), &c);
        assert!((r + 1.0).norm() < 1e-14);
        assert!(wfa_single(1e9, &c).norm() < 1e-9);
    }

    #[test]
    fn wfa_lorentzian() {
        let c = cache();
        let width = 2.0 * (0.5 + c.g_big.re);
        for d in [-2.0, -0.3, 0.1, 1.7] {
            let x = d - c.delta_shift();
            let want = (0.5 * width).powi(2) / (x * x + (0.5 * width).powi(2));
            assert!((wfa_single(d, &c).norm_sqr() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn amplitude_is_linear() {
        let c = ArrayConfig::single(0.8, Polarization::DeltaMpm1);
        let d = Drive::new(0.1, 0.0);
        let s = Complex64::new(0.01, -0.02);
        let r1 = reflection_amplitude(s, &d, &c).unwrap();
        let r2 = reflection_amplitude(2.0 * s, &d, &c).unwrap();
        assert!((r2 - 2.0 * r1).norm() < 1e-16);
        assert_eq!(
            reflection_amplitude(Complex64::new(0.0, 0.0), &d, &c)
                .unwrap()
                .norm(),
            0.0
        );
        assert!(reflection_amplitude(s, &Drive::new(0.0, 0.0), &c).is_err());
    }

    #[test]
    fn dark_arrays_transmit_everything() {
        let c = ArrayConfig::pair(0.8, Polarization::DeltaMpm1, 5.01);
        let d = Drive::new(0.1, 0.0);
        let r = rts_two(&TwoArrayState::default(), &d, &c).unwrap();
        assert_eq!((r.refl, r.trans, r.scat), (0.0, 1.0, 0.0));
        assert_eq!(
            cavity_intensity(&TwoArrayState::default(), &d, &c).unwrap(),
            1.0
        );
    }

    #[test]
    fn pole_guard() {
        let c = ArrayConfig::pair(0.8, Polarization::DeltaMpm1, 5.0);
        // a lossless mirror with ℛ = −1 and e^{2ikL} = 1 is singular
        let cache = SumCache::from_couplings(
            &c,
            Complex64::new(c.collective_half_width(), 0.0),
            Some(Complex64::new(0.0, 0.0)),
        );
        assert!(matches!(wfa_two(0.0, &cache), Err(Error::Pole { .. })));
    }

    #[test]
    fn kappa_closed_form() {
        let near_one = ArrayConfig::single(0.999_999, Polarization::DeltaMpm1);
        assert!(near_one.evanescent_kappa() < 0.01);
        let c = ArrayConfig::single(0.8, Polarization::DeltaMpm1);
        assert!((c.evanescent_kappa() - 4.712).abs() < 1e-3);
        assert!(near_field(&c, 0.2, 200).is_err());
    }
}
