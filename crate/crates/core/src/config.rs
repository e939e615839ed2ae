//! Geometry, drive and state types.
//!
//! Units: Γ = 1 for every rate, λ = 1 for every length. Nothing else in the
//! crate introduces a second convention; conversions between intensity and
//! Rabi frequency go exclusively through [`Drive::from_intensity`] and
//! [`Drive::intensity`].

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resonant wavenumber k = 2π/λ with λ = 1.
pub const WAVENUMBER: f64 = 2.0 * PI;

/// Numerical slack used by the positivity checks on single-site states.
pub const POSITIVITY_SLACK: f64 = 1e-10;

/// Dipole orientation of the closed two-level transition.
///
/// `DeltaM0` is a linear dipole along z, in the plane of the array.
/// `DeltaMpm1` is a circular dipole whose quantisation axis is the array
/// normal x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarization {
    DeltaM0,
    DeltaMpm1,
}

impl Polarization {
    pub fn label(self) -> &'static str {
        match self {
            Polarization::DeltaM0 => "dm0",
            Polarization::DeltaMpm1 => "dmpm1",
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dm0" | "0" | "linear" | "delta-m0" => Ok(Polarization::DeltaM0),
            "dmpm1" | "pm1" | "+-1" | "circular" | "delta-mpm1" => Ok(Polarization::DeltaMpm1),
            _ => Err(Error::UnknownName {
                what: "polarization",
                name: s.to_string(),
            }),
        }
    }
}

/// Square lattice geometry: spacing, dipole orientation and, for a pair of
/// arrays, their separation along the propagation axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub a_over_lambda: f64,
    pub polarization: Polarization,
    pub num_arrays: u8,
    /// Separation L/λ of the two arrays; ignored when `num_arrays == 1`.
    #[serde(default)]
    pub l_over_lambda: f64,
}

impl ArrayConfig {
    pub fn single(a_over_lambda: f64, polarization: Polarization) -> Self {
        ArrayConfig {
            a_over_lambda,
            polarization,
            num_arrays: 1,
            l_over_lambda: 0.0,
        }
    }

    pub fn pair(a_over_lambda: f64, polarization: Polarization, l_over_lambda: f64) -> Self {
        ArrayConfig {
            a_over_lambda,
            polarization,
            num_arrays: 2,
            l_over_lambda,
        }
    }

    pub fn is_pair(&self) -> bool {
        self.num_arrays == 2
    }

    pub fn separation(&self) -> Option<f64> {
        self.is_pair().then_some(self.l_over_lambda)
    }

    /// Dimensionless k·a.
    pub fn ka(&self) -> f64 {
        WAVENUMBER * self.a_over_lambda
    }

    /// The phase e^{ikL} picked up between the arrays (1 for a single array).
    pub fn cavity_phase(&self) -> Complex64 {
        match self.separation() {
            Some(l) => Complex64::from_polar(1.0, WAVENUMBER * l),
            None => Complex64::new(1.0, 0.0),
        }
    }

    /// Closed form of Re 𝒢 = γ/2 = (Γ/2)[(3/4π)(λ/a)² − 1].
    pub fn collective_half_width(&self) -> f64 {
        0.5 * (3.0 / (4.0 * PI) / (self.a_over_lambda * self.a_over_lambda) - 1.0)
    }

    /// Plane-wave coupling between two arrays far apart, 3πΓ/(2k²a²).
    pub fn far_array_coupling(&self) -> f64 {
        let ka = self.ka();
        1.5 * PI / (ka * ka)
    }

    /// Decay constant of the slowest evanescent diffraction order,
    /// κ_x = k√((λ/a)² − 1).
    pub fn evanescent_kappa(&self) -> f64 {
        let r = 1.0 / self.a_over_lambda;
        WAVENUMBER * (r * r - 1.0).max(0.0).sqrt()
    }
}

/// Laser drive: real Rabi frequency and detuning, both in units of Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub omega: f64,
    pub delta: f64,
}

impl Drive {
    pub fn new(omega: f64, delta: f64) -> Self {
        Drive { omega, delta }
    }

    /// Drive at intensity `I/I_sat`, using I/I_sat = 2Ω²/Γ².
    pub fn from_intensity(intensity: f64, delta: f64) -> Self {
        Drive {
            omega: (0.5 * intensity).sqrt(),
            delta,
        }
    }

    pub fn intensity(&self) -> f64 {
        2.0 * self.omega * self.omega
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Drive { delta, ..self }
    }
}

/// One reason a configuration was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite(&'static str),
    NonPositiveSpacing(f64),
    /// a ≥ λ opens propagating diffraction orders.
    DiffractionOrder(f64),
    NegativeRabi(f64),
    ArrayCount(u8),
    SeparationTooSmall(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite(what) => write!(f, "{what} is not finite"),
            Violation::NonPositiveSpacing(a) => {
                write!(f, "lattice spacing a/λ = {a} must be positive")
            }
            Violation::DiffractionOrder(a) => write!(
                f,
                "lattice spacing a/λ = {a} >= 1 admits diffraction orders"
            ),
            Violation::NegativeRabi(o) => write!(f, "Rabi frequency {o} is negative"),
            Violation::ArrayCount(n) => write!(f, "num_arrays = {n}; only 1 or 2 are supported"),
            Violation::SeparationTooSmall(l) => write!(
                f,
                "array separation L/λ = {l} must exceed 1 for the far-array coupling to hold"
            ),
        }
    }
}

/// A configuration that passed [`validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checked {
    pub config: ArrayConfig,
    pub drive: Drive,
}

/// Check every invariant of the geometry and drive, collecting all
/// violations instead of stopping at the first.
pub fn validate(config: ArrayConfig, drive: Drive) -> Result<Checked> {
    let mut bad = Vec::new();
    let a = config.a_over_lambda;
    if !a.is_finite() {
        bad.push(Violation::NonFinite("a/λ"));
    } else if a <= 0.0 {
        bad.push(Violation::NonPositiveSpacing(a));
    } else if a >= 1.0 {
        bad.push(Violation::DiffractionOrder(a));
    }
    if !drive.omega.is_finite() {
        bad.push(Violation::NonFinite("Ω"));
    } else if drive.omega < 0.0 {
        bad.push(Violation::NegativeRabi(drive.omega));
    }
    if !drive.delta.is_finite() {
        bad.push(Violation::NonFinite("Δ"));
    }
    let mut config = config;
    match config.num_arrays {
        1 => config.l_over_lambda = 0.0,
        2 => {
            let l = config.l_over_lambda;
            if !l.is_finite() {
                bad.push(Violation::NonFinite("L/λ"));
            } else if l <= 1.0 {
                bad.push(Violation::SeparationTooSmall(l));
            }
        }
        n => bad.push(Violation::ArrayCount(n)),
    }
    if bad.is_empty() {
        Ok(Checked { config, drive })
    } else {
        Err(Error::InvalidConfig(bad))
    }
}

/// Position-independent one-atom expectation values ⟨σ⁻⟩ and ⟨e⟩.
///
/// The same type doubles as the time derivative of a state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SingleState {
    pub sigma_minus: Complex64,
    pub e_pop: f64,
}

impl SingleState {
    pub fn new(sigma_minus: Complex64, e_pop: f64) -> Self {
        SingleState { sigma_minus, e_pop }
    }

    pub fn ground() -> Self {
        SingleState::default()
    }

    /// ⟨σ⁺⟩ = ⟨σ⁻⟩*.
    pub fn sigma_plus(&self) -> Complex64 {
        self.sigma_minus.conj()
    }

    /// ⟨e⟩ − |⟨σ⁺⟩|², the single-site incoherent weight.
    pub fn incoherent_weight(&self) -> f64 {
        self.e_pop - self.sigma_minus.norm_sqr()
    }

    pub fn max_norm(&self) -> f64 {
        self.sigma_minus
            .re
            .abs()
            .max(self.sigma_minus.im.abs())
            .max(self.e_pop.abs())
    }

    /// Site density-matrix positivity: 0 ≤ ⟨e⟩ ≤ 1 and
    /// |⟨σ⁻⟩|² ≤ ⟨e⟩(1 − ⟨e⟩) + slack.
    pub fn check(&self, slack: f64) -> std::result::Result<(), String> {
        let e = self.e_pop;
        if !(e.is_finite() && self.sigma_minus.re.is_finite() && self.sigma_minus.im.is_finite()) {
            return Err("non-finite state".into());
        }
        if e < -slack || e > 1.0 + slack {
            return Err(format!("⟨e⟩ = {e} outside [0, 1]"));
        }
        let lhs = self.sigma_minus.norm_sqr();
        if lhs > e * (1.0 - e) + slack {
            return Err(format!(
                "|⟨σ⁻⟩|² = {lhs:e} exceeds ⟨e⟩(1-⟨e⟩) = {:e}",
                e * (1.0 - e)
            ));
        }
        Ok(())
    }
}

/// Single-atom expectation values of the array at x = 0 (α) and x = L (β).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwoArrayState {
    pub alpha: SingleState,
    pub beta: SingleState,
}

impl TwoArrayState {
    pub fn max_norm(&self) -> f64 {
        self.alpha.max_norm().max(self.beta.max_norm())
    }

    pub fn check(&self, slack: f64) -> std::result::Result<(), String> {
        self.alpha
            .check(slack)
            .map_err(|e| format!("array α: {e}"))?;
        self.beta.check(slack).map_err(|e| format!("array β: {e}"))
    }
}

/// Coherent reflection/transmission and incoherent scattering per incident
/// photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterResult {
    pub refl: f64,
    pub trans: f64,
    pub scat: f64,
    /// One-atom incoherent flux Q⁽¹⁾ in one direction.
    pub q1: f64,
    /// Pair-cumulant incoherent flux Q⁽²⁾ in one direction.
    pub q2: f64,
    /// Reflection amplitude of the (first) array.
    pub refl_amp: Complex64,
    /// Reflection amplitude of array β for a pair of arrays.
    pub refl_amp_beta: Option<Complex64>,
}

impl ScatterResult {
    pub fn total(&self) -> f64 {
        self.refl + self.trans + self.scat
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(a: f64) -> ArrayConfig {
        ArrayConfig::single(a, Polarization::DeltaMpm1)
    }

    #[test]
    fn accepts_reference_geometry() {
        let ok = validate(single(0.8), Drive::new(0.01, 0.0)).unwrap();
        assert_eq!(ok.config.a_over_lambda, 0.8);
    }

    #[test]
    fn rejects_diffraction_orders() {
        match validate(single(1.2), Drive::new(0.1, 0.0)) {
            Err(Error::InvalidConfig(v)) => {
                assert_eq!(v, vec![Violation::DiffractionOrder(1.2)]);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_rabi_and_collects_all() {
        match validate(single(1.0), Drive::new(-1.0, 0.0)) {
            Err(Error::InvalidConfig(v)) => {
                assert_eq!(v.len(), 2);
                assert!(v.contains(&Violation::NegativeRabi(-1.0)));
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn pair_needs_separation_beyond_a_wavelength() {
        let cfg = ArrayConfig::pair(0.8, Polarization::DeltaM0, 0.7);
        assert!(validate(cfg, Drive::new(0.1, 0.0)).is_err());
        let cfg = ArrayConfig::pair(0.8, Polarization::DeltaM0, 5.01);
        assert!(validate(cfg, Drive::new(0.1, 0.0)).is_ok());
    }

    #[test]
    fn single_array_ignores_separation() {
        let mut cfg = single(0.6);
        cfg.l_over_lambda = -3.0;
        let ok = validate(cfg, Drive::new(0.0, 1.0)).unwrap();
        assert_eq!(ok.config.l_over_lambda, 0.0);
    }

    #[test]
    fn intensity_round_trip() {
        for &i in &[2e-11, 2e-8, 2e-4, 2e-3, 0.02, 0.2, 2.0, 20.0, 200.0] {
            let d = Drive::from_intensity(i, 0.0);
            let back = d.intensity();
            assert!(
                ((back - i) / i).abs() <= 2.0 * f64::EPSILON,
                "{i} -> {back}"
            );
        }
        // Rabi frequencies quoted alongside the intensities
        assert!((Drive::from_intensity(2e-4, 0.0).omega - 0.01).abs() < 1e-17);
        assert!((Drive::from_intensity(200.0, 0.0).omega - 10.0).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_at_point_eight() {
        let cfg = single(0.8);
        assert!((cfg.collective_half_width() + 0.313_490_301_064_3).abs() < 1e-12);
        assert!((cfg.far_array_coupling() - 0.186_510).abs() < 1e-6);
        assert!((cfg.evanescent_kappa() - 4.712_388_980_4).abs() < 1e-9);
    }

    #[test]
    fn positivity_check() {
        assert!(SingleState::new(Complex64::new(0.5, 0.0), 0.5)
            .check(1e-10)
            .is_ok());
        assert!(SingleState::new(Complex64::new(0.6, 0.0), 0.5)
            .check(1e-10)
            .is_err());
        assert!(SingleState::new(Complex64::new(0.0, 0.0), 1.2)
            .check(1e-10)
            .is_err());
    }
}
