//! Plane-wave light scattering from one or two infinite square arrays of
//! two-level atoms, beyond the weak-field limit.
//!
//! All quantities use natural units: rates are measured in the single-atom
//! decay rate Γ = 1 and lengths in the resonant wavelength λ = 1, so the
//! wavenumber is `k = 2π`. Intensities are expressed as `I/I_sat = 2Ω²`.
//!
//! The crate is organised bottom-up:
//!
//! * [`config`]: domain types shared by everything else;
//! * [`special`]: spherical Hankel and cylindrical Bessel functions,
//!   Gauss–Legendre quadrature;
//! * [`lattice`]: the dipole Green's function and the regularised lattice
//!   sums 𝒢, 𝒢̄ and q_m collected into a [`lattice::SumCache`];
//! * [`integrate`]: fixed-step RK4;
//! * [`mf1`]: first-order mean-field dynamics for one and two arrays;
//! * [`mf2`]: second-order (pair-cumulant) dynamics for a single array;
//! * [`observables`]: reflection, transmission, incoherent scattering,
//!   cavity intensity and weak-field references;
//! * [`scan`]: peak location over detuning.

pub mod config;
pub mod error;
pub mod integrate;
pub mod lattice;
pub mod mf1;
pub mod mf2;
pub mod observables;
pub mod scan;
pub mod special;

pub use config::{
    validate, ArrayConfig, Checked, Drive, Polarization, ScatterResult, SingleState, TwoArrayState,
    WAVENUMBER,
};
pub use error::{Error, Result};
pub use lattice::SumCache;
