//! RK4 evolution of the window to its steady state.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::rhs::{Mf2Model, RhsMode};
use super::{check_window, CMode, PairWindow};
use crate::config::Drive;
use crate::error::Result;
use crate::integrate::{rk4_step, OdeVector};
use crate::lattice::SumCache;

/// Default MF2 step Γ·dt. Fixed points of RK4 coincide with zeros of the
/// RHS, so the step only affects the approach, not the result.
pub const DEFAULT_MF2_STEP: f64 = 0.05;

/// Multiple of ε·|y|/h below which the residual is round-off: at a fixed
/// point of the RK4 map the increments h·ẏ cannot resolve finer than ε·|y|.
pub const ROUNDOFF_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mf2Settings {
    pub step: f64,
    /// RHS max-norm tolerance; `None` uses 10⁻⁶Ω⁴ clamped to [10⁻¹⁸, 10⁻¹⁰], tracking the
    /// size of the pair cumulants at weak drive. The round-off floor
    /// `ROUNDOFF_FACTOR·ε·|y|/step` is applied on top.
    pub tol: Option<f64>,
    pub t_max: f64,
    /// Keep every pair equal to the product of singles (MF1 limit): only
    /// the singles evolve, driven by the factorised window.
    pub zero_cumulants: bool,
    pub c_mode: CMode,
    pub rhs_mode: RhsMode,
}

impl Default for Mf2Settings {
    fn default() -> Self {
        Mf2Settings {
            step: DEFAULT_MF2_STEP,
            tol: None,
            t_max: 1e4,
            zero_cumulants: false,
            c_mode: CMode::Fft,
            rhs_mode: RhsMode::Half,
        }
    }
}

impl Mf2Settings {
    pub fn tolerance(&self, drive: &Drive) -> f64 {
        self.tol.unwrap_or_else(|| {
            let o2 = drive.omega * drive.omega;
            (1e-6 * o2 * o2).clamp(1e-18, 1e-10)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mf2Diagnostics {
    /// Largest cumulant on the outermost ring of the window.
    pub edge_cumulant: f64,
    /// Largest cumulant anywhere in the window.
    pub max_cumulant: f64,
    /// Deviation from the ss/ee/sp reflection relations.
    pub symmetry_defect: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct Mf2Report {
    pub window: PairWindow,
    pub residual: f64,
    pub elapsed_time: f64,
    pub converged: bool,
    pub diagnostics: Mf2Diagnostics,
}

pub fn diagnostics(w: &PairWindow, steps: usize) -> Mf2Diagnostics {
    let edge = w
        .index
        .edge()
        .into_iter()
        .map(|i| w.cumulant_at(i))
        .fold(0.0, f64::max);
    let all = (0..w.index.len())
        .map(|i| w.cumulant_at(i))
        .fold(0.0, f64::max);
    Mf2Diagnostics {
        edge_cumulant: edge,
        max_cumulant: all,
        symmetry_defect: w.symmetry_defect(),
        steps,
    }
}

/// Evolve from the all-zero window on the lattice of `cache`.
pub fn evolve_mf2_to_steady(
    drive: &Drive,
    cache: &SumCache,
    n_w: usize,
    settings: &Mf2Settings,
) -> Result<Mf2Report> {
    let model = Mf2Model::from_cache(cache, n_w)?.with_modes(settings.c_mode, settings.rhs_mode);
    let start = model.zeros();
    evolve_model(&model, drive, start, settings)
}

/// Evolve `initial` under `model` until the RHS max-norm drops below the
/// tolerance or `t_max` is reached.
pub fn evolve_model(
    model: &Mf2Model,
    drive: &Drive,
    initial: PairWindow,
    settings: &Mf2Settings,
) -> Result<Mf2Report> {
    let h = settings.step;
    let tol = settings.tolerance(drive);
    let max_steps = (settings.t_max / h).ceil() as usize;
    let mut w = initial;
    if settings.zero_cumulants {
        w.factorize();
    }
    check_window(&w, 0.0)?;
    for n in 0..max_steps {
        let (mut next, k1) = if settings.zero_cumulants {
            rk4_step(&w, h, |y| singles_only(model, y, drive))
        } else {
            rk4_step(&w, h, |y| model.rhs(y, drive))
        };
        let residual = if settings.zero_cumulants {
            k1.singles.max_norm()
        } else {
            k1.max_norm()
        };
        let floor = ROUNDOFF_FACTOR * f64::EPSILON * w.max_norm() / h;
        if residual <= tol.max(floor) {
            debug!(
                "MF2 steady after Γt = {} (residual {residual:e})",
                n as f64 * h
            );
            let diagnostics = diagnostics(&w, n);
            return Ok(Mf2Report {
                window: w,
                residual,
                elapsed_time: n as f64 * h,
                converged: true,
                diagnostics,
            });
        }
        if settings.zero_cumulants {
            next.factorize();
        }
        check_window(&next, (n + 1) as f64 * h)?;
        w = next;
    }
    let residual = if settings.zero_cumulants {
        singles_only(model, &w, drive).singles.max_norm()
    } else {
        model.rhs(&w, drive).max_norm()
    };
    warn!(
        "MF2 evolution reached Γt = {} with residual {residual:e} (tolerance {tol:e})",
        settings.t_max
    );
    let diagnostics = diagnostics(&w, max_steps);
    Ok(Mf2Report {
        window: w,
        residual,
        elapsed_time: max_steps as f64 * h,
        converged: false,
        diagnostics,
    })
}

fn singles_only(model: &Mf2Model, y: &PairWindow, drive: &Drive) -> PairWindow {
    let projected = PairWindow::factorized(y.index.clone(), y.singles);
    let mut d = model.zeros();
    d.singles = model.rhs_singles(&projected, drive);
    d
}
