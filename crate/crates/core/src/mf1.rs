//! First-order mean-field dynamics.
//!
//! Each array is described by one atom's ⟨σ⁻⟩ and ⟨e⟩; the pair expectation
//! values are replaced by products. Every array then obeys the single-atom
//! Bloch equations with the drive replaced by the local field
//!
//! Ω̄_a = Ω_a − 2i Σ_b K_ab ⟨σ⁻_b⟩,
//!
//! where K = [𝒢] for one array and K = [[𝒢, 𝒢̄e^{ikL}], [𝒢̄e^{ikL}, 𝒢]] for
//! two, with Ω_β = Ωe^{ikL}.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{Drive, SingleState, TwoArrayState, POSITIVITY_SLACK};
use crate::error::{Error, Result};
use crate::integrate::{rk4_step, OdeVector};
use crate::lattice::SumCache;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default RK4 step Γ·dt.
pub const DEFAULT_STEP: f64 = 0.005;
/// Default steady-state tolerance on the RHS max-norm.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Newton stops once the residual is below this.
pub const NEWTON_TOL: f64 = 1e-13;
/// Largest stable step is this over Γ_eff.
pub const STEP_SAFETY: f64 = 0.02;

/// Optical Bloch equations of one atom driven by (possibly local) field Ω.
#[inline]
fn bloch(s: &SingleState, omega: Complex64, delta: f64) -> SingleState {
    let sm = s.sigma_minus;
    SingleState {
        sigma_minus: Complex64::new(-0.5, delta) * sm + 0.5 * I * omega * (2.0 * s.e_pop - 1.0),
        e_pop: -s.e_pop + (omega * sm.conj()).im,
    }
}

/// d/dt of an isolated atom.
pub fn rhs_isolated(state: &SingleState, drive: &Drive) -> SingleState {
    bloch(state, Complex64::new(drive.omega, 0.0), drive.delta)
}

/// d/dt of one array with in-plane coupling 𝒢.
pub fn rhs_one(state: &SingleState, drive: &Drive, cache: &SumCache) -> SingleState {
    let omega_bar = drive.omega - 2.0 * I * cache.g_big * state.sigma_minus;
    bloch(state, omega_bar, drive.delta)
}

/// d/dt of two arrays coupled through 𝒢̄.
pub fn rhs_two(state: &TwoArrayState, drive: &Drive, cache: &SumCache) -> TwoArrayState {
    let (g, gb) = cache.couplings();
    let e = cache.config.cavity_phase();
    let cross = gb * e;
    let (sa, sb) = (state.alpha.sigma_minus, state.beta.sigma_minus);
    let om_a = drive.omega - 2.0 * I * (g * sa + cross * sb);
    let om_b = drive.omega * e - 2.0 * I * (g * sb + cross * sa);
    TwoArrayState {
        alpha: bloch(&state.alpha, om_a, drive.delta),
        beta: bloch(&state.beta, om_b, drive.delta),
    }
}

/// States that can be checked for single-site positivity.
pub trait PhysicalState: OdeVector {
    fn check(&self, slack: f64) -> std::result::Result<(), String>;
}

impl PhysicalState for SingleState {
    fn check(&self, slack: f64) -> std::result::Result<(), String> {
        SingleState::check(self, slack)
    }
}

impl PhysicalState for TwoArrayState {
    fn check(&self, slack: f64) -> std::result::Result<(), String> {
        TwoArrayState::check(self, slack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteadyMethod {
    TimeEvolution,
    Newton,
    TimeThenNewton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyReport<S> {
    pub state: S,
    /// Max-norm of the RHS at exit.
    pub residual: f64,
    /// Simulated Γt.
    pub elapsed_time: f64,
    pub method: SteadyMethod,
    pub converged: bool,
    pub newton_iterations: usize,
}

/// Time-evolution settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveSettings {
    /// Γ·dt; `None` picks min(0.005, 0.02/Γ_eff).
    pub step: Option<f64>,
    /// Steady once the RHS max-norm stays below this for `sustain`.
    pub tol: f64,
    pub t_max: f64,
    pub sustain: f64,
}

impl Default for EvolveSettings {
    fn default() -> Self {
        EvolveSettings {
            step: None,
            tol: DEFAULT_TOL,
            t_max: 1e6,
            sustain: 1.0,
        }
    }
}

impl EvolveSettings {
    /// The step to use for rate scale `gamma_eff`, checked against the
    /// stability bound.
    pub fn resolve_step(&self, gamma_eff: f64) -> Result<f64> {
        let limit = STEP_SAFETY / gamma_eff;
        match self.step {
            None => Ok(DEFAULT_STEP.min(limit)),
            Some(h) if h > 0.0 && h <= limit * (1.0 + 1e-12) => Ok(h),
            Some(h) => Err(Error::StepTooLarge { step: h, limit }),
        }
    }
}

/// Γ_eff = max(1, |𝒢|, |𝒢̄|, Ω) in units of Γ.
pub fn gamma_eff(drive: &Drive, cache: &SumCache) -> f64 {
    let (g, gb) = cache.couplings();
    1f64.max(g.norm()).max(gb.norm()).max(drive.omega)
}

/// Integrate y' = rhs(y) with RK4 until the RHS max-norm stays below
/// `threshold(y)` over Γt = `settings.sustain`, or `t_max` is reached.
fn evolve_until<S, F, T>(
    mut rhs: F,
    initial: S,
    step: f64,
    settings: &EvolveSettings,
    threshold: T,
) -> Result<SteadyReport<S>>
where
    S: PhysicalState,
    F: FnMut(&S) -> S,
    T: Fn(&S) -> f64,
{
    initial
        .check(POSITIVITY_SLACK)
        .map_err(|detail| Error::Invariant { time: 0.0, detail })?;
    let sustain_steps = (settings.sustain / step).ceil().max(1.0) as usize;
    let max_steps = (settings.t_max / step).ceil() as usize;
    let mut y = initial;
    let mut quiet = 0usize;
    let mut residual = f64::INFINITY;
    for n in 0..max_steps {
        let (next, k1) = rk4_step(&y, step, &mut rhs);
        residual = k1.max_norm();
        if residual <= threshold(&y) {
            quiet += 1;
            if quiet >= sustain_steps {
                return Ok(SteadyReport {
                    state: y,
                    residual,
                    elapsed_time: n as f64 * step,
                    method: SteadyMethod::TimeEvolution,
                    converged: true,
                    newton_iterations: 0,
                });
            }
        } else {
            quiet = 0;
        }
        let time = (n + 1) as f64 * step;
        next.check(POSITIVITY_SLACK)
            .map_err(|detail| Error::Invariant { time, detail })?;
        y = next;
    }
    let residual_now = rhs(&y).max_norm();
    warn!(
        "time evolution reached Γt = {} with residual {residual_now:e}",
        settings.t_max
    );
    let _ = residual;
    Ok(SteadyReport {
        state: y,
        residual: residual_now,
        elapsed_time: max_steps as f64 * step,
        method: SteadyMethod::TimeEvolution,
        converged: false,
        newton_iterations: 0,
    })
}

/// RK4 time evolution to a steady state with RHS max-norm below
/// `settings.tol`, sustained over Γt = `settings.sustain`.
pub fn evolve_to_steady<S, F>(
    rhs: F,
    initial: S,
    settings: &EvolveSettings,
    gamma_eff: f64,
) -> Result<SteadyReport<S>>
where
    S: PhysicalState,
    F: FnMut(&S) -> S,
{
    let step = settings.resolve_step(gamma_eff)?;
    let tol = settings.tol;
    evolve_until(rhs, initial, step, settings, |_| tol)
}

/// Array couplings in matrix form for the generic Newton solver.
struct Coupled {
    k: Vec<Complex64>,
    omega: Vec<Complex64>,
    delta: f64,
    n: usize,
}

impl Coupled {
    fn one(drive: &Drive, cache: &SumCache) -> Self {
        Coupled {
            k: vec![cache.g_big],
            omega: vec![Complex64::new(drive.omega, 0.0)],
            delta: drive.delta,
            n: 1,
        }
    }

    fn two(drive: &Drive, cache: &SumCache) -> Self {
        let (g, gb) = cache.couplings();
        let e = cache.config.cavity_phase();
        Coupled {
            k: vec![g, gb * e, gb * e, g],
            omega: vec![Complex64::new(drive.omega, 0.0), drive.omega * e],
            delta: drive.delta,
            n: 2,
        }
    }

    fn unpack(&self, x: &DVector<f64>) -> Vec<SingleState> {
        (0..self.n)
            .map(|a| SingleState::new(Complex64::new(x[3 * a], x[3 * a + 1]), x[3 * a + 2]))
            .collect()
    }

    fn local_fields(&self, s: &[SingleState]) -> Vec<Complex64> {
        (0..self.n)
            .map(|a| {
                let mut field = self.omega[a];
                for (b, sb) in s.iter().enumerate() {
                    field -= 2.0 * I * self.k[a * self.n + b] * sb.sigma_minus;
                }
                field
            })
            .collect()
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let s = self.unpack(x);
        let fields = self.local_fields(&s);
        let mut f = DVector::zeros(3 * self.n);
        for a in 0..self.n {
            let d = bloch(&s[a], fields[a], self.delta);
            f[3 * a] = d.sigma_minus.re;
            f[3 * a + 1] = d.sigma_minus.im;
            f[3 * a + 2] = d.e_pop;
        }
        f
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let s = self.unpack(x);
        let fields = self.local_fields(&s);
        let m = 3 * self.n;
        let mut j = DMatrix::zeros(m, m);
        let lin = Complex64::new(-0.5, self.delta);
        for a in 0..self.n {
            let inv_a = 2.0 * s[a].e_pop - 1.0;
            let conj_a = s[a].sigma_minus.conj();
            for b in 0..self.n {
                let kab = self.k[a * self.n + b];
                // σ-equation is holomorphic in σ_b
                let mut d = kab * inv_a;
                if a == b {
                    d += lin;
                }
                j[(3 * a, 3 * b)] = d.re;
                j[(3 * a + 1, 3 * b)] = d.im;
                j[(3 * a, 3 * b + 1)] = -d.im;
                j[(3 * a + 1, 3 * b + 1)] = d.re;
                // e-equation: Im(dΩ̄·σ* + Ω̄·dσ*), dΩ̄ = −2iK dσ
                let mut dre = -2.0 * I * kab * conj_a;
                let mut dim = 2.0 * kab * conj_a;
                if a == b {
                    dre += fields[a];
                    dim -= I * fields[a];
                }
                j[(3 * a + 2, 3 * b)] = dre.im;
                j[(3 * a + 2, 3 * b + 1)] = dim.im;
            }
            let de = I * fields[a];
            j[(3 * a, 3 * a + 2)] = de.re;
            j[(3 * a + 1, 3 * a + 2)] = de.im;
            j[(3 * a + 2, 3 * a + 2)] = -1.0;
        }
        j
    }

    fn newton(&self, guess: &[SingleState], tol: f64) -> (Vec<SingleState>, f64, usize, bool) {
        let mut x = DVector::zeros(3 * self.n);
        for (a, s) in guess.iter().enumerate() {
            x[3 * a] = s.sigma_minus.re;
            x[3 * a + 1] = s.sigma_minus.im;
            x[3 * a + 2] = s.e_pop;
        }
        let mut r = self.residual(&x).amax();
        let mut iterations = 0;
        while iterations < 50 {
            let f = self.residual(&x);
            let Some(dx) = self.jacobian(&x).lu().solve(&f) else {
                debug!("singular Newton Jacobian after {iterations} iterations");
                return (self.unpack(&x), r, iterations, false);
            };
            x -= &dx;
            iterations += 1;
            r = self.residual(&x).amax();
            if !r.is_finite() {
                return (self.unpack(&x), r, iterations, false);
            }
            let scale = x.amax().max(f64::MIN_POSITIVE);
            if r <= tol && dx.amax() <= 1e-9 * scale {
                return (self.unpack(&x), r, iterations, true);
            }
        }
        (self.unpack(&x), r, iterations, r <= tol)
    }
}

/// Newton refinement of the single-array steady state.
pub fn newton_steady_one(
    drive: &Drive,
    cache: &SumCache,
    guess: SingleState,
    tol: f64,
) -> SteadyReport<SingleState> {
    let (s, residual, iterations, converged) = Coupled::one(drive, cache).newton(&[guess], tol);
    SteadyReport {
        state: s[0],
        residual,
        elapsed_time: 0.0,
        method: SteadyMethod::Newton,
        converged,
        newton_iterations: iterations,
    }
}

/// Newton refinement of the two-array steady state.
pub fn newton_steady_two(
    drive: &Drive,
    cache: &SumCache,
    guess: TwoArrayState,
    tol: f64,
) -> SteadyReport<TwoArrayState> {
    let (s, residual, iterations, converged) =
        Coupled::two(drive, cache).newton(&[guess.alpha, guess.beta], tol);
    SteadyReport {
        state: TwoArrayState {
            alpha: s[0],
            beta: s[1],
        },
        residual,
        elapsed_time: 0.0,
        method: SteadyMethod::Newton,
        converged,
        newton_iterations: iterations,
    }
}

/// Steady-state protocol settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadySettings {
    pub evolve: EvolveSettings,
    /// Hand over to Newton once the RHS is below this fraction of the state
    /// size. `None` disables Newton.
    pub handoff: Option<f64>,
}

impl Default for SteadySettings {
    fn default() -> Self {
        SteadySettings {
            evolve: EvolveSettings::default(),
            handoff: Some(1e-4),
        }
    }
}

fn time_then_newton<S, F, N>(
    rhs: F,
    initial: S,
    settings: &SteadySettings,
    gamma_eff: f64,
    newton: N,
) -> Result<SteadyReport<S>>
where
    S: PhysicalState + Copy,
    F: FnMut(&S) -> S + Clone,
    N: Fn(S) -> SteadyReport<S>,
{
    let ev = &settings.evolve;
    let Some(rel) = settings.handoff else {
        return evolve_to_steady(rhs, initial, ev, gamma_eff);
    };
    let step = ev.resolve_step(gamma_eff)?;
    let tol = ev.tol;
    let coarse = evolve_until(rhs.clone(), initial, step, ev, |y: &S| {
        (rel * y.max_norm()).max(tol)
    })?;
    if coarse.converged {
        let polished = newton(coarse.state);
        if polished.converged && polished.state.check(POSITIVITY_SLACK).is_ok() {
            return Ok(SteadyReport {
                elapsed_time: coarse.elapsed_time,
                method: SteadyMethod::TimeThenNewton,
                ..polished
            });
        }
        debug!(
            "Newton polish failed (residual {:e}); continuing time evolution",
            polished.residual
        );
    }
    let remaining = EvolveSettings {
        t_max: (ev.t_max - coarse.elapsed_time).max(0.0),
        ..*ev
    };
    let mut fine = evolve_until(rhs, coarse.state, step, &remaining, |_| tol)?;
    fine.elapsed_time += coarse.elapsed_time;
    Ok(fine)
}

/// Single-array steady state: ground-seeded RK4 then Newton.
pub fn steady_one(
    drive: &Drive,
    cache: &SumCache,
    settings: &SteadySettings,
) -> Result<SteadyReport<SingleState>> {
    steady_one_from(drive, cache, settings, SingleState::ground())
}

pub fn steady_one_from(
    drive: &Drive,
    cache: &SumCache,
    settings: &SteadySettings,
    seed: SingleState,
) -> Result<SteadyReport<SingleState>> {
    let rhs = |s: &SingleState| rhs_one(s, drive, cache);
    let tol = NEWTON_TOL.min(settings.evolve.tol);
    time_then_newton(rhs, seed, settings, gamma_eff(drive, cache), |g| {
        newton_steady_one(drive, cache, g, tol)
    })
}

/// Two-array steady state: ground-seeded RK4 then Newton.
pub fn steady_two(
    drive: &Drive,
    cache: &SumCache,
    settings: &SteadySettings,
) -> Result<SteadyReport<TwoArrayState>> {
    steady_two_from(drive, cache, settings, TwoArrayState::default())
}

pub fn steady_two_from(
    drive: &Drive,
    cache: &SumCache,
    settings: &SteadySettings,
    seed: TwoArrayState,
) -> Result<SteadyReport<TwoArrayState>> {
    let rhs = |s: &TwoArrayState| rhs_two(s, drive, cache);
    let tol = NEWTON_TOL.min(settings.evolve.tol);
    time_then_newton(rhs, seed, settings, gamma_eff(drive, cache), |g| {
        newton_steady_two(drive, cache, g, tol)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ArrayConfig, Polarization};

    fn decoupled() -> SumCache {
        let c = ArrayConfig::single(0.8, Polarization::DeltaMpm1);
        SumCache::from_couplings(&c, Complex64::new(0.0, 0.0), None)
    }

    fn synthetic() -> SumCache {
        let c = ArrayConfig::single(0.8, Polarization::DeltaMpm1);
        SumCache::from_couplings(&c, Complex64::new(c.collective_half_width(), 0.0048), None)
    }

    /// Steady state of the isolated atom from the 3×3 real linear system
    /// in (u, v, w) = (Re σ⁻, Im σ⁻, e).
    fn bloch_oracle(omega: f64, delta: f64) -> (Complex64, f64) {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-0.5, -delta, 0.0, delta, -0.5, omega, 0.0, -omega, -1.0],
        );
        let b = DVector::from_column_slice(&[0.0, 0.5 * omega, 0.0]);
        let x = a.lu().solve(&b).unwrap();
        (Complex64::new(x[0], x[1]), x[2])
    }

    #[test]
    fn ground_state_is_fixed_without_drive() {
        let d = rhs_isolated(&SingleState::ground(), &Drive::new(0.0, 0.3));
        assert_eq!(d.max_norm(), 0.0);
    }

    #[test]
    fn isolated_resonant_population_is_one_third() {
        let drive = Drive::new(1.0, 0.0);
        let r = newton_steady_one(
            &drive,
            &decoupled(),
            SingleState::new(Complex64::new(0.0, -0.3), 0.3),
            1e-14,
        );
        assert!(r.converged);
        assert!((r.state.e_pop - 1.0 / 3.0).abs() < 1e-13);
        let (s, e) = bloch_oracle(1.0, 0.0);
        assert!((r.state.sigma_minus - s).norm() < 1e-13 && (r.state.e_pop - e).abs() < 1e-13);
    }

    #[test]
    fn decoupled_matches_isolated() {
        let s = SingleState::new(Complex64::new(0.1, -0.2), 0.3);
        let drive = Drive::new(0.7, -0.4);
        assert_eq!(rhs_one(&s, &drive, &decoupled()), rhs_isolated(&s, &drive));
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let c = ArrayConfig::pair(0.8, Polarization::DeltaMpm1, 5.01);
        let cache = SumCache::from_couplings(
            &c,
            Complex64::new(-0.31, 0.05),
            Some(Complex64::new(0.18, 0.02)),
        );
        let sys = Coupled::two(&Drive::new(0.6, 0.3), &cache);
        let x = DVector::from_column_slice(&[0.1, -0.2, 0.3, -0.05, 0.15, 0.2]);
        let j = sys.jacobian(&x);
        let h = 1e-6;
        for col in 0..6 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += h;
            xm[col] -= h;
            let fd = (sys.residual(&xp) - sys.residual(&xm)) / (2.0 * h);
            for row in 0..6 {
                assert!((fd[row] - j[(row, col)]).abs() < 1e-8, "({row},{col})");
            }
        }
    }

    #[test]
    fn exact_guess_needs_one_iteration() {
        let cache = synthetic();
        let drive = Drive::new(0.5, 0.2);
        let first = newton_steady_one(
            &drive,
            &cache,
            SingleState::new(Complex64::new(0.1, -0.3), 0.2),
            NEWTON_TOL,
        );
        assert!(first.converged);
        let again = newton_steady_one(&drive, &cache, first.state, NEWTON_TOL);
        assert_eq!(again.newton_iterations, 1);
        assert!(again.residual <= NEWTON_TOL);
    }

    #[test]
    fn steady_state_obeys_energy_balance() {
        let cache = synthetic();
        let drive = Drive::new(0.3, 0.5);
        let r = steady_one(&drive, &cache, &SteadySettings::default()).unwrap();
        assert!(r.converged);
        let s = r.state.sigma_minus;
        let field = drive.omega - 2.0 * I * cache.g_big * s;
        assert!((r.state.e_pop - (field * s.conj()).im).abs() < 1e-12);
    }

    #[test]
    fn undriven_evolution_converges_at_once() {
        let cache = synthetic();
        let drive = Drive::new(0.0, 0.0);
        let r = evolve_to_steady(
            |s| rhs_one(s, &drive, &cache),
            SingleState::ground(),
            &EvolveSettings::default(),
            1.0,
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.elapsed_time <= 1.0 + 1e-9);
        assert_eq!(r.state, SingleState::ground());
    }

    #[test]
    fn rejects_oversized_step() {
        let settings = EvolveSettings {
            step: Some(0.05),
            ..Default::default()
        };
        assert!(matches!(
            settings.resolve_step(1.0),
            Err(Error::StepTooLarge { .. })
        ));
        assert_eq!(EvolveSettings::default().resolve_step(10.0).unwrap(), 0.002);
    }

    #[test]
    fn unconverged_is_reported() {
        let cache = synthetic();
        let drive = Drive::new(0.3, 0.0);
        let settings = EvolveSettings {
            t_max: 2.0,
            ..Default::default()
        };
        let r = evolve_to_steady(
            |s| rhs_one(s, &drive, &cache),
            SingleState::ground(),
            &settings,
            1.0,
        )
        .unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn unphysical_seed_is_an_error() {
        let cache = synthetic();
        let drive = Drive::new(0.3, 0.0);
        let bad = SingleState::new(Complex64::new(0.9, 0.0), 0.1);
        let r = evolve_to_steady(
            |s| rhs_one(s, &drive, &cache),
            bad,
            &EvolveSettings::default(),
            1.0,
        );
        assert!(matches!(r, Err(Error::Invariant { .. })));
    }

    #[test]
    fn integer_separation_keeps_arrays_identical() {
        let c = ArrayConfig::pair(0.8, Polarization::DeltaMpm1, 5.0);
        let cache = SumCache::from_couplings(
            &c,
            Complex64::new(-0.31, 0.005),
            Some(Complex64::new(0.1865, 0.0)),
        );
        let drive = Drive::new(0.4, 0.1);
        let mut y = TwoArrayState::default();
        for _ in 0..2000 {
            y = rk4_step(&y, 0.005, |s| rhs_two(s, &drive, &cache)).0;
            assert!((y.alpha.sigma_minus - y.beta.sigma_minus).norm() < 1e-13);
            assert!((y.alpha.e_pop - y.beta.e_pop).abs() < 1e-13);
        }
    }

    #[test]
    fn two_arrays_decouple_without_cross_sum() {
        let c = ArrayConfig::pair(0.8, Polarization::DeltaMpm1, 5.3);
        let g = Complex64::new(-0.31, 0.005);
        let pair = SumCache::from_couplings(&c, g, Some(Complex64::new(0.0, 0.0)));
        let one =
            SumCache::from_couplings(&ArrayConfig::single(0.8, Polarization::DeltaMpm1), g, None);
        let drive = Drive::new(0.4, 0.1);
        let e = c.cavity_phase();
        let st = TwoArrayState {
            alpha: SingleState::new(Complex64::new(0.1, 0.1), 0.1),
            beta: SingleState::new(Complex64::new(-0.1, 0.05), 0.2),
        };
        let d = rhs_two(&st, &drive, &pair);
        assert!(
            (d.alpha.sigma_minus - rhs_one(&st.alpha, &drive, &one).sigma_minus).norm() < 1e-15
        );
        // β is array α's dynamics in the frame rotated by e^{ikL}
        let rot = SingleState::new(st.beta.sigma_minus / e, st.beta.e_pop);
        let d_rot = rhs_one(&rot, &drive, &one);
        assert!((d.beta.sigma_minus - d_rot.sigma_minus * e).norm() < 1e-15);
        assert!((d.beta.e_pop - d_rot.e_pop).abs() < 1e-15);
    }
}
