//! Subcommand implementations. Each returns a table plus the number of
//! rows whose solver did not converge.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use atomarray::lattice::{calc_g, g_fractional_error, Cutoff, SumSettings};
use atomarray::mf1::{steady_one, steady_two};
use atomarray::mf2::{evolve_model, Mf2Model, PairWindow, WindowSnapshot};
use atomarray::observables::{
    cavity_intensity, fit_near_field_decay, near_field, rts_one, rts_one_mf2, rts_two, wfa_single,
    wfa_two,
};
use atomarray::scan::grid_then_golden;
use atomarray::{ArrayConfig, Drive, ScatterResult, SingleState, SumCache};
use log::{info, warn};
use rayon::prelude::*;

use crate::output::{Cell, Table};
use crate::settings::{Method, Run};

pub const POINT_COLUMNS: [&str; 17] = [
    "delta",
    "intensity",
    "R",
    "T",
    "S",
    "Q1",
    "Q2",
    "e_pop_a",
    "re_sigma_a",
    "im_sigma_a",
    "e_pop_b",
    "re_sigma_b",
    "im_sigma_b",
    "cavity_gain",
    "residual",
    "converged",
    "wall_time",
];

/// Outcome at one (Δ, I) point.
#[derive(Debug, Clone)]
pub struct Point {
    pub delta: f64,
    pub intensity: Option<f64>,
    pub rts: Option<ScatterResult>,
    pub alpha: Option<SingleState>,
    pub beta: Option<SingleState>,
    pub cavity_gain: Option<f64>,
    pub residual: f64,
    pub converged: bool,
    pub wall_time: f64,
}

impl Point {
    fn failed(delta: f64, intensity: Option<f64>) -> Self {
        Point {
            delta,
            intensity,
            rts: None,
            alpha: None,
            beta: None,
            cavity_gain: None,
            residual: f64::NAN,
            converged: false,
            wall_time: 0.0,
        }
    }

    pub fn cells(&self, deterministic: bool) -> Vec<Cell> {
        let r = self.rts.as_ref();
        let state = |s: Option<SingleState>| -> [Cell; 3] {
            match s {
                Some(s) => [
                    s.e_pop.into(),
                    s.sigma_minus.re.into(),
                    s.sigma_minus.im.into(),
                ],
                None => [Cell::Empty, Cell::Empty, Cell::Empty],
            }
        };
        let mut row = vec![
            self.delta.into(),
            self.intensity.into(),
            r.map(|r| r.refl).into(),
            r.map(|r| r.trans).into(),
            r.map(|r| r.scat).into(),
            r.map(|r| r.q1).into(),
            r.map(|r| r.q2).into(),
        ];
        row.extend(state(self.alpha));
        row.extend(state(self.beta));
        row.extend([
            self.cavity_gain.into(),
            self.residual.into(),
            Cell::Bool(self.converged),
            (if deterministic { 0.0 } else { self.wall_time }).into(),
        ]);
        row
    }
}

/// Sum cache for `run`, read from or stored in `cache_dir` when given.
pub fn sum_cache(
    config: &ArrayConfig,
    settings: SumSettings,
    cache_dir: Option<&Path>,
) -> Result<SumCache> {
    let start = Instant::now();
    let cache = match cache_dir {
        Some(dir) => SumCache::load_or_build(dir, config, settings)?.0,
        None => SumCache::build(config, settings)?,
    };
    info!(
        "lattice sums ready in {:.2}s (collective shift {:.6})",
        start.elapsed().as_secs_f64(),
        cache.delta_shift()
    );
    Ok(cache)
}

/// Solve one point. Solver failures become unconverged rows.
pub fn solve_point(
    run: &Run,
    cache: &SumCache,
    delta: f64,
    intensity: f64,
    restart: Option<PairWindow>,
) -> (Point, Option<PairWindow>) {
    let start = Instant::now();
    let intensity_col = (run.method != Method::Wfa).then_some(intensity);
    let result = evaluate(run, cache, delta, intensity, restart);
    let (mut point, window) = match result {
        Ok(v) => v,
        Err(e) => {
            warn!("Δ={delta}, I={intensity}: {e}");
            (Point::failed(delta, intensity_col), None)
        }
    };
    point.intensity = intensity_col;
    point.wall_time = start.elapsed().as_secs_f64();
    (point, window)
}

fn evaluate(
    run: &Run,
    cache: &SumCache,
    delta: f64,
    intensity: f64,
    restart: Option<PairWindow>,
) -> atomarray::Result<(Point, Option<PairWindow>)> {
    let mut p = Point::failed(delta, None);
    let config = &cache.config;
    match (run.method, config.is_pair()) {
        (Method::Wfa, false) => {
            let r = wfa_single(delta, cache);
            p.rts = Some(ScatterResult {
                refl: r.norm_sqr(),
                trans: (1.0 + r).norm_sqr(),
                scat: 0.0,
                q1: 0.0,
                q2: 0.0,
                refl_amp: r,
                refl_amp_beta: None,
            });
            (p.residual, p.converged) = (0.0, true);
        }
        (Method::Wfa, true) => {
            let w = wfa_two(delta, cache)?;
            p.rts = Some(ScatterResult {
                refl: w.r_tot.norm_sqr(),
                trans: w.t_tot.norm_sqr(),
                scat: 0.0,
                q1: 0.0,
                q2: 0.0,
                refl_amp: w.a_alpha,
                refl_amp_beta: Some(w.a_beta),
            });
            p.cavity_gain = Some(w.cavity_gain);
            (p.residual, p.converged) = (0.0, true);
        }
        (Method::Mf1, false) => {
            let drive = Drive::from_intensity(intensity, delta);
            let r = steady_one(&drive, cache, &run.mf1)?;
            p.rts = Some(rts_one(&r.state, &drive, config)?);
            p.alpha = Some(r.state);
            (p.residual, p.converged) = (r.residual, r.converged);
        }
        (Method::Mf1, true) => {
            let drive = Drive::from_intensity(intensity, delta);
            let r = steady_two(&drive, cache, &run.mf1)?;
            p.rts = Some(rts_two(&r.state, &drive, config)?);
            p.cavity_gain = Some(cavity_intensity(&r.state, &drive, config)?);
            p.alpha = Some(r.state.alpha);
            p.beta = Some(r.state.beta);
            (p.residual, p.converged) = (r.residual, r.converged);
        }
        (Method::Mf2, _) => {
            let drive = Drive::from_intensity(intensity, delta);
            let model =
                Mf2Model::from_cache(cache, run.n_w)?.with_modes(run.mf2.c_mode, run.mf2.rhs_mode);
            let start = restart.unwrap_or_else(|| model.zeros());
            let r = evolve_model(&model, &drive, start, &run.mf2)?;
            p.rts = Some(rts_one_mf2(&r.window, &drive, cache, true)?);
            p.alpha = Some(r.window.singles);
            (p.residual, p.converged) = (r.residual, r.converged);
            info!(
                "Δ={delta}, I={intensity}: Γt={:.0}, edge cumulant {:.2e}",
                r.elapsed_time, r.diagnostics.edge_cumulant
            );
            return Ok((p, Some(r.window)));
        }
    }
    Ok((p, None))
}

struct Progress {
    total: usize,
    done: AtomicUsize,
}

impl Progress {
    fn new(total: usize) -> Self {
        Progress {
            total,
            done: AtomicUsize::new(0),
        }
    }

    fn tick(&self) {
        let done = self.done.fetch_add(1, Ordering::Relaxed) + 1;
        let every = (self.total / 20).max(1);
        if done.is_multiple_of(every) || done == self.total {
            info!("{done}/{} points", self.total);
        }
    }
}

pub fn sweep(
    run: &Run,
    cache: &SumCache,
    deltas: &[f64],
    intensities: &[f64],
    deterministic: bool,
) -> (Table, usize) {
    // WFA is intensity independent: one row per detuning.
    let intensities = if run.method == Method::Wfa {
        &[f64::NAN][..]
    } else {
        intensities
    };
    let points: Vec<(f64, f64)> = intensities
        .iter()
        .flat_map(|&i| deltas.iter().map(move |&d| (d, i)))
        .collect();
    let progress = Progress::new(points.len());
    let results: Vec<Point> = points
        .par_iter()
        .map(|&(d, i)| {
            let p = solve_point(run, cache, d, i, None).0;
            progress.tick();
            p
        })
        .collect();
    let mut table = Table::new(POINT_COLUMNS.to_vec());
    let unconverged = results.iter().filter(|p| !p.converged).count();
    for p in &results {
        table.push(p.cells(deterministic));
    }
    (table, unconverged)
}

pub struct SteadyOptions {
    pub snapshot: Option<PathBuf>,
    pub restart: Option<PathBuf>,
}

pub fn steady(
    run: &Run,
    cache: &SumCache,
    delta: f64,
    intensity: f64,
    opts: &SteadyOptions,
    deterministic: bool,
) -> Result<(Table, usize)> {
    if run.method != Method::Mf2 && (opts.snapshot.is_some() || opts.restart.is_some()) {
        bail!("window snapshots exist only for --method mf2");
    }
    let restart = match &opts.restart {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let snap: WindowSnapshot = serde_json::from_str(&text)?;
            if snap.n_w != run.n_w {
                bail!(
                    "snapshot has N_w = {}, run uses N_w = {}",
                    snap.n_w,
                    run.n_w
                );
            }
            Some(PairWindow::from_snapshot(snap)?)
        }
        None => None,
    };
    let (point, window) = solve_point(run, cache, delta, intensity, restart);
    if let (Some(path), Some(w)) = (&opts.snapshot, window) {
        std::fs::write(path, serde_json::to_vec(&w.snapshot())?)
            .with_context(|| format!("writing {}", path.display()))?;
        info!("window snapshot written to {}", path.display());
    }
    let mut table = Table::new(POINT_COLUMNS.to_vec());
    table.push(point.cells(deterministic));
    Ok((table, usize::from(!point.converged)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Quantity {
    /// Average intensity between two arrays relative to the incident wave.
    Gain,
    /// Incoherently scattered fraction S.
    Scattering,
}

impl Quantity {
    fn label(self) -> &'static str {
        match self {
            Quantity::Gain => "cavity_gain",
            Quantity::Scattering => "S",
        }
    }

    fn of(self, p: &Point) -> Option<f64> {
        match self {
            Quantity::Gain => p.cavity_gain,
            Quantity::Scattering => p.rts.map(|r| r.scat),
        }
    }
}

/// Detuning bracket searched when no `--delta` grid is given.
pub const LINE_HALF_WIDTH: f64 = 0.004;
pub const LINE_POINTS: usize = 41;

pub fn default_bracket(run: &Run, cache: &SumCache) -> Result<Vec<f64>> {
    if run.config.is_pair() {
        let wfa = grid_then_golden(
            |d| Ok(wfa_two(d, cache)?.cavity_gain),
            -1.0,
            1.0,
            20001,
            1e-10,
        )?;
        let step = 2.0 * LINE_HALF_WIDTH / (LINE_POINTS - 1) as f64;
        Ok((0..LINE_POINTS)
            .map(|i| wfa.x - LINE_HALF_WIDTH + i as f64 * step)
            .collect())
    } else {
        Ok((0..=50).map(|i| -0.5 + 0.02 * i as f64).collect())
    }
}

pub fn peak_scan(
    run: &Run,
    cache: &SumCache,
    bracket: &[f64],
    intensities: &[f64],
    quantity: Quantity,
    deterministic: bool,
) -> Result<(Table, usize)> {
    if quantity == Quantity::Gain && !run.config.is_pair() {
        bail!("cavity gain needs two arrays");
    }
    if bracket.len() < 3 {
        bail!("peak search needs a detuning grid of at least 3 points");
    }
    let (lo, hi) = (bracket[0], bracket[bracket.len() - 1]);
    let tol = 1e-3 * (hi - lo) / (bracket.len() - 1) as f64;
    let intensities = if run.method == Method::Wfa {
        &intensities[..1]
    } else {
        intensities
    };
    let mut columns = vec!["quantity", "peak", "evaluations"];
    columns.extend(POINT_COLUMNS);
    let mut table = Table::new(columns);
    let mut unconverged = 0;
    for (k, &i) in intensities.iter().enumerate() {
        let start = Instant::now();
        let value = |d: f64| {
            let p = solve_point(run, cache, d, i, None).0;
            Ok(quantity
                .of(&p)
                .filter(|_| p.converged)
                .unwrap_or(f64::NEG_INFINITY))
        };
        let peak = grid_then_golden(value, lo, hi, bracket.len(), tol)?;
        let mut p = solve_point(run, cache, peak.x, i, None).0;
        if peak.x <= lo + tol || peak.x >= hi - tol {
            warn!(
                "I={i}: peak at the bracket edge Δ={}; widen --delta",
                peak.x
            );
        }
        p.wall_time = start.elapsed().as_secs_f64();
        unconverged += usize::from(!p.converged);
        let mut row = vec![
            Cell::Text(quantity.label()),
            quantity.of(&p).into(),
            Cell::Int(peak.evaluations as u64 + 1),
        ];
        row.extend(p.cells(deterministic));
        table.push(row);
        info!("{}/{} intensities", k + 1, intensities.len());
    }
    Ok((table, unconverged))
}

pub fn sums(config: &ArrayConfig, ns: &[usize]) -> Result<Table> {
    let rows: Vec<Vec<Cell>> = ns
        .par_iter()
        .map(|&n| {
            let smooth = calc_g(config, n, Cutoff::Smooth)?;
            let hard = calc_g(config, n, Cutoff::Hard)?;
            Ok(vec![
                Cell::Int(n as u64),
                g_fractional_error(config, smooth).into(),
                g_fractional_error(config, hard).into(),
                smooth.re.into(),
                smooth.im.into(),
            ])
        })
        .collect::<atomarray::Result<_>>()?;
    let mut table = Table::new(vec!["N", "smooth_error", "hard_error", "re_G", "im_G"]);
    for r in rows {
        table.push(r);
    }
    Ok(table)
}

pub fn nearfield(config: &ArrayConfig, xs: &[f64], n: usize) -> Result<Table> {
    let points = if xs.len() >= 2 {
        let fit = fit_near_field_decay(config, xs, n)?;
        match fit.kappa_fit {
            Some(k) => info!(
                "decay constant: fitted {k:.5}, predicted {:.5}",
                fit.kappa_predicted
            ),
            None => info!("residual below the round-off floor; no decay fit"),
        }
        fit.points
    } else {
        xs.iter()
            .map(|&x| near_field(config, x, n))
            .collect::<atomarray::Result<Vec<_>>>()?
    };
    let mut table = Table::new(vec![
        "x",
        "re_field",
        "im_field",
        "re_asymptote",
        "im_asymptote",
        "residual",
    ]);
    for p in points {
        table.push(vec![
            p.x.into(),
            p.field.re.into(),
            p.field.im.into(),
            p.asymptote.re.into(),
            p.asymptote.im.into(),
            p.residual.into(),
        ]);
    }
    Ok(table)
}
