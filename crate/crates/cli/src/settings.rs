//! Configuration file schema and its merge with command-line flags.
//! Flags always win over the file; the file wins over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use atomarray::lattice::{SumSettings, DEFAULT_GBAR_CUTOFF};
use atomarray::mf1::SteadySettings;
use atomarray::mf2::Mf2Settings;
use atomarray::{validate, ArrayConfig, Drive, Polarization};
use clap::Args;
use serde::Deserialize;

use crate::output::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Linear weak-field response.
    Wfa,
    /// Product-state mean field.
    Mf1,
    /// Mean field with pair cumulants inside a window (one array only).
    Mf2,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Wfa => "wfa",
            Method::Mf1 => "mf1",
            Method::Mf2 => "mf2",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub array: ArraySection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub a: Option<f64>,
    pub polarization: Option<String>,
    pub arrays: Option<u8>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub method: Option<Method>,
    pub n_cut: Option<usize>,
    pub n_bar: Option<usize>,
    pub n_w: Option<usize>,
    pub step: Option<f64>,
    pub tol: Option<f64>,
    pub t_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub delta: Option<String>,
    pub intensities: Option<String>,
    pub x: Option<String>,
    pub n_list: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub deterministic: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub const DEFAULT_A: f64 = 0.8;
pub const DEFAULT_L: f64 = 5.01;
pub const DEFAULT_N_W: usize = 20;

#[derive(Debug, Clone, Default, Args)]
pub struct GeometryArgs {
    /// Lattice spacing a/λ.
    #[arg(long = "a")]
    pub a: Option<f64>,
    /// Dipole transition: dm0 (linear, along y) or dmpm1 (circular about x).
    #[arg(long)]
    pub polarization: Option<String>,
    /// Number of arrays (1 or 2).
    #[arg(long)]
    pub arrays: Option<u8>,
    /// Array separation L/λ (two arrays).
    #[arg(long = "L", alias = "separation")]
    pub l: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Cutoff N for the lattice sum of the array's own coupling.
    #[arg(long)]
    pub n_cut: Option<usize>,
    /// Cutoff N for the far-array coupling.
    #[arg(long)]
    pub n_bar: Option<usize>,
    /// MF2 window radius N_w.
    #[arg(long)]
    pub n_w: Option<usize>,
    /// Integrator step Γ·dt.
    #[arg(long)]
    pub step: Option<f64>,
    /// Steady-state tolerance on the RHS max-norm.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Longest evolution time Γt.
    #[arg(long)]
    pub t_max: Option<f64>,
}

/// Everything a solver needs for one geometry.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: ArrayConfig,
    pub method: Method,
    pub sums: SumSettings,
    pub n_w: usize,
    pub mf1: SteadySettings,
    pub mf2: Mf2Settings,
}

pub fn resolve_geometry(
    g: &GeometryArgs,
    file: &FileConfig,
    method: Method,
) -> Result<ArrayConfig> {
    let a = g.a.or(file.array.a).unwrap_or(DEFAULT_A);
    let arrays = g.arrays.or(file.array.arrays).unwrap_or(1);
    // MF2 results are quoted for the linear transition, which is where the
    // two polarizations differ.
    let default_pol = if method == Method::Mf2 {
        Polarization::DeltaM0
    } else {
        Polarization::DeltaMpm1
    };
    let pol = match g.polarization.as_ref().or(file.array.polarization.as_ref()) {
        Some(s) => s.parse::<Polarization>()?,
        None => default_pol,
    };
    let config = match arrays {
        2 => ArrayConfig::pair(a, pol, g.l.or(file.array.l).unwrap_or(DEFAULT_L)),
        _ => ArrayConfig {
            num_arrays: arrays,
            ..ArrayConfig::single(a, pol)
        },
    };
    Ok(validate(config, Drive::new(0.0, 0.0))?.config)
}

pub fn resolve_run(
    g: &GeometryArgs,
    s: &SolverArgs,
    file: &FileConfig,
    default_method: Method,
) -> Result<Run> {
    let f = &file.solver;
    let method = s.method.or(f.method).unwrap_or(default_method);
    let config = resolve_geometry(g, file, method)?;
    if method == Method::Mf2 && config.is_pair() {
        bail!("MF2 is implemented for a single array only");
    }
    let n_w = s.n_w.or(f.n_w).unwrap_or(DEFAULT_N_W);
    let sums = SumSettings {
        n_cut: s.n_cut.or(f.n_cut).unwrap_or(SumSettings::default().n_cut),
        n_bar: s.n_bar.or(f.n_bar).unwrap_or(DEFAULT_GBAR_CUTOFF),
        n_w: (method == Method::Mf2).then_some(n_w),
    };
    let step = s.step.or(f.step);
    let tol = s.tol.or(f.tol);
    let t_max = s.t_max.or(f.t_max);
    for (name, v) in [("step", step), ("tol", tol), ("t_max", t_max)] {
        if let Some(v) = v {
            if !(v.is_finite() && v >= 0.0) {
                bail!("solver {name} = {v} must be finite and non-negative");
            }
        }
    }
    let mut mf1 = SteadySettings::default();
    mf1.evolve.step = step.or(mf1.evolve.step);
    mf1.evolve.tol = tol.unwrap_or(mf1.evolve.tol);
    mf1.evolve.t_max = t_max.unwrap_or(mf1.evolve.t_max);
    let defaults = Mf2Settings::default();
    let mf2 = Mf2Settings {
        step: step.unwrap_or(defaults.step),
        tol: tol.or(defaults.tol),
        t_max: t_max.unwrap_or(defaults.t_max),
        ..defaults
    };
    Ok(Run {
        config,
        method,
        sums,
        n_w,
        mf1,
        mf2,
    })
}

/// Grid from the flag, then the file, then the default.
pub fn grid(flag: Option<&str>, file: Option<&str>, default: &str) -> Result<Vec<f64>> {
    let spec = flag.or(file).unwrap_or(default);
    Ok(crate::grid::parse(spec)?)
}
