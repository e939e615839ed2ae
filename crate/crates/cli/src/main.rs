//! `simulate`: sweeps, peak scans and lattice-sum diagnostics for square
//! atom arrays. Tables go to stdout (or `--output`), progress to stderr.
//!
//! Exit status: 0 when every row converged, 2 when some rows are flagged
//! unconverged, 1 on any error.

mod commands;
mod grid;
mod output;
mod settings;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use atomarray::SumCache;
use clap::{Args, Parser, Subcommand};
use log::info;

use commands::{Quantity, SteadyOptions};
use output::{Format, Table};
use settings::{grid, resolve_geometry, resolve_run, FileConfig, GeometryArgs, Method, SolverArgs};

#[derive(Debug, Parser)]
#[command(
    name = "simulate",
    version,
    about = "Light scattering from square atom arrays"
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for cached lattice sums.
    #[arg(long, global = true, env = "ATOMARRAY_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the table here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Report wall_time as 0 so identical runs give identical bytes.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only warnings and errors on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convergence of the lattice sum with cutoff N, smooth and hard.
    Sums {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Cutoffs to evaluate.
        #[arg(long)]
        n_list: Option<String>,
    },
    /// Steady state at one detuning and intensity.
    Steady {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// I/I_sat.
        #[arg(long)]
        intensity: Option<f64>,
        /// Write the final MF2 window here (JSON).
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Start MF2 from a window written by --snapshot.
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// One row per (intensity, detuning) point.
    Sweep {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        grids: GridArgs,
    },
    /// Peak of the cavity gain or of S over detuning, per intensity.
    PeakScan {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        grids: GridArgs,
        /// Defaults to gain for two arrays, scattering for one.
        #[arg(long, value_enum)]
        quantity: Option<Quantity>,
    },
    /// Field of one array near the lattice and its decay to a plane wave.
    Nearfield {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Distances x/λ from the array.
        #[arg(long)]
        x: Option<String>,
        /// Lattice-sum cutoff.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Manage the lattice-sum cache directory.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Clone, Default, Args)]
struct GridArgs {
    /// Detunings Δ/Γ (grid syntax, e.g. -3:3:0.01).
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Intensities I/I_sat (e.g. 2e-4,2e-3 or 2e-11..2e-4).
    #[arg(long)]
    intensities: Option<String>,
}

#[derive(Debug, Subcommand)]
enum CacheAction {
    /// Build (or confirm) the sums for a geometry.
    Build {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// List cached files.
    List,
    /// Delete cached files.
    Clear,
}

const DEFAULT_INTENSITIES: &str = "2e-4,2e-3,2e-2,0.2,2";
const DEFAULT_PEAK_INTENSITIES: &str = "2e-11..2e-4";
const DEFAULT_DELTA_ONE: &str = "-3:3:0.01";
const DEFAULT_DELTA_TWO: &str = "-0.05:0.05:0.0005";
const DEFAULT_N_LIST: &str = "125,250,500,1000,1500";
const DEFAULT_NEAR_X: &str = "1.5:2.5:0.1";
const DEFAULT_NEAR_N: usize = 1000;

struct Sink {
    format: Format,
    path: Option<PathBuf>,
    deterministic: bool,
    cache_dir: Option<PathBuf>,
}

impl Sink {
    fn emit(&self, table: &Table) -> Result<()> {
        let mut out: Box<dyn Write> = match &self.path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(std::io::stdout().lock())),
        };
        table.write(self.format, &mut out)?;
        Ok(())
    }

    fn cache_dir(&self) -> Option<&Path> {
        self.cache_dir.as_deref()
    }
}

fn positive_intensities(values: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(bad) = values.iter().find(|&&i| i.is_nan() || i <= 0.0) {
        bail!("intensity {bad} must be positive");
    }
    Ok(values)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let sink = Sink {
        format: cli.format.or(file.output.format).unwrap_or(Format::Csv),
        path: cli.output.clone().or(file.output.path.clone()),
        deterministic: cli.deterministic || file.output.deterministic.unwrap_or(false),
        cache_dir: cli.cache_dir.clone().or(file.output.cache_dir.clone()),
    };
    let g = &file.grid;
    let unconverged = match &cli.command {
        Command::Sums { geometry, n_list } => {
            let config = resolve_geometry(geometry, &file, Method::Mf1)?;
            let ns = grid(n_list.as_deref(), g.n_list.as_deref(), DEFAULT_N_LIST)?;
            let ns: Vec<usize> = ns
                .iter()
                .map(|&n| {
                    if n >= 1.0 && n.fract() == 0.0 {
                        Ok(n as usize)
                    } else {
                        bail!("cutoff N = {n} must be a positive integer")
                    }
                })
                .collect::<Result<_>>()?;
            sink.emit(&commands::sums(&config, &ns)?)?;
            0
        }
        Command::Steady {
            geometry,
            solver,
            delta,
            intensity,
            snapshot,
            restart,
        } => {
            let run = resolve_run(geometry, solver, &file, Method::Mf1)?;
            let delta = delta.unwrap_or(0.0);
            let intensity = positive_intensities(vec![intensity.unwrap_or(2e-3)])?[0];
            let cache = commands::sum_cache(&run.config, run.sums, sink.cache_dir())?;
            let opts = SteadyOptions {
                snapshot: snapshot.clone(),
                restart: restart.clone(),
            };
            let (table, bad) =
                commands::steady(&run, &cache, delta, intensity, &opts, sink.deterministic)?;
            sink.emit(&table)?;
            bad
        }
        Command::Sweep {
            geometry,
            solver,
            grids,
        } => {
            let run = resolve_run(geometry, solver, &file, Method::Mf1)?;
            let default_delta = if run.config.is_pair() {
                DEFAULT_DELTA_TWO
            } else {
                DEFAULT_DELTA_ONE
            };
            let deltas = grid(grids.delta.as_deref(), g.delta.as_deref(), default_delta)?;
            let intensities = positive_intensities(grid(
                grids.intensities.as_deref(),
                g.intensities.as_deref(),
                DEFAULT_INTENSITIES,
            )?)?;
            let cache = commands::sum_cache(&run.config, run.sums, sink.cache_dir())?;
            match run.method {
                Method::Wfa => info!("wfa sweep: {} detunings", deltas.len()),
                m => info!(
                    "{} sweep: {} detunings x {} intensities",
                    m.label(),
                    deltas.len(),
                    intensities.len()
                ),
            }
            let (table, bad) =
                commands::sweep(&run, &cache, &deltas, &intensities, sink.deterministic);
            sink.emit(&table)?;
            bad
        }
        Command::PeakScan {
            geometry,
            solver,
            grids,
            quantity,
        } => {
            let run = resolve_run(geometry, solver, &file, Method::Mf1)?;
            let quantity = quantity.unwrap_or(if run.config.is_pair() {
                Quantity::Gain
            } else {
                Quantity::Scattering
            });
            let intensities = positive_intensities(grid(
                grids.intensities.as_deref(),
                g.intensities.as_deref(),
                DEFAULT_PEAK_INTENSITIES,
            )?)?;
            let cache = commands::sum_cache(&run.config, run.sums, sink.cache_dir())?;
            let bracket = match grids.delta.as_deref().or(g.delta.as_deref()) {
                Some(spec) => grid::parse(spec)?,
                None => commands::default_bracket(&run, &cache)?,
            };
            let (table, bad) = commands::peak_scan(
                &run,
                &cache,
                &bracket,
                &intensities,
                quantity,
                sink.deterministic,
            )?;
            sink.emit(&table)?;
            bad
        }
        Command::Nearfield { geometry, x, n } => {
            let config = resolve_geometry(geometry, &file, Method::Mf1)?;
            let xs = grid(x.as_deref(), g.x.as_deref(), DEFAULT_NEAR_X)?;
            sink.emit(&commands::nearfield(
                &config,
                &xs,
                n.unwrap_or(DEFAULT_NEAR_N),
            )?)?;
            0
        }
        Command::Cache { action } => {
            let Some(dir) = sink.cache_dir() else {
                bail!("no cache directory: pass --cache-dir or set ATOMARRAY_CACHE_DIR");
            };
            match action {
                CacheAction::Build { geometry, solver } => {
                    let run = resolve_run(geometry, solver, &file, Method::Mf1)?;
                    let (_, hit) = SumCache::load_or_build(dir, &run.config, run.sums)?;
                    let key = SumCache::cache_key(&run.config, &run.sums);
                    println!(
                        "{} {}",
                        if hit { "hit" } else { "built" },
                        dir.join(key).display()
                    );
                }
                CacheAction::List => {
                    for path in cache_files(dir)? {
                        println!("{}", path.display());
                    }
                }
                CacheAction::Clear => {
                    let files = cache_files(dir)?;
                    for path in &files {
                        std::fs::remove_file(path)?;
                    }
                    info!("removed {} cached files", files.len());
                }
            }
            0
        }
    };
    if unconverged > 0 {
        log::warn!("{unconverged} rows did not converge");
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cache_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("sums_") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::error!("{e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(1)
        }
    }
}
