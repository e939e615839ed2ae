//! Locating the maximum of a scalar response over detuning.

use rayon::prelude::*;

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// A located maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the maximum of a unimodal `f` on [lo, hi],
/// stopping when the bracket is narrower than `tol`.
pub fn golden_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Peak>
where
    F: FnMut(f64) -> Result<f64>,
{
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(Error::Domain {
            what: "peak bracket width",
            value: hi - lo,
        });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain {
            what: "peak tolerance",
            value: tol,
        });
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut evaluations = 2;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        evaluations += 1;
    }
    let (x, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    Ok(Peak {
        x,
        value,
        evaluations,
    })
}

/// Evaluate `f` on `points` evenly spaced samples of [lo, hi] in parallel,
/// then refine around the best sample by golden section to `tol`.
pub fn grid_then_golden<F>(f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Result<Peak>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if points < 3 {
        return Err(Error::Domain {
            what: "peak grid points (need at least 3)",
            value: points as f64,
        });
    }
    let step = (hi - lo) / (points - 1) as f64;
    let values: Vec<f64> = (0..points)
        .into_par_iter()
        .map(|i| f(lo + i as f64 * step))
        .collect::<Result<_>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
    let a = lo + best.saturating_sub(1) as f64 * step;
    let b = lo + (best + 1).min(points - 1) as f64 * step;
    let refined = golden_max(&f, a, b, tol)?;
    let peak = if refined.value >= values[best] {
        refined
    } else {
        Peak {
            x: lo + best as f64 * step,
            value: values[best],
            evaluations: refined.evaluations,
        }
    };
    Ok(Peak {
        evaluations: peak.evaluations + points,
        ..peak
    })
}
