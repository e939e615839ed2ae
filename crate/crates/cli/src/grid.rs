//! Grid syntax shared by `--delta`, `--intensities`, `--x` and `--n-list`.
//!
//! * `lo:hi:step`: inclusive linear grid.
//! * `lo..hi`: decades from `lo` up to `hi`.
//! * `lo..hi@n`: `n` log-spaced points per decade.
//! * `v1,v2,...`: explicit list (each entry may itself be a number only).
//! * `v`: a single value.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid '{0}': cannot parse '{1}' as a number")]
    Number(String, String),
    #[error("grid '{0}': step must be positive and hi >= lo")]
    Linear(String),
    #[error("grid '{0}': log grids need 0 < lo <= hi and a positive point density")]
    Log(String),
    #[error("grid '{0}' has {1} points; the limit is {MAX_POINTS}")]
    TooLarge(String, usize),
    #[error("grid is empty")]
    Empty,
}

pub const MAX_POINTS: usize = 10_000_000;

fn number(spec: &str, s: &str) -> Result<f64, GridError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| GridError::Number(spec.to_string(), s.trim().to_string()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(GridError::Number(spec.to_string(), s.trim().to_string()))
    }
}

pub fn parse(spec: &str) -> Result<Vec<f64>, GridError> {
    let s = spec.trim();
    if s.is_empty() {
        return Err(GridError::Empty);
    }
    if let Some((lo, rest)) = s.split_once("..") {
        let (hi, per_decade) = match rest.split_once('@') {
            Some((hi, n)) => (hi, number(spec, n)?),
            None => (rest, 1.0),
        };
        let (lo, hi) = (number(spec, lo)?, number(spec, hi)?);
        if !(lo > 0.0 && hi >= lo && per_decade >= 1.0 && per_decade.fract() == 0.0) {
            return Err(GridError::Log(spec.to_string()));
        }
        let span = (hi / lo).log10() * per_decade;
        let count = (span + 1e-9).floor() as usize + 1;
        check_size(spec, count)?;
        return Ok((0..count)
            .map(|i| lo * 10f64.powf(i as f64 / per_decade))
            .collect());
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (number(spec, lo)?, number(spec, hi)?, number(spec, step)?);
            if !(step > 0.0 && hi >= lo) {
                return Err(GridError::Linear(spec.to_string()));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            check_size(spec, count)?;
            Ok((0..count).map(|i| lo + i as f64 * step).collect())
        }
        [_] => s.split(',').map(|v| number(spec, v)).collect(),
        _ => Err(GridError::Linear(spec.to_string())),
    }
}

fn check_size(spec: &str, count: usize) -> Result<(), GridError> {
    if count > MAX_POINTS {
        Err(GridError::TooLarge(spec.to_string(), count))
    } else {
        Ok(())
    }
}
