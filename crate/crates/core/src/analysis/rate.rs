use serde::Serialize;

use crate::error::{Error, Result};

use super::stats::ols;
use super::ErrorPoint;

/// Log-log least-squares fit of `err` against `h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub points: Vec<ErrorPoint>,
    /// Empirical strong order.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Step counts whose error was zero or non-finite and so left out.
    pub excluded: Vec<usize>,
}

impl RateFit {
    pub fn has_warnings(&self) -> bool {
        !self.excluded.is_empty()
    }
}

/// Fits `log err = intercept + slope log h`.
pub fn fit_rate(points: &[ErrorPoint]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "a rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut ns: Vec<usize> = points.iter().map(|p| p.n_steps).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != points.len() {
        return Err(Error::invalid("rate fit points must have distinct N"));
    }
    let (usable, rejected): (Vec<&ErrorPoint>, Vec<&ErrorPoint>) = points
        .iter()
        .partition(|p| p.err > 0.0 && p.err.is_finite());
    if usable.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "only {} point(s) with positive error",
            usable.len()
        )));
    }
    let x: Vec<f64> = usable.iter().map(|p| p.h.ln()).collect();
    let y: Vec<f64> = usable.iter().map(|p| p.err.ln()).collect();
    let (slope, intercept, r_squared) = ols(&x, &y);
    Ok(RateFit {
        points: points.to_vec(),
        slope,
        intercept,
        r_squared,
        excluded: rejected.iter().map(|p| p.n_steps).collect(),
    })
}
