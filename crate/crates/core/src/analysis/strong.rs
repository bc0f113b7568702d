use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Problem;
use crate::parallel::map_paths;
use crate::randomness::{family, GridSpec, StreamKey};
use crate::schemes::{Exact, Scheme, TrajectoryKind};

use super::stats::{batch_ranges, mean, sample_variance};
use super::StudySettings;

/// Estimate of `E[max_k ||X_{t_k} - Y_{t_k}||^{2p}]^{1/(2p)}` at one resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPoint {
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub h: f64,
    pub err: f64,
    pub stderr: f64,
    pub p: u32,
}

/// Errors over a ladder of resolutions, all coupled to one reference per path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderStudy {
    pub points: Vec<ErrorPoint>,
    pub reference: TrajectoryKind,
    pub n_fine: usize,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm_of(values: &[usize]) -> usize {
    values.iter().fold(1, |acc, &v| acc / gcd(acc, v) * v)
}

fn check_ladder(ladder: &[usize], paths: usize, p: u32, min_paths: usize) -> Result<()> {
    if ladder.is_empty() || ladder.contains(&0) {
        return Err(Error::invalid("ladder needs positive step counts"));
    }
    if paths < min_paths {
        return Err(Error::invalid(format!(
            "at least {min_paths} paths required, got {paths}"
        )));
    }
    if p == 0 {
        return Err(Error::invalid("moment order p must be >= 1"));
    }
    Ok(())
}

/// Turns per-path `max error^{2p}` columns into error points.
fn summarize(
    ladder: &[usize],
    horizon: f64,
    per_path: &[Vec<f64>],
    p: u32,
    batches: usize,
) -> Vec<ErrorPoint> {
    let root = 1.0 / (2.0 * p as f64);
    let ranges = batch_ranges(per_path.len(), batches);
    ladder
        .iter()
        .enumerate()
        .map(|(level, &n)| {
            let column: Vec<f64> = per_path.iter().map(|row| row[level]).collect();
            let err = mean(&column).powf(root);
            let batch_errs: Vec<f64> = ranges
                .iter()
                .map(|r| mean(&column[r.clone()]).powf(root))
                .collect();
            let stderr = (sample_variance(&batch_errs) / batch_errs.len() as f64).sqrt();
            ErrorPoint {
                n_steps: n,
                h: horizon / n as f64,
                err,
                stderr,
                p,
            }
        })
        .collect()
}

/// Strong errors of `scheme` against a reference for every `N` in `ladder`.
///
/// Each path draws one bundle on `refine_factor * lcm(ladder)` fine steps. The
/// reference is the closed-form solution on that fine path when the problem has
/// one, otherwise NV on the fine grid; every scheme run is coupled to it
/// through coarsening. Errors are maxima over the scheme's grid points.
pub fn strong_error_ladder(
    problem: &Problem,
    scheme: &dyn Scheme,
    ladder: &[usize],
    paths: usize,
    master_seed: u64,
    p: u32,
    settings: &StudySettings,
) -> Result<LadderStudy> {
    check_ladder(ladder, paths, p, 100)?;
    settings.validate()?;
    let d = problem.noise_dim();
    let n_ref = lcm_of(ladder);
    let n_fine = settings.refine_factor * n_ref;
    let horizon = problem.horizon;
    let ref_grid = GridSpec::new(n_ref, horizon)?;
    let grids: Vec<GridSpec> = ladder
        .iter()
        .map(|&n| GridSpec::new(n, horizon))
        .collect::<Result<_>>()?;
    let exact = Exact::new(settings.flows);
    let key = StreamKey::new(master_seed, family::PATHS);
    let pow = 2 * p as i32;

    let per_path = map_paths(paths, |i| {
        let bundle = key.bundle(i, n_fine, d, horizon);
        let reference = exact.trajectory(problem, &bundle, &ref_grid)?;
        // lattice increments make this identical to coarsening from the fine bundle
        let base = bundle.coarsen(n_ref)?;
        grids
            .iter()
            .map(|grid| {
                let traj = scheme.trajectory(problem, &base, grid)?;
                let stride = n_ref / grid.n_steps;
                let worst = traj
                    .states
                    .iter()
                    .enumerate()
                    .map(|(k, x)| x.sub(&reference.states[k * stride]).norm())
                    .fold(0.0, f64::max);
                Ok(worst.powi(pow))
            })
            .collect::<Result<Vec<f64>>>()
    })?;

    let reference = if problem.exact.is_some() {
        TrajectoryKind::Exact
    } else {
        TrajectoryKind::Proxy { n_fine }
    };
    Ok(LadderStudy {
        points: summarize(ladder, horizon, &per_path, p, settings.batches),
        reference,
        n_fine,
    })
}

/// Strong error at a single resolution.
pub fn strong_error(
    problem: &Problem,
    scheme: &dyn Scheme,
    n_steps: usize,
    paths: usize,
    master_seed: u64,
    p: u32,
    settings: &StudySettings,
) -> Result<ErrorPoint> {
    let study = strong_error_ladder(problem, scheme, &[n_steps], paths, master_seed, p, settings)?;
    Ok(study.points[0])
}

/// `E[max_k ||A_{t_k} - B_{t_k}||^{2p}]^{1/(2p)}` between two schemes driven by
/// the same increments and signs, for every `N` in `ladder`.
pub fn coupled_distance(
    problem: &Problem,
    a: &dyn Scheme,
    b: &dyn Scheme,
    ladder: &[usize],
    paths: usize,
    master_seed: u64,
    p: u32,
    settings: &StudySettings,
) -> Result<Vec<ErrorPoint>> {
    check_ladder(ladder, paths, p, 2)?;
    settings.validate()?;
    let d = problem.noise_dim();
    let n_fine = lcm_of(ladder);
    let horizon = problem.horizon;
    let grids: Vec<GridSpec> = ladder
        .iter()
        .map(|&n| GridSpec::new(n, horizon))
        .collect::<Result<_>>()?;
    let key = StreamKey::new(master_seed, family::PATHS);
    let pow = 2 * p as i32;
    let per_path = map_paths(paths, |i| {
        let bundle = key.bundle(i, n_fine, d, horizon);
        grids
            .iter()
            .map(|grid| {
                let ta = a.trajectory(problem, &bundle, grid)?;
                let tb = b.trajectory(problem, &bundle, grid)?;
                Ok(ta.max_distance(&tb).powi(pow))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(summarize(ladder, horizon, &per_path, p, settings.batches))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcm_of_ladder() {
        assert_eq!(lcm_of(&[8, 16, 512]), 512);
        assert_eq!(lcm_of(&[4, 6]), 12);
        assert_eq!(lcm_of(&[7]), 7);
    }

    #[test]
    fn rejects_small_runs() {
        let p = crate::model::problem("gbm1d").unwrap();
        let nv = crate::schemes::NinomiyaVictoir::default();
        let s = StudySettings::default();
        assert!(strong_error(&p, &nv, 8, 50, 0, 1, &s).is_err());
        assert!(strong_error(&p, &nv, 0, 200, 0, 1, &s).is_err());
        assert!(strong_error(&p, &nv, 8, 200, 0, 0, &s).is_err());
    }
}
