use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{lie_bracket_unchecked, Problem};
use crate::parallel::map_paths;
use crate::randomness::{family, GridSpec, StreamKey};
use crate::schemes::{Exact, NinomiyaVictoir, Scheme};
use crate::state::State;

use super::{compare_distributions, LimitLawReport, StudySettings};

/// Terminal values of `sqrt(N) (X_T - X^NV_T)`, one per path.
///
/// `X_T` is the exact solution on `refine_factor * N` fine steps of the same
/// path (or NV there when no closed form exists).
pub fn normalized_error_samples(
    problem: &Problem,
    n_steps: usize,
    paths: usize,
    master_seed: u64,
    settings: &StudySettings,
) -> Result<Vec<State>> {
    if n_steps == 0 || paths == 0 {
        return Err(Error::invalid("need N >= 1 and at least one path"));
    }
    settings.validate()?;
    let n_fine = settings.refine_factor * n_steps;
    let grid = GridSpec::new(n_steps, problem.horizon)?;
    let nv = NinomiyaVictoir::new(settings.flows);
    let exact = Exact::new(settings.flows);
    let key = StreamKey::new(master_seed, family::PATHS);
    let scale = (n_steps as f64).sqrt();
    map_paths(paths, |i| {
        let bundle = key.bundle(i, n_fine, problem.noise_dim(), problem.horizon);
        let reference = exact.trajectory(problem, &bundle, &grid)?;
        let scheme = nv.trajectory(problem, &bundle, &grid)?;
        Ok(reference.terminal().sub(scheme.terminal()).scaled(scale))
    })
}

/// Samples of `V_T` for the limiting affine error equation
///
/// `dV = sqrt(T/2) sum_{m<j} [sigma^j, sigma^m](X) dB^{jm} + (db)(X) V dt
///       + sum_j (d sigma^j)(X) V dW^j`,  `V_0 = 0`,
///
/// with `B` a `d(d-1)/2`-dimensional Brownian motion independent of `W`.
/// `(X, V)` is advanced jointly by Euler on `n_fine` steps.
pub fn simulate_limit_sde(
    problem: &Problem,
    paths: usize,
    n_fine: usize,
    master_seed: u64,
) -> Result<Vec<State>> {
    if n_fine == 0 || paths == 0 {
        return Err(Error::invalid("need n_fine >= 1 and at least one path"));
    }
    let fields = problem.fields.as_ref();
    let n = fields.state_dim();
    let d = fields.noise_dim();
    let horizon = problem.horizon;
    let h = horizon / n_fine as f64;
    let sqrt_h = h.sqrt();
    let source_scale = (horizon / 2.0).sqrt();
    let pairs: Vec<(usize, usize)> = problem.brackets().pairs().to_vec();
    let key = StreamKey::new(master_seed, family::LIMIT_PATHS);

    map_paths(paths, |i| {
        let bundle = key.bundle(i, n_fine, d, horizon);
        let mut aux = key.aux_rng(i);
        let mut x = problem.x0;
        let mut v = State::zeros(n);
        for k in 0..n_fine {
            let dw = bundle.dw(k);
            let mut dv = fields.drift_jvp(&x, &v).scaled(h);
            for &(j, m) in &pairs {
                let z: f64 = aux.sample(StandardNormal);
                let bracket = lie_bracket_unchecked(fields, j, m, &x);
                dv.axpy(source_scale * sqrt_h * z, &bracket);
            }
            let mut dx = fields.drift(&x).scaled(h);
            for j in 1..=d {
                dv.axpy(dw[j - 1], &fields.sigma_jvp(j, &x, &v));
                dx.axpy(dw[j - 1], &fields.sigma(j, &x));
            }
            v = v.add(&dv);
            x = x.add(&dx);
            if !(x.is_finite() && v.is_finite()) {
                return Err(Error::Explosion {
                    field: 0,
                    time: (k + 1) as f64 * h,
                    start: problem.x0.to_vec(),
                });
            }
        }
        Ok(v)
    })
}

/// Normalized NV errors at `N` against limit-SDE samples on `n_fine_limit`
/// steps. The two sample sets use independent stream families.
pub fn limit_law(
    problem: &Problem,
    n_steps: usize,
    paths: usize,
    n_fine_limit: usize,
    master_seed: u64,
    settings: &StudySettings,
) -> Result<LimitLawReport> {
    let scheme = normalized_error_samples(problem, n_steps, paths, master_seed, settings)?;
    let limit = simulate_limit_sde(problem, paths, n_fine_limit, master_seed)?;
    let mut report = compare_distributions(&scheme, &limit)?;
    report.n_steps = n_steps;
    Ok(report)
}
