use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel::map_paths;
use crate::randomness::{family, StreamKey};

use super::stats::{batched_stderr, sample_variance};

/// Parameters of the source-term diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceTermSpec {
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub j: usize,
    pub m: usize,
    pub t: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Substeps per step for the within-step stochastic integrals.
    pub substeps: usize,
}

impl SourceTermSpec {
    pub fn new(n_steps: usize, j: usize, m: usize, t: f64, horizon: f64) -> Self {
        SourceTermSpec {
            n_steps,
            j,
            m,
            t,
            horizon,
            substeps: 64,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1 <= self.m && self.m < self.j) {
            return Err(Error::invalid(format!(
                "source term needs 1 <= m < j, got j={}, m={}",
                self.j, self.m
            )));
        }
        if self.n_steps == 0 || self.substeps == 0 {
            return Err(Error::invalid("N and substeps must be positive"));
        }
        if !(self.horizon > 0.0) || !(0.0..=self.horizon).contains(&self.t) {
            return Err(Error::invalid(format!(
                "need 0 <= t <= T with T > 0, got t={}, T={}",
                self.t, self.horizon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceTermEstimate {
    pub spec: SourceTermSpec,
    pub paths: usize,
    pub var_est: f64,
    pub stderr: f64,
    /// `N int_0^t (s - floor_h(s)) ds`, the expected quadratic variation.
    pub theory: f64,
}

/// `N int_0^t (s - tau_s) ds` with `tau_s` the last grid time before `s`.
/// Equals `T t / 2` on grid times.
pub fn source_term_theory(n_steps: usize, t: f64, horizon: f64) -> f64 {
    let h = horizon / n_steps as f64;
    let full = (t / h).floor();
    let rest = t - full * h;
    n_steps as f64 * (full * h * h + rest * rest) / 2.0
}

/// Sample variance of
/// `Y_t = sqrt(N) (int_0^t Psi1 dW^m_s dW^j + int_0^t Psi2 dW^j_s dW^m)`,
/// where `dW_s` is the increment since the last grid time,
/// `Psi1 = (eta - 1)/2`, `Psi2 = (eta + 1)/2`, and `eta` is the step's sign.
///
/// The stochastic integrals are left-point sums on `substeps` substeps per
/// step; `t` is truncated to the substep grid. Their variance is biased by
/// `-1/substeps` relative to the continuous value.
pub fn source_term_variance(
    spec: &SourceTermSpec,
    paths: usize,
    master_seed: u64,
) -> Result<SourceTermEstimate> {
    spec.validate()?;
    if paths < 40 {
        return Err(Error::invalid("at least 40 paths required"));
    }
    let n = spec.n_steps;
    let s = spec.substeps;
    let n_fine = n * s;
    let delta = spec.horizon / n_fine as f64;
    let active = (((spec.t / delta) + 1e-9).floor() as usize).min(n_fine);
    let (jj, mm) = (spec.j - 1, spec.m - 1);
    let key = StreamKey::new(master_seed, family::SOURCE_TERM);
    let scale = (n as f64).sqrt();

    let samples = map_paths(paths, |i| {
        let bundle = key.bundle(i, n_fine, spec.j, spec.horizon);
        let signs = bundle.coarsen(n)?;
        let mut y = 0.0;
        let (mut acc_j, mut acc_m) = (0.0, 0.0);
        let (mut psi1, mut psi2) = (0.0, 0.0);
        for sub in 0..active {
            if sub % s == 0 {
                let eta = f64::from(signs.eta(sub / s));
                psi1 = (eta - 1.0) / 2.0;
                psi2 = (eta + 1.0) / 2.0;
                acc_j = 0.0;
                acc_m = 0.0;
            }
            let dw = bundle.dw(sub);
            y += psi1 * acc_m * dw[jj] + psi2 * acc_j * dw[mm];
            acc_j += dw[jj];
            acc_m += dw[mm];
        }
        Ok(scale * y)
    })?;

    Ok(SourceTermEstimate {
        spec: *spec,
        paths,
        var_est: sample_variance(&samples),
        stderr: batched_stderr(&samples, 20, sample_variance),
        theory: source_term_theory(n, spec.t, spec.horizon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_on_grid_times() {
        assert!((source_term_theory(4, 1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((source_term_theory(64, 0.5, 1.0) - 0.25).abs() < 1e-15);
        assert_eq!(source_term_theory(8, 0.0, 1.0), 0.0);
        // halfway through a step: extra (h/2)^2 N / 2
        let h: f64 = 0.25;
        let want = 4.0 * (h * h + (h / 2.0).powi(2)) / 2.0;
        assert!((source_term_theory(4, 0.375, 1.0) - want).abs() < 1e-15);
    }

    #[test]
    fn zero_time_has_zero_variance() {
        let est = source_term_variance(&SourceTermSpec::new(4, 2, 1, 0.0, 1.0), 100, 1).unwrap();
        assert_eq!(est.var_est, 0.0);
        assert_eq!(est.theory, 0.0);
    }

    #[test]
    fn index_validation() {
        assert!(source_term_variance(&SourceTermSpec::new(4, 1, 2, 1.0, 1.0), 100, 1).is_err());
        assert!(source_term_variance(&SourceTermSpec::new(4, 2, 2, 1.0, 1.0), 100, 1).is_err());
        assert!(source_term_variance(&SourceTermSpec::new(4, 2, 1, 2.0, 1.0), 100, 1).is_err());
    }
}
