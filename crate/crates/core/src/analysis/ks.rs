use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::state::State;

use super::stats::{covariance, vector_mean};

/// Two-sample Kolmogorov-Smirnov outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function `Q(lambda) = P(K > lambda)` of the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small lambda
        let y = (-PI * PI / (8.0 * lambda * lambda)).exp();
        let mut sum = 0.0;
        let mut k = 1;
        loop {
            let e = ((2 * k - 1) * (2 * k - 1)) as f64;
            let term = y.powf(e);
            sum += term;
            if term < 1e-17 * sum || k > 100 {
                break;
            }
            k += 1;
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Two-sample KS statistic `sup |F_a - F_b|` with the asymptotic p-value
/// (effective size `nm/(n+m)`, small-sample correction of Stephens).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("KS test needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::invalid("KS test samples contain NaN"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    let cmp = |p: &f64, q: &f64| p.partial_cmp(q).unwrap_or(Ordering::Equal);
    xs.sort_by(cmp);
    ys.sort_by(cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        // advance past every copy of the smaller value so ties count together
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = n * m / (n + m);
    let root = ne.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * d;
    Ok(KsResult {
        statistic: d,
        p_value: if d == 0.0 {
            1.0
        } else {
            kolmogorov_survival(lambda)
        },
    })
}

/// Moments and per-coordinate KS comparison of normalized scheme errors
/// against samples of the limiting error SDE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitLawReport {
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub samples_scheme: usize,
    pub samples_limit: usize,
    pub mean_scheme: Vec<f64>,
    pub mean_limit: Vec<f64>,
    pub cov_scheme: Vec<Vec<f64>>,
    pub cov_limit: Vec<Vec<f64>>,
    pub ks_stat: Vec<f64>,
    pub ks_pvalue: Vec<f64>,
}

/// Compares two sample sets coordinate by coordinate. `n_steps` of the report
/// is left at 0 for the caller to fill in.
pub fn compare_distributions(a: &[State], b: &[State]) -> Result<LimitLawReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("both sample sets must be non-empty"));
    }
    let dim = a[0].dim();
    if a.iter().chain(b).any(|s| s.dim() != dim) {
        return Err(Error::invalid("samples have mismatched dimensions"));
    }
    let va: Vec<Vec<f64>> = a.iter().map(State::to_vec).collect();
    let vb: Vec<Vec<f64>> = b.iter().map(State::to_vec).collect();
    let mut ks_stat = Vec::with_capacity(dim);
    let mut ks_pvalue = Vec::with_capacity(dim);
    for i in 0..dim {
        let ca: Vec<f64> = a.iter().map(|s| s[i]).collect();
        let cb: Vec<f64> = b.iter().map(|s| s[i]).collect();
        let r = ks_two_sample(&ca, &cb)?;
        ks_stat.push(r.statistic);
        ks_pvalue.push(r.p_value);
    }
    Ok(LimitLawReport {
        n_steps: 0,
        samples_scheme: a.len(),
        samples_limit: b.len(),
        mean_scheme: vector_mean(&va),
        mean_limit: vector_mean(&vb),
        cov_scheme: covariance(&va),
        cov_limit: covariance(&vb),
        ks_stat,
        ks_pvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survival_reference_values() {
        // tabulated: P(K > 1.36) ~ 0.0493, P(K > 1.63) ~ 0.0098, P(K > 0.5) ~ 0.9639
        assert!((kolmogorov_survival(1.36) - 0.0493).abs() < 5e-4);
        assert!((kolmogorov_survival(1.63) - 0.0098).abs() < 2e-4);
        assert!((kolmogorov_survival(0.5) - 0.9639).abs() < 5e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        // both series agree at the switch point
        let lo = 1.0
            - (2.0 * PI).sqrt() / 1.18
                * (1..50)
                    .map(|k| {
                        (-(((2 * k - 1) * (2 * k - 1)) as f64) * PI * PI / (8.0 * 1.18 * 1.18))
                            .exp()
                    })
                    .sum::<f64>();
        assert!((lo - kolmogorov_survival(1.18)).abs() < 1e-12);
    }

    #[test]
    fn identical_samples() {
        let a = [0.3, -1.0, 2.0, 2.0, 0.1];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn disjoint_samples_have_unit_statistic() {
        let r = ks_two_sample(&[0.0, 1.0, 2.0], &[5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn ties_across_samples() {
        // all-equal samples on both sides: identical distributions
        let r = ks_two_sample(&[0.0; 10], &[0.0; 7]).unwrap();
        assert_eq!(r.statistic, 0.0);
        let r = ks_two_sample(&[1.0, 2.0], &[1.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 0.5);
    }

    #[test]
    fn compare_rejects_mismatch() {
        let a = vec![State::zeros(2)];
        let b = vec![State::zeros(1)];
        assert!(compare_distributions(&a, &b).is_err());
        assert!(compare_distributions(&a, &[]).is_err());
    }
}
