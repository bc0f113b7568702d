//! Order-stable sample statistics.

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

/// Splits `0..len` into `batches` contiguous ranges whose sizes differ by at
/// most one.
pub fn batch_ranges(len: usize, batches: usize) -> Vec<std::ops::Range<usize>> {
    let batches = batches.clamp(1, len.max(1));
    let base = len / batches;
    let extra = len % batches;
    let mut out = Vec::with_capacity(batches);
    let mut start = 0;
    for b in 0..batches {
        let size = base + usize::from(b < extra);
        out.push(start..start + size);
        start += size;
    }
    out
}

/// Standard error of `stat` by batching: the spread of the statistic over
/// contiguous batches, divided by the square root of the batch count.
pub fn batched_stderr(values: &[f64], batches: usize, stat: impl Fn(&[f64]) -> f64) -> f64 {
    let ranges = batch_ranges(values.len(), batches);
    if ranges.len() < 2 {
        return 0.0;
    }
    let per_batch: Vec<f64> = ranges.into_iter().map(|r| stat(&values[r])).collect();
    (sample_variance(&per_batch) / per_batch.len() as f64).sqrt()
}

/// Component means of a set of vectors.
pub fn vector_mean(samples: &[Vec<f64>]) -> Vec<f64> {
    let dim = samples.first().map_or(0, Vec::len);
    (0..dim)
        .map(|i| samples.iter().map(|s| s[i]).sum::<f64>() / samples.len() as f64)
        .collect()
}

/// Unbiased sample covariance matrix (row-major nested vectors).
pub fn covariance(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = samples.first().map_or(0, Vec::len);
    let m = vector_mean(samples);
    let denom = (samples.len().max(2) - 1) as f64;
    let mut cov = vec![vec![0.0; dim]; dim];
    for s in samples {
        for i in 0..dim {
            let di = s[i] - m[i];
            for k in i..dim {
                cov[i][k] += di * (s[k] - m[k]);
            }
        }
    }
    for i in 0..dim {
        for k in i..dim {
            cov[i][k] /= denom;
            cov[k][i] = cov[i][k];
        }
    }
    cov
}

/// Ordinary least squares `y = intercept + slope x`; returns
/// `(slope, intercept, r_squared)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r_squared)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_cover_everything() {
        let r = batch_ranges(103, 20);
        assert_eq!(r.len(), 20);
        assert_eq!(r[0], 0..6);
        assert_eq!(r.last().unwrap().end, 103);
        assert!(r.iter().all(|b| b.len() == 5 || b.len() == 6));
    }

    #[test]
    fn variance_of_known_set() {
        assert_eq!(sample_variance(&[1.0, 2.0, 3.0, 4.0]), 5.0 / 3.0);
        assert_eq!(sample_variance(&[2.0]), 0.0);
    }

    #[test]
    fn covariance_is_symmetric() {
        let s = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![4.0, 0.5]];
        let c = covariance(&s);
        assert_eq!(c[0][1], c[1][0]);
        assert!((c[0][0] - sample_variance(&[1.0, 2.0, 4.0])).abs() < 1e-15);
    }

    #[test]
    fn ols_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (s, i, r2) = ols(&x, &y);
        assert!((s + 0.5).abs() < 1e-15 && (i - 2.0).abs() < 1e-15);
        assert_eq!(r2, 1.0);
    }
}
