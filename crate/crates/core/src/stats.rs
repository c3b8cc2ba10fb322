//! Batch-means confidence intervals and small two-sample tests.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Mean with a 95% Student half-width from batch means.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci: f64,
    pub n_batches: usize,
}

/// Splits `values` (in path order) into `n_batches` contiguous batches.
/// Batch sizes differ by at most one. Returns the batch means.
pub fn batch_means(values: &[f64], n_batches: usize) -> Vec<f64> {
    let n = values.len();
    let b = n_batches.min(n).max(1);
    let mut out = Vec::with_capacity(b);
    let mut start = 0;
    for i in 0..b {
        let len = n / b + usize::from(i < n % b);
        let slice = &values[start..start + len];
        out.push(slice.iter().sum::<f64>() / len.max(1) as f64);
        start += len;
    }
    out
}

pub fn student_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("dof > 0")
        .inverse_cdf(0.975)
}

/// Mean and half-width from already-formed batch means.
pub fn from_batches(batches: &[f64]) -> Estimate {
    let b = batches.len();
    let mean = batches.iter().sum::<f64>() / b as f64;
    if b < 2 {
        return Estimate {
            mean,
            ci: f64::INFINITY,
            n_batches: b,
        };
    }
    let var = batches.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    Estimate {
        mean,
        ci: student_quantile_975(b - 1) * (var / b as f64).sqrt(),
        n_batches: b,
    }
}

pub fn batch_estimate(values: &[f64], n_batches: usize) -> Estimate {
    from_batches(&batch_means(values, n_batches))
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// KS critical value at level 0.001.
pub fn ks_critical_001(na: usize, nb: usize) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    1.949 * ((na + nb) / (na * nb)).sqrt()
}
