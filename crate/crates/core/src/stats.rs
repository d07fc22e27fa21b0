//! Monte Carlo summaries shared by the path simulator and the ensemble sampler.

use serde::{Deserialize, Serialize};

use crate::sympoly::{charpoly_from_esym, esym_all};

/// Symmetric functions of a configuration we estimate expectations of.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `e_n(x)`.
    Esym(usize),
    /// `prod_i (y - x_i)`.
    CharPoly(f64),
}

impl Observable {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Observable::Esym(n) => esym_all(x).get(n as i64),
            Observable::CharPoly(y) => x.iter().map(|xi| y - xi).product(),
        }
    }

    pub fn eval_from_esym(&self, e: &crate::sympoly::ESymVector) -> f64 {
        match *self {
            Observable::Esym(n) => e.get(n as i64),
            Observable::CharPoly(y) => charpoly_from_esym(e, y),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Observable::Esym(n) => format!("e_{n}"),
            Observable::CharPoly(y) => format!("charpoly(y={y})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `(estimate - predicted) / stderr`; `None` when the standard error is zero.
    pub fn zscore(&self, predicted: f64) -> Option<f64> {
        (self.stderr > 0.0).then(|| (self.estimate - predicted) / self.stderr)
    }
}

/// Sample mean and `sd / sqrt(n)` for independent values, summed in order.
pub fn mean_stderr(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Estimate { estimate: mean, stderr: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Estimate { estimate: mean, stderr: (var / n).sqrt() }
}

/// Batch-means estimate for correlated draws. Each segment (one chain) is
/// cut into `batches_per_segment` contiguous batches of equal length; the
/// standard error is that of the pooled batch means.
pub fn batch_means(segments: &[&[f64]], batches_per_segment: usize) -> Estimate {
    let mut means = Vec::new();
    let mut total = 0.0;
    let mut count = 0usize;
    for seg in segments {
        total += seg.iter().sum::<f64>();
        count += seg.len();
        let size = seg.len() / batches_per_segment;
        if size == 0 {
            continue;
        }
        for b in 0..batches_per_segment {
            let batch = &seg[b * size..(b + 1) * size];
            means.push(batch.iter().sum::<f64>() / size as f64);
        }
    }
    let estimate = total / count as f64;
    let pooled = mean_stderr(&means);
    Estimate { estimate, stderr: pooled.stderr }
}

/// Two-sample z statistic for independent estimates.
pub fn two_sample_z(a: &Estimate, b: &Estimate) -> Option<f64> {
    let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
    (se > 0.0).then(|| (a.estimate - b.estimate) / se)
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at level 1%.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observables() {
        let x = [-0.5, 0.25, 0.75];
        assert_eq!(Observable::Esym(0).eval(&x), 1.0);
        assert_eq!(Observable::Esym(1).eval(&x), 0.5);
        let y = 0.1;
        let direct = (y + 0.5) * (y - 0.25) * (y - 0.75);
        assert!((Observable::CharPoly(y).eval(&x) - direct).abs() < 1e-15);
        let e = esym_all(&x);
        assert!((Observable::CharPoly(y).eval_from_esym(&e) - direct).abs() < 1e-15);
    }

    #[test]
    fn constant_values_have_zero_error() {
        let e = mean_stderr(&[1.0; 50]);
        assert_eq!(e, Estimate { estimate: 1.0, stderr: 0.0 });
        assert_eq!(e.zscore(1.0), None);
        let b = batch_means(&[&[2.0; 100], &[2.0; 60]], 10);
        assert_eq!(b.estimate, 2.0);
        assert_eq!(b.stderr, 0.0);
    }

    #[test]
    fn mean_and_stderr() {
        let e = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.estimate, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        let z = two_sample_z(&e, &Estimate { estimate: 2.5, stderr: 0.0 }).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn ks_of_uniform_grid() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
        assert!(d < ks_critical_1pct(n));
    }
}
