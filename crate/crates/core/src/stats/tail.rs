use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoint {
    pub x: f64,
    /// `P(X >= x)` in the sample.
    pub fraction: f64,
    /// Number of sample points `>= x`.
    pub count: usize,
}

/// Empirical complementary CDF evaluated at each distinct sample value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoints {
    pub n: usize,
    pub points: Vec<CcdfPoint>,
}

pub fn ccdf(sample: &[f64]) -> Result<CcdfPoints, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::InsufficientData("empty sample".into()));
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(StatsError::Domain("sample contains NaN".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mut points = Vec::new();
    let mut i = 0;
    while i < n {
        let count = n - i;
        points.push(CcdfPoint {
            x: xs[i],
            fraction: count as f64 / n as f64,
            count,
        });
        let x = xs[i];
        while i < n && xs[i] == x {
            i += 1;
        }
    }
    Ok(CcdfPoints { n, points })
}

/// Options for the maximum-likelihood power-law fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fix the cutoff instead of searching for it.
    pub xmin_override: Option<f64>,
    /// Smallest admissible number of points at or above the cutoff.
    pub min_tail: usize,
    /// Upper bound on cutoff candidates; larger candidate sets are thinned
    /// with a uniform stride.
    pub max_candidates: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            xmin_override: None,
            min_tail: 50,
            max_candidates: 1000,
        }
    }
}

/// Continuous power-law fit `p(x) ~ x^(-alpha)` for `x >= xmin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Density exponent.
    pub alpha: f64,
    /// Exponent of the complementary CDF, `P(X > x) ~ x^-(alpha - 1)`.
    pub tail_exponent: f64,
    pub xmin: f64,
    /// Kolmogorov–Smirnov distance between the empirical tail and the fit.
    pub ks_stat: f64,
    pub n_tail: usize,
    /// `(alpha - 1) / sqrt(n_tail)`.
    pub se: f64,
}

struct Candidate {
    start: usize,
    alpha: f64,
    ks: f64,
}

fn evaluate(logs: &[f64], suffix_log: &[f64], start: usize) -> Option<Candidate> {
    let n_tail = logs.len() - start;
    let log_xmin = logs[start];
    let sum = suffix_log[start] - n_tail as f64 * log_xmin;
    if !(sum > 0.0) {
        return None;
    }
    let alpha = 1.0 + n_tail as f64 / sum;
    let nt = n_tail as f64;
    let ks = logs[start..]
        .iter()
        .enumerate()
        .map(|(j, &lx)| {
            let fit = 1.0 - (-(alpha - 1.0) * (lx - log_xmin)).exp();
            (fit - j as f64 / nt).abs().max(((j + 1) as f64 / nt - fit).abs())
        })
        .fold(0.0, f64::max);
    Some(Candidate { start, alpha, ks })
}

/// Maximum-likelihood power-law tail fit with KS-minimizing cutoff.
///
/// Non-positive values are ignored; they can never lie in the tail.
pub fn fit_power_law(sample: &[f64], opts: &FitOptions) -> Result<TailFit, StatsError> {
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::Domain("sample contains non-finite values".into()));
    }
    let mut xs: Vec<f64> = sample.iter().copied().filter(|&x| x > 0.0).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let min_tail = opts.min_tail.max(1);
    if n < min_tail {
        return Err(StatsError::TailTooSmall { n_tail: n, min: min_tail });
    }
    if xs[0] == xs[n - 1] {
        return Err(StatsError::Degenerate("all values are equal".into()));
    }
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let mut suffix_log = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_log[i] = suffix_log[i + 1] + logs[i];
    }

    let best = match opts.xmin_override {
        Some(xmin) => {
            if !(xmin > 0.0 && xmin.is_finite()) {
                return Err(StatsError::Domain(format!("xmin must be positive, got {xmin}")));
            }
            let start = xs.partition_point(|&x| x < xmin);
            let n_tail = n - start;
            if n_tail < min_tail {
                return Err(StatsError::TailTooSmall { n_tail, min: min_tail });
            }
            // The cutoff is the override itself, not the smallest tail point.
            let log_xmin = xmin.ln();
            let sum = suffix_log[start] - n_tail as f64 * log_xmin;
            if !(sum > 0.0) {
                return Err(StatsError::Degenerate("every tail point equals xmin".into()));
            }
            let alpha = 1.0 + n_tail as f64 / sum;
            let nt = n_tail as f64;
            let ks = logs[start..]
                .iter()
                .enumerate()
                .map(|(j, &lx)| {
                    let fit = 1.0 - (-(alpha - 1.0) * (lx - log_xmin)).exp();
                    (fit - j as f64 / nt).abs().max(((j + 1) as f64 / nt - fit).abs())
                })
                .fold(0.0, f64::max);
            return Ok(TailFit {
                alpha,
                tail_exponent: alpha - 1.0,
                xmin,
                ks_stat: ks,
                n_tail,
                se: (alpha - 1.0) / nt.sqrt(),
            });
        }
        None => {
            let mut starts = Vec::new();
            let mut i = 0;
            while i < n && n - i >= min_tail {
                starts.push(i);
                let x = xs[i];
                while i < n && xs[i] == x {
                    i += 1;
                }
            }
            let stride = starts.len().div_ceil(opts.max_candidates.max(1)).max(1);
            let starts: Vec<usize> = starts.into_iter().step_by(stride).collect();
            starts
                .par_iter()
                .filter_map(|&s| evaluate(&logs, &suffix_log, s))
                .min_by(|a, b| a.ks.total_cmp(&b.ks).then(a.start.cmp(&b.start)))
        }
    };
    let best = best.ok_or_else(|| StatsError::Degenerate("no admissible cutoff".into()))?;
    let n_tail = n - best.start;
    Ok(TailFit {
        alpha: best.alpha,
        tail_exponent: best.alpha - 1.0,
        xmin: xs[best.start],
        ks_stat: best.ks,
        n_tail,
        se: (best.alpha - 1.0) / (n_tail as f64).sqrt(),
    })
}

/// Hill estimate of the tail exponent from the `k` largest order statistics.
pub fn hill_estimator(sample: &[f64], k: usize) -> Result<f64, StatsError> {
    let n = sample.len();
    if k == 0 || k >= n {
        return Err(StatsError::Domain(format!("k must satisfy 0 < k < n = {n}, got {k}")));
    }
    if sample.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(StatsError::Domain("Hill estimator needs positive finite values".into()));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    let threshold = xs[k].ln();
    let sum: f64 = xs[..k].iter().map(|x| x.ln() - threshold).sum();
    if sum <= 0.0 {
        return Err(StatsError::Degenerate("top order statistics are all equal".into()));
    }
    Ok(k as f64 / sum)
}
