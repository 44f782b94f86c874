use serde::{Deserialize, Serialize};

use crate::error::StatsError;

/// Sample autocorrelations at lags `1..=max_lag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    /// `rho[h - 1]` is the autocorrelation at lag `h`.
    pub rho: Vec<f64>,
    /// Two-sided 95% white-noise band half-width, `1.96 / sqrt(n)`.
    pub band: f64,
    pub n: usize,
}

impl AcfResult {
    pub fn max_lag(&self) -> usize {
        self.rho.len()
    }

    pub fn at(&self, lag: usize) -> f64 {
        self.rho[lag - 1]
    }

    pub fn lags(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rho.iter().enumerate().map(|(i, &r)| (i + 1, r))
    }

    /// Share of lags in `1..=upto` whose autocorrelation is strictly positive.
    pub fn fraction_positive(&self, upto: usize) -> f64 {
        let upto = upto.min(self.rho.len());
        self.rho[..upto].iter().filter(|&&r| r > 0.0).count() as f64 / upto as f64
    }

    /// Share of lags in `1..=upto` inside `±band`.
    pub fn fraction_inside_band(&self, upto: usize) -> f64 {
        let upto = upto.min(self.rho.len());
        self.rho[..upto].iter().filter(|r| r.abs() <= self.band).count() as f64 / upto as f64
    }
}

/// Standard sample ACF: full-sample mean and full-sample variance in the
/// denominator, so `|rho| <= 1`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<AcfResult, StatsError> {
    let n = series.len();
    if max_lag == 0 || n <= max_lag + 1 {
        return Err(StatsError::InsufficientData(format!(
            "series of length {n} is too short for max_lag {max_lag}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = centered.iter().map(|x| x * x).sum();
    if denom == 0.0 || !denom.is_finite() {
        return Err(StatsError::Degenerate("zero or non-finite variance".into()));
    }
    let rho = (1..=max_lag)
        .map(|h| centered[..n - h].iter().zip(&centered[h..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect();
    Ok(AcfResult {
        rho,
        band: 1.96 / (n as f64).sqrt(),
        n,
    })
}
