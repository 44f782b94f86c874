use serde::{Deserialize, Serialize};

use crate::error::StatsError;
use crate::models::UnitsConvention;

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
    pub units: UnitsConvention,
}

/// Relative price changes `(P_t - P_{t-1}) / P_{t-1}`, scaled to `units`.
pub fn returns_from_prices(prices: &[f64], units: UnitsConvention) -> Result<ReturnSeries, StatsError> {
    if prices.len() < 2 {
        return Err(StatsError::InsufficientData(format!(
            "need at least 2 prices, got {}",
            prices.len()
        )));
    }
    if let Some((index, &value)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
        return Err(StatsError::NonPositivePrice { index, value });
    }
    let scale = units.scale();
    let values = prices.windows(2).map(|w| scale * (w[1] - w[0]) / w[0]).collect();
    Ok(ReturnSeries { values, units })
}

/// Sample moments. `std` uses the population convention (divide by `n`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summary_stats(series: &[f64]) -> Result<SummaryStats, StatsError> {
    if series.is_empty() {
        return Err(StatsError::InsufficientData("empty series".into()));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let (min, max) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(SummaryStats {
        n,
        mean,
        std: var.sqrt(),
        min,
        max,
    })
}

/// Population standard deviation of every full window, in order.
pub fn rolling_std(series: &[f64], window: usize) -> Result<Vec<f64>, StatsError> {
    if window == 0 || window > series.len() {
        return Err(StatsError::Domain(format!(
            "window {window} must lie in 1..={}",
            series.len()
        )));
    }
    Ok(series
        .windows(window)
        .map(|w| {
            let m = w.iter().sum::<f64>() / window as f64;
            (w.iter().map(|x| (x - m).powi(2)).sum::<f64>() / window as f64).sqrt()
        })
        .collect())
}

/// `max / min` of the rolling standard deviation; infinite when some window is flat.
pub fn nonstationarity_ratio(series: &[f64], window: usize) -> Result<f64, StatsError> {
    let rs = rolling_std(series, window)?;
    let max = rs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}
