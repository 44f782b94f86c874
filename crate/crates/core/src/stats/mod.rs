//! Stylized-fact statistics for return series: summary moments, sample
//! autocorrelation, empirical tail distribution, power-law tail fits and
//! the Kesten tail exponent of a random multiplicative coefficient.

mod acf;
mod descriptive;
mod kesten;
pub mod quadrature;
mod tail;

pub use acf::{acf, AcfResult};
pub use descriptive::{
    nonstationarity_ratio, returns_from_prices, rolling_std, summary_stats, ReturnSeries, SummaryStats,
};
pub use kesten::{abs_moment, kesten_exponent, mean_log_abs, KestenSolution, DEFAULT_KESTEN_TOL};
pub use tail::{ccdf, fit_power_law, hill_estimator, CcdfPoint, CcdfPoints, FitOptions, TailFit};
