//! Tail exponent of a random-coefficient autoregression.
//!
//! For `X_t = c_t X_{t-1} + noise` with iid coefficients, the stationary
//! tail `P(|X| > x) ~ C x^-alpha` has the exponent solving
//! `E|c|^alpha = 1`, provided `E ln|c| < 0` and `P(|c| > 1) > 0`.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::quadrature::integrate;
use crate::error::StatsError;
use crate::kernel::DistSpec;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub const DEFAULT_KESTEN_TOL: f64 = 1e-8;
const ALPHA_MAX: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KestenSolution {
    pub alpha: f64,
    /// `|E|c|^alpha - 1|` at the returned root.
    pub residual: f64,
    pub iterations: usize,
}

fn ln_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln(e^a - e^b)` for `a >= b`.
fn ln_diff_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp()).ln_1p()
}

fn gaussian_numeric_ln_moment(mean: f64, std: f64, p: f64) -> f64 {
    // Integrate exp(p ln|c| - z^2/2 - shift) over a range that covers the
    // tilted density, in the standardized variable z.
    let log_kernel = |z: f64| {
        let c = mean + std * z;
        p * c.abs().ln() - 0.5 * z * z
    };
    let reach = 12.0 + 2.0 * p.max(0.0).sqrt() + (mean / std).abs();
    let (lo, hi) = (-reach, reach);
    let shift = (0..=4000)
        .map(|i| log_kernel(lo + (hi - lo) * i as f64 / 4000.0))
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let f = |z: f64| (log_kernel(z) - shift).exp();
    let z0 = -mean / std;
    let body = if z0 > lo && z0 < hi {
        integrate(f, lo, z0, 1e-13) + integrate(f, z0, hi, 1e-13)
    } else {
        integrate(f, lo, hi, 1e-13)
    };
    body.ln() + shift - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// `ln E|c|^p` for `c ~ dist`.
fn ln_abs_moment(dist: &DistSpec, p: f64) -> f64 {
    match *dist {
        DistSpec::Exponential { mean } => p * mean.ln() + ln_gamma(1.0 + p),
        DistSpec::Uniform { low, high } => {
            let q = p + 1.0;
            let norm = q.ln() + (high - low).ln();
            let lp = |x: f64| if x == 0.0 { f64::NEG_INFINITY } else { q * x.abs().ln() };
            let body = if low >= 0.0 {
                ln_diff_exp(lp(high), lp(low))
            } else if high <= 0.0 {
                ln_diff_exp(lp(low), lp(high))
            } else {
                ln_sum_exp(lp(high), lp(low))
            };
            body - norm
        }
        DistSpec::Gaussian { mean, std } => {
            if mean == 0.0 {
                p * std.ln() + 0.5 * p * 2f64.ln() + ln_gamma(0.5 * (p + 1.0)) - 0.5 * std::f64::consts::PI.ln()
            } else {
                gaussian_numeric_ln_moment(mean, std, p)
            }
        }
        DistSpec::Constant { value } => p * value.abs().ln(),
    }
}

/// `E|c|^p`.
pub fn abs_moment(dist: &DistSpec, p: f64) -> f64 {
    ln_abs_moment(dist, p).exp()
}

/// `E ln|c|`.
pub fn mean_log_abs(dist: &DistSpec) -> f64 {
    match *dist {
        DistSpec::Exponential { mean } => mean.ln() - EULER_GAMMA,
        DistSpec::Uniform { low, high } => {
            let anti = |x: f64| if x == 0.0 { 0.0 } else { x * x.abs().ln() - x };
            (anti(high) - anti(low)) / (high - low)
        }
        DistSpec::Gaussian { mean, std } => {
            if mean == 0.0 {
                std.ln() - 0.5 * (EULER_GAMMA + 2f64.ln())
            } else {
                let norm = (2.0 * std::f64::consts::PI).sqrt();
                let f = |z: f64| (mean + std * z).abs().ln() * (-0.5 * z * z).exp() / norm;
                let z0 = -mean / std;
                let reach = 14.0 + z0.abs();
                if z0.abs() < reach {
                    integrate(f, -reach, z0, 1e-12) + integrate(f, z0, reach, 1e-12)
                } else {
                    integrate(f, -reach, reach, 1e-12)
                }
            }
        }
        DistSpec::Constant { value } => value.abs().ln(),
    }
}

fn exceeds_one_with_positive_probability(dist: &DistSpec) -> bool {
    match *dist {
        DistSpec::Exponential { .. } => true,
        DistSpec::Gaussian { std, mean } => std > 0.0 || mean.abs() > 1.0,
        DistSpec::Uniform { low, high } => high > 1.0 || low < -1.0,
        DistSpec::Constant { value } => value.abs() > 1.0,
    }
}

/// Unique positive root of `E|c|^alpha = 1`, by bracketing and bisection on
/// `ln E|c|^alpha` (convex, zero at the origin, negative slope there).
pub fn kesten_exponent(dist: &DistSpec, tol: f64) -> Result<KestenSolution, StatsError> {
    dist.validate().map_err(|e| StatsError::Domain(e.to_string()))?;
    if matches!(dist, DistSpec::Constant { .. }) || matches!(dist, DistSpec::Gaussian { std, .. } if *std == 0.0) {
        return Err(StatsError::Degenerate("constant coefficient distribution has no Kesten exponent".into()));
    }
    let drift = mean_log_abs(dist);
    if !(drift < 0.0) {
        return Err(StatsError::NoKestenRegime(format!("E[ln|c|] = {drift} is not negative")));
    }
    if !exceeds_one_with_positive_probability(dist) {
        return Err(StatsError::NoKestenRegime("P(|c| > 1) = 0".into()));
    }
    let g = |a: f64| ln_abs_moment(dist, a);

    let mut lo = 1e-3;
    while !(g(lo) < 0.0) {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(StatsError::Bracketing("could not find a point with E|c|^alpha < 1".into()));
        }
    }
    let mut hi = lo.max(1.0);
    while !(g(hi) > 0.0) {
        if g(hi) < 0.0 {
            lo = hi;
        }
        hi *= 2.0;
        if hi > ALPHA_MAX || g(hi).is_nan() {
            return Err(StatsError::Bracketing(format!(
                "E|c|^alpha stays below 1 up to alpha = {ALPHA_MAX}"
            )));
        }
    }
    let tol = tol.max(1e-14);
    let mut iterations = 0;
    while hi - lo > tol && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let alpha = 0.5 * (lo + hi);
    Ok(KestenSolution {
        alpha,
        residual: (g(alpha).exp() - 1.0).abs(),
        iterations,
    })
}
