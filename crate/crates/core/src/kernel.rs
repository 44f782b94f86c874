//! Reproducible random draws for impact coefficients, news indicators and
//! news-size shocks.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit root seed and
//! positioned on its own ChaCha stream id, so `(root_seed, stream_index)`
//! pins the whole sequence on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, DomainError};

/// Version tag of the draw algorithm. Bump whenever the mapping from
/// `(root_seed, stream_index)` to samples changes.
pub const GENERATOR_VERSION: &str = "chacha8-v1";

/// Distribution of a scalar shock or coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistSpec {
    Exponential { mean: f64 },
    Gaussian { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    Constant { value: f64 },
}

impl DistSpec {
    pub fn exponential(mean: f64) -> Self {
        DistSpec::Exponential { mean }
    }

    pub fn gaussian(mean: f64, std: f64) -> Self {
        DistSpec::Gaussian { mean, std }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, format!("must be finite, got {v}")))
            }
        };
        match *self {
            DistSpec::Exponential { mean } => {
                finite("mean", mean)?;
                if mean <= 0.0 {
                    return Err(ConfigError::invalid("mean", format!("must be > 0, got {mean}")));
                }
            }
            DistSpec::Gaussian { mean, std } => {
                finite("mean", mean)?;
                finite("std", std)?;
                if std < 0.0 {
                    return Err(ConfigError::invalid("std", format!("must be >= 0, got {std}")));
                }
            }
            DistSpec::Uniform { low, high } => {
                finite("low", low)?;
                finite("high", high)?;
                if low >= high {
                    return Err(ConfigError::invalid(
                        "high",
                        format!("uniform requires low < high, got low={low} high={high}"),
                    ));
                }
            }
            DistSpec::Constant { value } => finite("value", value)?,
        }
        Ok(())
    }

    /// True when every draw is guaranteed to be `>= 0`.
    pub fn nonnegative_support(&self) -> bool {
        match *self {
            DistSpec::Exponential { .. } => true,
            DistSpec::Gaussian { mean, std } => std == 0.0 && mean >= 0.0,
            DistSpec::Uniform { low, .. } => low >= 0.0,
            DistSpec::Constant { value } => value >= 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistSpec::Exponential { mean } | DistSpec::Gaussian { mean, .. } => mean,
            DistSpec::Uniform { low, high } => 0.5 * (low + high),
            DistSpec::Constant { value } => value,
        }
    }

    /// Same distribution with every draw multiplied by `c`.
    pub fn scaled(&self, c: f64) -> DistSpec {
        match *self {
            DistSpec::Exponential { mean } => DistSpec::Exponential { mean: mean * c },
            DistSpec::Gaussian { mean, std } => DistSpec::Gaussian {
                mean: mean * c,
                std: std * c.abs(),
            },
            DistSpec::Uniform { low, high } => {
                let (a, b) = (low * c, high * c);
                DistSpec::Uniform {
                    low: a.min(b),
                    high: a.max(b),
                }
            }
            DistSpec::Constant { value } => DistSpec::Constant { value: value * c },
        }
    }

    /// Draw without re-validating. Callers validate once up front.
    ///
    /// Constant distributions still consume one uniform so that swapping a
    /// distribution never shifts the rest of the stream.
    #[inline]
    pub fn sample(&self, stream: &mut SeedStream) -> f64 {
        match *self {
            DistSpec::Exponential { mean } => {
                let e: f64 = Exp1.sample(&mut stream.rng);
                mean * e
            }
            DistSpec::Gaussian { mean, std } => {
                let z: f64 = StandardNormal.sample(&mut stream.rng);
                mean + std * z
            }
            DistSpec::Uniform { low, high } => {
                let u: f64 = stream.rng.random();
                low + (high - low) * u
            }
            DistSpec::Constant { value } => {
                let _: u64 = stream.rng.random();
                value
            }
        }
    }
}

/// A deterministic draw sequence identified by `(root_seed, stream_index)`.
#[derive(Debug, Clone)]
pub struct SeedStream {
    root_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl SeedStream {
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    /// Bernoulli indicator. Always consumes exactly one uniform.
    #[inline]
    pub fn indicator(&mut self, prob: f64) -> bool {
        self.uniform() < prob
    }
}

pub fn derive_stream(root_seed: u64, stream_index: u64) -> SeedStream {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(stream_index);
    SeedStream {
        root_seed,
        stream_index,
        rng,
    }
}

/// Validated draw of one value.
pub fn draw(dist: &DistSpec, stream: &mut SeedStream) -> Result<f64, ConfigError> {
    dist.validate()?;
    Ok(dist.sample(stream))
}

/// News arrival probabilities and shock sizes for the two news channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewsSpec {
    pub prob_i: f64,
    pub prob_j: f64,
    pub eps_dist: DistSpec,
    pub nu_dist: DistSpec,
    /// One Bernoulli draw drives both channels.
    #[serde(default)]
    pub common_news: bool,
}

impl NewsSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, p) in [("prob_i", self.prob_i), ("prob_j", self.prob_j)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::invalid(key, format!("must lie in [0, 1], got {p}")));
            }
        }
        self.eps_dist.validate().map_err(|e| e.nested("eps"))?;
        self.nu_dist.validate().map_err(|e| e.nested("nu"))?;
        Ok(())
    }
}

/// Outcome of one step's news draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewsDraw {
    pub indicator_i: bool,
    pub indicator_j: bool,
    /// Drawn from `eps_dist` on the I stream.
    pub eps: f64,
    /// Drawn from `nu_dist` on the J stream.
    pub nu: f64,
}

/// Draw both channels for one step.
///
/// Each stream advances by one indicator and one shock every call, whether or
/// not the news fires, so runs that differ only in probabilities stay aligned.
pub fn draw_news(news: &NewsSpec, stream_i: &mut SeedStream, stream_j: &mut SeedStream) -> NewsDraw {
    let indicator_i = stream_i.indicator(news.prob_i);
    let eps = news.eps_dist.sample(stream_i);
    let raw_j = stream_j.indicator(news.prob_j);
    let nu = news.nu_dist.sample(stream_j);
    NewsDraw {
        indicator_i,
        indicator_j: if news.common_news { indicator_i } else { raw_j },
        eps,
        nu,
    }
}

/// Information carried by an event of probability `p`, in nats.
pub fn info_content(p: f64) -> Result<f64, DomainError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(DomainError::OutOfDomain(format!(
            "probability must lie in (0, 1], got {p}"
        )));
    }
    // -ln(1) is -0.0; normalize so noise carries exactly zero information.
    Ok(-p.ln() + 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(|a, b| a.total_cmp(b));
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    fn normal_cdf(x: f64) -> f64 {
        0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
    }

    #[test]
    fn constant_always_returns_value() {
        let mut s = derive_stream(1, 0);
        let d = DistSpec::Constant { value: 0.2 };
        for _ in 0..100 {
            assert_eq!(draw(&d, &mut s).unwrap(), 0.2);
        }
    }

    #[test]
    fn exponential_sample_mean() {
        let mut s = derive_stream(7, 3);
        let d = DistSpec::exponential(0.1);
        let n = 1_000_000;
        let mean = (0..n).map(|_| d.sample(&mut s)).sum::<f64>() / n as f64;
        assert!((mean - 0.1).abs() < 0.001, "mean {mean}");
    }

    #[test]
    fn gaussian_sample_std() {
        let mut s = derive_stream(7, 4);
        let d = DistSpec::gaussian(0.0, 1.0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut s)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((sd - 1.0).abs() < 0.005, "std {sd}");
    }

    #[test]
    fn ks_distance_below_one_percent_critical_value() {
        // 1% critical value of the one-sample KS statistic: 1.628 / sqrt(n).
        let n = 100_000;
        let crit = 1.628 / (n as f64).sqrt();
        let mut s = derive_stream(11, 0);

        let exp = DistSpec::exponential(0.5);
        let xs = (0..n).map(|_| exp.sample(&mut s)).collect();
        let d = ks_distance(xs, |x| 1.0 - (-x / 0.5).exp());
        assert!(d < crit, "exponential KS {d} >= {crit}");

        let g = DistSpec::gaussian(1.0, 2.0);
        let xs = (0..n).map(|_| g.sample(&mut s)).collect();
        let d = ks_distance(xs, |x| normal_cdf((x - 1.0) / 2.0));
        assert!(d < crit, "gaussian KS {d} >= {crit}");

        let u = DistSpec::Uniform { low: -1.0, high: 3.0 };
        let xs = (0..n).map(|_| u.sample(&mut s)).collect();
        let d = ks_distance(xs, |x| ((x + 1.0) / 4.0).clamp(0.0, 1.0));
        assert!(d < crit, "uniform KS {d} >= {crit}");
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = derive_stream(0, 0);
        assert!(draw(&DistSpec::exponential(0.0), &mut s).is_err());
        assert!(draw(&DistSpec::gaussian(0.0, -1.0), &mut s).is_err());
        assert!(draw(&DistSpec::Uniform { low: 1.0, high: 1.0 }, &mut s).is_err());
        assert!(draw(&DistSpec::Constant { value: f64::NAN }, &mut s).is_err());
    }

    #[test]
    fn news_certain_and_impossible() {
        let news = NewsSpec {
            prob_i: 0.0,
            prob_j: 1.0,
            eps_dist: DistSpec::gaussian(0.0, 1.0),
            nu_dist: DistSpec::gaussian(0.0, 1.0),
            common_news: false,
        };
        let (mut si, mut sj) = (derive_stream(3, 0), derive_stream(3, 1));
        for _ in 0..10_000 {
            let d = draw_news(&news, &mut si, &mut sj);
            assert!(!d.indicator_i);
            assert!(d.indicator_j);
        }
    }

    #[test]
    fn news_frequency() {
        let news = NewsSpec {
            prob_i: 0.3,
            prob_j: 0.1,
            eps_dist: DistSpec::gaussian(0.0, 1.0),
            nu_dist: DistSpec::gaussian(0.0, 1.0),
            common_news: false,
        };
        let (mut si, mut sj) = (derive_stream(5, 0), derive_stream(5, 1));
        let n = 100_000;
        let fired = (0..n)
            .filter(|_| draw_news(&news, &mut si, &mut sj).indicator_i)
            .count();
        let freq = fired as f64 / n as f64;
        assert!((freq - 0.3).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn common_news_couples_indicators() {
        let news = NewsSpec {
            prob_i: 0.4,
            prob_j: 0.9,
            eps_dist: DistSpec::gaussian(0.0, 1.0),
            nu_dist: DistSpec::gaussian(0.0, 1.0),
            common_news: true,
        };
        let (mut si, mut sj) = (derive_stream(5, 0), derive_stream(5, 1));
        for _ in 0..1000 {
            let d = draw_news(&news, &mut si, &mut sj);
            assert_eq!(d.indicator_i, d.indicator_j);
        }
    }

    #[test]
    fn shocks_aligned_across_probabilities() {
        let mk = |p| NewsSpec {
            prob_i: p,
            prob_j: 0.1,
            eps_dist: DistSpec::gaussian(0.0, 1.0),
            nu_dist: DistSpec::gaussian(0.0, 0.04),
            common_news: false,
        };
        let (a, b) = (mk(0.3), mk(0.0));
        let (mut ai, mut aj) = (derive_stream(9, 0), derive_stream(9, 1));
        let (mut bi, mut bj) = (derive_stream(9, 0), derive_stream(9, 1));
        for _ in 0..1000 {
            let x = draw_news(&a, &mut ai, &mut aj);
            let y = draw_news(&b, &mut bi, &mut bj);
            assert_eq!(x.eps, y.eps);
            assert_eq!(x.nu, y.nu);
            assert_eq!(x.indicator_j, y.indicator_j);
        }
    }

    #[test]
    fn info_content_values() {
        assert_eq!(info_content(1.0).unwrap(), 0.0);
        assert!((info_content(std::f64::consts::E.recip()).unwrap() - 1.0).abs() < 1e-15);
        assert!((info_content(0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(info_content(0.0).is_err());
        assert!(info_content(1.5).is_err());
        assert!(info_content(-0.1).is_err());
    }

    #[test]
    fn streams_deterministic_and_separated() {
        let d = DistSpec::gaussian(0.0, 1.0);
        let take = |mut s: SeedStream| (0..1000).map(|_| d.sample(&mut s)).collect::<Vec<_>>();
        let a = take(derive_stream(42, 0));
        let b = take(derive_stream(42, 0));
        let c = take(derive_stream(42, 1));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn streams_uncorrelated() {
        let d = DistSpec::gaussian(0.0, 1.0);
        let n = 100_000;
        let (mut s0, mut s1) = (derive_stream(42, 0), derive_stream(42, 1));
        let x: Vec<f64> = (0..n).map(|_| d.sample(&mut s0)).collect();
        let y: Vec<f64> = (0..n).map(|_| d.sample(&mut s1)).collect();
        let mx = x.iter().sum::<f64>() / n as f64;
        let my = y.iter().sum::<f64>() / n as f64;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let rho = sxy / (sxx * syy).sqrt();
        assert!(rho.abs() < 0.01, "correlation {rho}");
    }

    #[test]
    fn known_first_draws_are_pinned() {
        // Guards GENERATOR_VERSION: changing the generator must change this.
        let mut s = derive_stream(42, 0);
        let first: Vec<u64> = (0..3).map(|_| s.rng.random()).collect();
        assert_eq!(first, [12578764544318200737, 17529487244874322312, 7886285670807131020]);
    }

    proptest::proptest! {
        #[test]
        fn info_content_strictly_decreasing(p in 1e-9f64..1.0, q in 1e-9f64..1.0) {
            proptest::prop_assume!(p < q);
            proptest::prop_assert!(info_content(p).unwrap() > info_content(q).unwrap());
        }
    }
}
