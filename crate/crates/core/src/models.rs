//! The three market models and their one-step state transitions.
//!
//! All models share the aggregated price-impact form
//! `r_t = m_t * D(V, P) + n_t * (speculative term)`, where `D` is the
//! mispricing measured against the previous price `P_{t-1}`. Evaluating at
//! the lagged price turns the implicit price equations into an explicit
//! forward map.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, DomainError, ModelError};
use crate::kernel::{derive_stream, draw_news, DistSpec, NewsDraw, NewsSpec, SeedStream};

/// How returns are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitsConvention {
    /// Returns in percentage points: `P_t = (1 + r_t/100) P_{t-1}`.
    #[default]
    Percent,
    /// Returns as plain fractions: `P_t = (1 + r_t) P_{t-1}`.
    Fraction,
}

impl UnitsConvention {
    #[inline]
    pub fn scale(self) -> f64 {
        match self {
            UnitsConvention::Percent => 100.0,
            UnitsConvention::Fraction => 1.0,
        }
    }

    /// Relative gap `(target - price) / price` in return units.
    #[inline]
    pub fn mispricing(self, target: f64, price: f64) -> f64 {
        self.scale() * (target - price) / price
    }

    #[inline]
    pub fn apply_return(self, price: f64, ret: f64) -> f64 {
        price * (1.0 + ret / self.scale())
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "percent" => Some(UnitsConvention::Percent),
            "fraction" => Some(UnitsConvention::Fraction),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Investors and speculators both follow news-driven random walks.
    #[serde(alias = "news")]
    NewsDriven,
    /// Speculators only, extrapolating a weighted average of past returns.
    #[serde(alias = "trend")]
    TrendFollowing,
    /// News-driven investor value plus an AR(1) speculative expectation.
    General,
}

impl ModelKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "news-driven" | "news" | "model1" => Some(ModelKind::NewsDriven),
            "trend-following" | "trend" | "model2" => Some(ModelKind::TrendFollowing),
            "general" | "model3" => Some(ModelKind::General),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::NewsDriven => "news-driven",
            ModelKind::TrendFollowing => "trend-following",
            ModelKind::General => "general",
        }
    }
}

/// Behavioral parameters behind the aggregated impact coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Microfoundation {
    /// Price-adjustment speed.
    pub beta: f64,
    /// Investor aggressiveness.
    pub mu: f64,
    /// Speculator aggressiveness.
    pub gamma: f64,
    /// Market depth.
    pub liquidity: f64,
    pub investor_count: f64,
    pub speculator_count: f64,
}

impl Microfoundation {
    pub fn validate(&self) -> Result<(), DomainError> {
        let fields = [
            ("beta", self.beta),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("liquidity", self.liquidity),
            ("investor_count", self.investor_count),
            ("speculator_count", self.speculator_count),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DomainError::OutOfDomain(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Return implied by an excess demand `z` under linear price adjustment.
    pub fn price_response(&self, z: f64) -> f64 {
        self.beta * z / self.liquidity
    }
}

/// Aggregated impact coefficients `(m, n)` of investors and speculators.
pub fn derive_impacts(micro: &Microfoundation) -> Result<(f64, f64), DomainError> {
    micro.validate()?;
    let m = micro.beta * micro.mu * micro.investor_count / micro.liquidity;
    let n = micro.beta * micro.gamma * micro.speculator_count / micro.liquidity;
    Ok((m, n))
}

/// Market excess demand of all investors and speculators (fractional mispricings).
pub fn excess_demand(value: f64, anticipated_price: f64, price: f64, micro: &Microfoundation) -> f64 {
    micro.mu * micro.investor_count * (value - price) / price
        + micro.gamma * micro.speculator_count * (anticipated_price - price) / price
}

/// Per-step distributions of the impact coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactDists {
    pub m_dist: DistSpec,
    pub n_dist: DistSpec,
}

impl ImpactDists {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, d) in [("m", &self.m_dist), ("n", &self.n_dist)] {
            d.validate().map_err(|e| e.nested(key))?;
            if !d.nonnegative_support() {
                return Err(ConfigError::invalid(
                    key,
                    "impact coefficients need a distribution supported on [0, inf)",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum WeightScheme {
    Equal,
    ExpDecay { lambda: f64 },
    Explicit { weights: Vec<f64> },
}

/// Moving-average weights over the last `horizon` returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendWeights {
    pub horizon: usize,
    #[serde(flatten)]
    pub scheme: WeightScheme,
}

impl Default for TrendWeights {
    fn default() -> Self {
        TrendWeights {
            horizon: 1,
            scheme: WeightScheme::Equal,
        }
    }
}

impl TrendWeights {
    /// Weight vector, lag 1 first, normalized to sum to one.
    pub fn realize(&self) -> Result<Vec<f64>, ConfigError> {
        let h = self.horizon;
        if h == 0 {
            return Err(ConfigError::invalid("weights.horizon", "must be >= 1"));
        }
        let raw: Vec<f64> = match &self.scheme {
            WeightScheme::Equal => vec![1.0; h],
            WeightScheme::ExpDecay { lambda } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(ConfigError::invalid(
                        "weights.lambda",
                        format!("must be positive, got {lambda}"),
                    ));
                }
                (0..h).map(|k| (-lambda * k as f64).exp()).collect()
            }
            WeightScheme::Explicit { weights } => {
                if weights.len() != h {
                    return Err(ConfigError::invalid(
                        "weights.weights",
                        format!("expected {h} weights, got {}", weights.len()),
                    ));
                }
                if weights.iter().any(|w| !w.is_finite()) {
                    return Err(ConfigError::invalid("weights.weights", "weights must be finite"));
                }
                weights.clone()
            }
        };
        let total: f64 = raw.iter().sum();
        if total == 0.0 || !total.is_finite() {
            return Err(ConfigError::invalid("weights.weights", "weights must not sum to zero"));
        }
        Ok(raw.iter().map(|w| w / total).collect())
    }
}

/// Parameters of the general model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralParams {
    /// Feedback coefficient of the speculative expectation, in `[0, 1)`.
    pub a: f64,
    pub impacts: ImpactDists,
    pub news: NewsSpec,
}

impl GeneralParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..1.0).contains(&self.a) {
            return Err(ConfigError::invalid("a", format!("must satisfy 0 <= a < 1, got {}", self.a)));
        }
        self.impacts.validate()?;
        self.news.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub t: usize,
    pub price: f64,
    /// Average investor valuation.
    pub value: f64,
    /// Average speculator price forecast (news-driven model).
    pub anticipated_price: f64,
    /// Speculators' anticipated return (trend-following and general models).
    pub anticipated_return: f64,
    pub ret: f64,
    /// Most recent return first; trend-following model only.
    pub return_history: VecDeque<f64>,
}

impl MarketState {
    pub fn initial(price: f64, value: f64, anticipated_price: f64, anticipated_return: f64) -> Self {
        MarketState {
            t: 0,
            price,
            value,
            anticipated_price,
            anticipated_return,
            ret: 0.0,
            return_history: VecDeque::new(),
        }
    }

    pub fn with_history(mut self, horizon: usize) -> Self {
        self.return_history = std::iter::repeat_n(0.0, horizon).collect();
        self
    }
}

/// Everything random that one step consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDraws {
    pub m: f64,
    pub n: f64,
    pub news: NewsDraw,
}

impl StepDraws {
    pub fn quiet(m: f64, n: f64) -> Self {
        StepDraws {
            m,
            n,
            news: NewsDraw {
                indicator_i: false,
                indicator_j: false,
                eps: 0.0,
                nu: 0.0,
            },
        }
    }
}

/// The three streams owned by one path.
#[derive(Debug, Clone)]
pub struct PathStreams {
    pub impact: SeedStream,
    pub news_i: SeedStream,
    pub news_j: SeedStream,
}

/// Stream ids reserved per path.
pub const STREAMS_PER_PATH: u64 = 4;

impl PathStreams {
    pub fn new(root_seed: u64, path_index: u64) -> Self {
        let base = path_index * STREAMS_PER_PATH;
        PathStreams {
            impact: derive_stream(root_seed, base),
            news_i: derive_stream(root_seed, base + 1),
            news_j: derive_stream(root_seed, base + 2),
        }
    }

    pub fn draw(&mut self, m_dist: &DistSpec, n_dist: &DistSpec, news: &NewsSpec) -> StepDraws {
        let m = m_dist.sample(&mut self.impact);
        let n = n_dist.sample(&mut self.impact);
        let news = draw_news(news, &mut self.news_i, &mut self.news_j);
        StepDraws { m, n, news }
    }
}

fn finish(mut next: MarketState, prev: &MarketState, ret: f64, units: UnitsConvention) -> Result<MarketState, ModelError> {
    let price = units.apply_return(prev.price, ret);
    next.t = prev.t + 1;
    if !(price > 0.0 && price.is_finite()) {
        return Err(ModelError::PriceFloorBreach { t: next.t, price });
    }
    next.price = price;
    next.ret = ret;
    Ok(next)
}

/// Purely news-driven market: valuations and price forecasts are random walks.
#[derive(Debug, Clone, PartialEq)]
pub struct NewsDrivenModel {
    pub impacts: ImpactDists,
    pub news: NewsSpec,
    pub units: UnitsConvention,
}

impl NewsDrivenModel {
    pub fn advance(&self, state: &MarketState, d: &StepDraws) -> Result<MarketState, ModelError> {
        let mut next = state.clone();
        if d.news.indicator_i {
            next.value += d.news.eps;
        }
        if d.news.indicator_j {
            next.anticipated_price += d.news.nu;
        }
        let ret = d.m * self.units.mispricing(next.value, state.price)
            + d.n * self.units.mispricing(next.anticipated_price, state.price);
        finish(next, state, ret, self.units)
    }

    pub fn step(&self, state: &MarketState, streams: &mut PathStreams) -> Result<(MarketState, StepDraws), ModelError> {
        let d = streams.draw(&self.impacts.m_dist, &self.impacts.n_dist, &self.news);
        Ok((self.advance(state, &d)?, d))
    }
}

/// Purely speculative market of trend followers (random-coefficient AR).
#[derive(Debug, Clone, PartialEq)]
pub struct TrendFollowingModel {
    /// Normalized weights, lag 1 first.
    pub weights: Vec<f64>,
    pub n_dist: DistSpec,
    pub news: NewsSpec,
    pub units: UnitsConvention,
}

const NO_IMPACT: DistSpec = DistSpec::Constant { value: 0.0 };

impl TrendFollowingModel {
    pub fn advance(&self, state: &MarketState, d: &StepDraws) -> Result<MarketState, ModelError> {
        let trend: f64 = self
            .weights
            .iter()
            .zip(state.return_history.iter())
            .map(|(w, r)| w * r)
            .sum();
        let news = if d.news.indicator_j { d.news.nu } else { 0.0 };
        let expected = trend + news;
        let ret = d.n * trend + d.n * news;
        let mut next = state.clone();
        next.anticipated_return = expected;
        next.return_history.push_front(ret);
        next.return_history.truncate(self.weights.len());
        finish(next, state, ret, self.units)
    }

    pub fn step(&self, state: &MarketState, streams: &mut PathStreams) -> Result<(MarketState, StepDraws), ModelError> {
        let d = streams.draw(&NO_IMPACT, &self.n_dist, &self.news);
        let d = StepDraws { m: 0.0, ..d };
        Ok((self.advance(state, &d)?, d))
    }
}

/// Investors on a news-driven random walk, speculators on a news-driven AR(1).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralModel {
    pub params: GeneralParams,
    pub units: UnitsConvention,
}

impl GeneralModel {
    pub fn advance(&self, state: &MarketState, d: &StepDraws) -> Result<MarketState, ModelError> {
        let mut next = state.clone();
        if d.news.indicator_i {
            next.value += d.news.nu;
        }
        next.anticipated_return = self.params.a * state.anticipated_return
            + if d.news.indicator_j { d.news.eps } else { 0.0 };
        let ret = d.n * next.anticipated_return + d.m * self.units.mispricing(next.value, state.price);
        finish(next, state, ret, self.units)
    }

    pub fn step(&self, state: &MarketState, streams: &mut PathStreams) -> Result<(MarketState, StepDraws), ModelError> {
        let imp = &self.params.impacts;
        let d = streams.draw(&imp.m_dist, &imp.n_dist, &self.params.news);
        Ok((self.advance(state, &d)?, d))
    }
}

/// A configured model of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    NewsDriven(NewsDrivenModel),
    TrendFollowing(TrendFollowingModel),
    General(GeneralModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::NewsDriven(_) => ModelKind::NewsDriven,
            Model::TrendFollowing(_) => ModelKind::TrendFollowing,
            Model::General(_) => ModelKind::General,
        }
    }

    pub fn step(&self, state: &MarketState, streams: &mut PathStreams) -> Result<(MarketState, StepDraws), ModelError> {
        match self {
            Model::NewsDriven(m) => m.step(state, streams),
            Model::TrendFollowing(m) => m.step(state, streams),
            Model::General(m) => m.step(state, streams),
        }
    }

    /// The speculative expectation recorded in path output.
    pub fn expectation(&self, state: &MarketState) -> f64 {
        match self {
            Model::NewsDriven(_) => state.anticipated_price,
            _ => state.anticipated_return,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::DistSpec;
    use proptest::prelude::*;

    fn news(prob_i: f64, prob_j: f64) -> NewsSpec {
        NewsSpec {
            prob_i,
            prob_j,
            eps_dist: DistSpec::gaussian(0.0, 1.0),
            nu_dist: DistSpec::gaussian(0.0, 1.0),
            common_news: false,
        }
    }

    fn impacts() -> ImpactDists {
        ImpactDists {
            m_dist: DistSpec::exponential(0.1),
            n_dist: DistSpec::exponential(0.1),
        }
    }

    #[test]
    fn impacts_from_microfoundation() {
        let micro = Microfoundation {
            beta: 1.0,
            mu: 1.0,
            gamma: 1.0,
            liquidity: 100.0,
            investor_count: 10.0,
            speculator_count: 1.0,
        };
        assert!((derive_impacts(&micro).unwrap().0 - 0.1).abs() < 1e-15);

        let micro = Microfoundation {
            beta: 0.5,
            gamma: 2.0,
            speculator_count: 40.0,
            ..micro
        };
        assert!((derive_impacts(&micro).unwrap().1 - 0.4).abs() < 1e-15);

        let tiny = Microfoundation { gamma: 1e-300, ..micro };
        assert!(derive_impacts(&tiny).unwrap().1 < 1e-290);

        let bad = Microfoundation { liquidity: 0.0, ..micro };
        assert!(derive_impacts(&bad).is_err());
    }

    #[test]
    fn excess_demand_cases() {
        let micro = Microfoundation {
            beta: 1.0,
            mu: 2.0,
            gamma: 1.0,
            liquidity: 1.0,
            investor_count: 1.0,
            speculator_count: 1.0,
        };
        assert_eq!(excess_demand(100.0, 100.0, 100.0, &micro), 0.0);
        assert!((excess_demand(110.0, 100.0, 100.0, &micro) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn news_driven_no_news_at_rest() {
        let model = NewsDrivenModel {
            impacts: impacts(),
            news: news(0.0, 0.0),
            units: UnitsConvention::Percent,
        };
        let s = MarketState::initial(100.0, 100.0, 100.0, 0.0);
        let next = model.advance(&s, &StepDraws::quiet(0.3, 0.7)).unwrap();
        assert_eq!(next.ret, 0.0);
        assert_eq!(next.price, 100.0);
        assert_eq!(next.t, 1);
    }

    #[test]
    fn news_driven_hand_computed_step() {
        let model = NewsDrivenModel {
            impacts: impacts(),
            news: news(0.0, 0.0),
            units: UnitsConvention::Percent,
        };
        let s = MarketState::initial(100.0, 102.0, 100.0, 0.0);
        let next = model.advance(&s, &StepDraws::quiet(0.1, 0.1)).unwrap();
        // 0.1 * 100 * (102 - 100)/100 + 0.1 * 0 = 0.2
        assert!((next.ret - 0.2).abs() < 1e-12);
        assert!((next.price - 100.2).abs() < 1e-12);
    }

    #[test]
    fn news_driven_applies_shocks_before_pricing() {
        let model = NewsDrivenModel {
            impacts: impacts(),
            news: news(1.0, 1.0),
            units: UnitsConvention::Fraction,
        };
        let s = MarketState::initial(100.0, 100.0, 100.0, 0.0);
        let d = StepDraws {
            m: 0.5,
            n: 0.25,
            news: NewsDraw {
                indicator_i: true,
                indicator_j: true,
                eps: 2.0,
                nu: -4.0,
            },
        };
        let next = model.advance(&s, &d).unwrap();
        assert_eq!(next.value, 102.0);
        assert_eq!(next.anticipated_price, 96.0);
        let expected = 0.5 * 0.02 + 0.25 * (-0.04);
        assert!((next.ret - expected).abs() < 1e-15);
    }

    #[test]
    fn trend_following_cases() {
        let model = TrendFollowingModel {
            weights: vec![1.0],
            n_dist: DistSpec::exponential(0.5),
            news: news(0.0, 0.0),
            units: UnitsConvention::Percent,
        };
        let s = MarketState::initial(100.0, 100.0, 100.0, 0.0).with_history(1);
        let next = model.advance(&s, &StepDraws::quiet(0.0, 0.5)).unwrap();
        assert_eq!(next.ret, 0.0);

        let mut s = s;
        s.return_history[0] = 1.0;
        let next = model.advance(&s, &StepDraws::quiet(0.0, 0.5)).unwrap();
        assert_eq!(next.ret, 0.5);
        assert_eq!(next.return_history, VecDeque::from(vec![0.5]));
    }

    #[test]
    fn trend_history_shifts() {
        let model = TrendFollowingModel {
            weights: vec![0.5, 0.3, 0.2],
            n_dist: DistSpec::exponential(0.5),
            news: news(0.0, 0.0),
            units: UnitsConvention::Percent,
        };
        let mut s = MarketState::initial(100.0, 100.0, 100.0, 0.0).with_history(3);
        s.return_history = VecDeque::from(vec![1.0, 2.0, 4.0]);
        let next = model.advance(&s, &StepDraws::quiet(0.0, 1.0)).unwrap();
        let expected = 0.5 + 0.6 + 0.8;
        assert!((next.ret - expected).abs() < 1e-12);
        assert_eq!(next.return_history.len(), 3);
        assert_eq!(next.return_history[1], 1.0);
        assert_eq!(next.return_history[2], 2.0);
    }

    fn general(a: f64) -> GeneralModel {
        GeneralModel {
            params: GeneralParams {
                a,
                impacts: ImpactDists {
                    m_dist: DistSpec::exponential(0.2),
                    n_dist: DistSpec::exponential(0.1),
                },
                news: news(0.3, 0.1),
            },
            units: UnitsConvention::Percent,
        }
    }

    #[test]
    fn general_equilibrium_point() {
        let s = MarketState::initial(100.0, 100.0, 100.0, 0.0);
        let next = general(0.99).advance(&s, &StepDraws::quiet(0.2, 0.1)).unwrap();
        assert_eq!(next.ret, 0.0);
        assert_eq!(next.price, 100.0);
    }

    #[test]
    fn general_hand_computed_step() {
        let s = MarketState::initial(100.0, 100.0, 100.0, 1.0);
        let next = general(0.99).advance(&s, &StepDraws::quiet(0.2, 0.1)).unwrap();
        assert!((next.anticipated_return - 0.99).abs() < 1e-15);
        assert!((next.ret - 0.099).abs() < 1e-15);
        assert!((next.price - 100.0 * 1.00099).abs() < 1e-12);
    }

    #[test]
    fn general_value_news_uses_nu_and_expectation_uses_eps() {
        let s = MarketState::initial(100.0, 100.0, 100.0, 0.0);
        let d = StepDraws {
            m: 0.0,
            n: 1.0,
            news: NewsDraw {
                indicator_i: true,
                indicator_j: true,
                eps: 3.0,
                nu: 0.5,
            },
        };
        let next = general(0.5).advance(&s, &d).unwrap();
        assert_eq!(next.value, 100.5);
        assert_eq!(next.anticipated_return, 3.0);
        assert_eq!(next.ret, 3.0);
    }

    #[test]
    fn price_floor_breach_is_an_error() {
        let model = NewsDrivenModel {
            impacts: impacts(),
            news: news(0.0, 0.0),
            units: UnitsConvention::Fraction,
        };
        let s = MarketState::initial(100.0, 0.0, 100.0, 0.0);
        let err = model.advance(&s, &StepDraws::quiet(1.5, 0.0)).unwrap_err();
        assert_eq!(err, ModelError::PriceFloorBreach { t: 1, price: -50.0 });
    }

    #[test]
    fn weights_normalize() {
        let w = TrendWeights {
            horizon: 4,
            scheme: WeightScheme::Equal,
        };
        assert_eq!(w.realize().unwrap(), vec![0.25; 4]);
        let w = TrendWeights {
            horizon: 3,
            scheme: WeightScheme::ExpDecay { lambda: 0.5 },
        };
        let v = w.realize().unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(v[0] > v[1] && v[1] > v[2]);
        let w = TrendWeights {
            horizon: 2,
            scheme: WeightScheme::Explicit { weights: vec![1.0] },
        };
        assert!(w.realize().is_err());
        let w = TrendWeights {
            horizon: 0,
            scheme: WeightScheme::Equal,
        };
        assert!(w.realize().is_err());
    }

    #[test]
    fn general_params_feedback_bounds() {
        let mut p = general(0.99).params;
        assert!(p.validate().is_ok());
        p.a = 1.0;
        assert!(p.validate().is_err());
        p.a = -0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn gaussian_impacts_rejected() {
        let d = ImpactDists {
            m_dist: DistSpec::gaussian(0.1, 0.1),
            n_dist: DistSpec::exponential(0.1),
        };
        assert!(d.validate().is_err());
    }

    proptest! {
        #[test]
        fn microfoundation_matches_impact_form(
            beta in 0.01f64..5.0, mu in 0.01f64..5.0, gamma in 0.01f64..5.0,
            liq in 1.0f64..1e4, mc in 1.0f64..1e3, nc in 1.0f64..1e3,
            v in 50.0f64..150.0, pe in 50.0f64..150.0, p in 50.0f64..150.0,
        ) {
            let micro = Microfoundation { beta, mu, gamma, liquidity: liq, investor_count: mc, speculator_count: nc };
            let via_demand = micro.price_response(excess_demand(v, pe, p, &micro));
            let (m, n) = derive_impacts(&micro).unwrap();
            let via_impacts = m * (v - p) / p + n * (pe - p) / p;
            let scale = (m * (v - p) / p).abs() + (n * (pe - p) / p).abs();
            prop_assert!((via_demand - via_impacts).abs() <= 8.0 * f64::EPSILON * scale);
        }
    }
}
