//! Run configuration: a flat JSON document, optionally layered on a named
//! preset.
//!
//! Keys: `preset`, `model`, `units`, `T`, `p0`, `v0`, `pe0`, `re0`, `prob_i`,
//! `prob_j`, `common_news`, `eps`, `nu`, `m`, `n`, `a`, `weights`, `seed`,
//! `n_paths`. Distributions are objects such as
//! `{"kind": "exponential", "mean": 0.1}`. Keys in the document override the
//! preset they name.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{ConfigError, DataError};
use crate::kernel::{DistSpec, NewsSpec};
use crate::models::{
    GeneralModel, GeneralParams, ImpactDists, MarketState, Model, ModelKind, NewsDrivenModel,
    TrendFollowingModel, TrendWeights, UnitsConvention,
};

pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_PRICE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub units: UnitsConvention,
    /// Number of simulated periods.
    pub horizon: usize,
    pub p0: f64,
    pub v0: f64,
    pub pe0: f64,
    pub re0: f64,
    pub news: NewsSpec,
    pub impacts: ImpactDists,
    pub a: f64,
    pub weights: TrendWeights,
    pub seed: Option<u64>,
    pub n_paths: usize,
}

/// Published summary statistics attached to a preset, for comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceStats {
    pub mean_r: f64,
    pub std_r: f64,
    /// Whether the published values are averages over several paths.
    pub averaged: bool,
}

pub const PRESET_NAMES: [&str; 7] = ["fig3", "fig4", "fig5", "fig6", "fig7-left", "fig7-right", "trend"];

fn base(model: ModelKind) -> RunConfig {
    RunConfig {
        model,
        units: UnitsConvention::Percent,
        horizon: DEFAULT_HORIZON,
        p0: DEFAULT_PRICE,
        v0: DEFAULT_PRICE,
        pe0: DEFAULT_PRICE,
        re0: 0.0,
        news: NewsSpec {
            prob_i: 0.0,
            prob_j: 0.0,
            eps_dist: DistSpec::gaussian(0.0, 1.0),
            nu_dist: DistSpec::gaussian(0.0, 1.0),
            common_news: false,
        },
        impacts: ImpactDists {
            m_dist: DistSpec::exponential(0.1),
            n_dist: DistSpec::exponential(0.1),
        },
        a: 0.0,
        weights: TrendWeights::default(),
        seed: None,
        n_paths: 1,
    }
}

fn news_driven_column(n_paths: usize) -> RunConfig {
    let mut c = base(ModelKind::NewsDriven);
    c.impacts = ImpactDists {
        m_dist: DistSpec::exponential(0.1),
        n_dist: DistSpec::exponential(0.1),
    };
    c.news.prob_i = 0.5;
    c.news.prob_j = 0.5;
    c.news.eps_dist = DistSpec::gaussian(0.0, 1.0);
    c.news.nu_dist = DistSpec::gaussian(0.0, 1.0);
    c.n_paths = n_paths;
    c
}

fn general_column(n_paths: usize, prob_i: f64) -> RunConfig {
    let mut c = base(ModelKind::General);
    c.impacts = ImpactDists {
        m_dist: DistSpec::exponential(0.2),
        n_dist: DistSpec::exponential(0.1),
    };
    c.news.prob_i = prob_i;
    c.news.prob_j = 0.1;
    c.news.eps_dist = DistSpec::gaussian(0.0, 1.0);
    c.news.nu_dist = DistSpec::gaussian(0.0, 0.04);
    c.a = 0.99;
    c.n_paths = n_paths;
    c
}

impl RunConfig {
    /// Named parameter sets. `fig*` follow the published parameter table;
    /// `trend` is a first-order trend-following setup with exponential
    /// coefficients of mean 0.5.
    pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
        Ok(match name {
            "fig3" => news_driven_column(1),
            "fig4" => news_driven_column(5),
            "fig5" => general_column(1, 0.3),
            "fig6" => general_column(5, 0.3),
            "fig7-left" => general_column(1, 0.3),
            "fig7-right" => general_column(1, 0.0),
            "trend" => {
                let mut c = base(ModelKind::TrendFollowing);
                c.impacts = ImpactDists {
                    m_dist: DistSpec::Constant { value: 0.0 },
                    n_dist: DistSpec::exponential(0.5),
                };
                c.news.prob_j = 0.1;
                c.news.nu_dist = DistSpec::gaussian(0.0, 1.0);
                c
            }
            other => return Err(ConfigError::UnknownPreset(other.to_string())),
        })
    }

    pub fn preset_reference(name: &str) -> Option<ReferenceStats> {
        let (mean_r, std_r, averaged) = match name {
            "fig3" => (0.04, 2.68, false),
            "fig4" => (0.16, 4.99, true),
            "fig5" => (0.01, 1.43, false),
            "fig6" => (0.01, 1.46, true),
            "fig7-left" => (0.01, 1.48, false),
            "fig7-right" => (0.01, 1.44, false),
            _ => return None,
        };
        Some(ReferenceStats {
            mean_r,
            std_r,
            averaged,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon < 2 {
            return Err(ConfigError::invalid("T", format!("horizon must be >= 2, got {}", self.horizon)));
        }
        for (key, v) in [("p0", self.p0), ("v0", self.v0), ("pe0", self.pe0), ("re0", self.re0)] {
            if !v.is_finite() {
                return Err(ConfigError::invalid(key, format!("must be finite, got {v}")));
            }
        }
        if self.p0 <= 0.0 {
            return Err(ConfigError::invalid("p0", format!("initial price must be > 0, got {}", self.p0)));
        }
        if self.n_paths == 0 {
            return Err(ConfigError::invalid("n_paths", "must be >= 1"));
        }
        self.news.validate()?;
        match self.model {
            ModelKind::NewsDriven => self.impacts.validate()?,
            ModelKind::TrendFollowing => {
                self.impacts.validate()?;
                self.weights.realize()?;
            }
            ModelKind::General => self.general_params().validate()?,
        }
        Ok(())
    }

    pub fn general_params(&self) -> GeneralParams {
        GeneralParams {
            a: self.a,
            impacts: self.impacts,
            news: self.news,
        }
    }

    /// Validated model for this configuration.
    pub fn build_model(&self) -> Result<Model, ConfigError> {
        self.validate()?;
        Ok(match self.model {
            ModelKind::NewsDriven => Model::NewsDriven(NewsDrivenModel {
                impacts: self.impacts,
                news: self.news,
                units: self.units,
            }),
            ModelKind::TrendFollowing => Model::TrendFollowing(TrendFollowingModel {
                weights: self.weights.realize()?,
                n_dist: self.impacts.n_dist,
                news: self.news,
                units: self.units,
            }),
            ModelKind::General => Model::General(GeneralModel {
                params: self.general_params(),
                units: self.units,
            }),
        })
    }

    pub fn initial_state(&self) -> MarketState {
        let s = MarketState::initial(self.p0, self.v0, self.pe0, self.re0);
        match self.model {
            ModelKind::TrendFollowing => s.with_history(self.weights.horizon),
            _ => s,
        }
    }

    /// Flat JSON document with every key present; `from_json` inverts it.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        let dist = |d: &DistSpec| serde_json::to_value(d).expect("DistSpec serializes");
        m.insert("model".into(), Value::from(self.model.as_str()));
        m.insert("units".into(), serde_json::to_value(self.units).expect("units serialize"));
        m.insert("T".into(), Value::from(self.horizon));
        m.insert("p0".into(), Value::from(self.p0));
        m.insert("v0".into(), Value::from(self.v0));
        m.insert("pe0".into(), Value::from(self.pe0));
        m.insert("re0".into(), Value::from(self.re0));
        m.insert("prob_i".into(), Value::from(self.news.prob_i));
        m.insert("prob_j".into(), Value::from(self.news.prob_j));
        m.insert("common_news".into(), Value::from(self.news.common_news));
        m.insert("eps".into(), dist(&self.news.eps_dist));
        m.insert("nu".into(), dist(&self.news.nu_dist));
        m.insert("m".into(), dist(&self.impacts.m_dist));
        m.insert("n".into(), dist(&self.impacts.n_dist));
        m.insert("a".into(), Value::from(self.a));
        m.insert(
            "weights".into(),
            serde_json::to_value(&self.weights).expect("weights serialize"),
        );
        m.insert("seed".into(), self.seed.map(Value::from).unwrap_or(Value::Null));
        m.insert("n_paths".into(), Value::from(self.n_paths));
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<RunConfig, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        RunConfig::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<RunConfig, ConfigError> {
        let obj = value
            .as_object()
            .ok_or_else(|| ConfigError::Malformed("top level must be a JSON object".into()))?;
        for key in obj.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key.clone()));
            }
        }
        let mut cfg = match obj.get("preset") {
            Some(Value::String(name)) => RunConfig::preset(name)?,
            Some(other) => return Err(ConfigError::invalid("preset", format!("expected a string, got {other}"))),
            None => {
                let model = obj.get("model").ok_or_else(|| ConfigError::MissingKey("model".into()))?;
                let kind = parse_model(model)?;
                for key in required_keys(kind) {
                    if !obj.contains_key(*key) {
                        return Err(ConfigError::MissingKey((*key).to_string()));
                    }
                }
                let mut c = base(kind);
                if kind == ModelKind::TrendFollowing {
                    c.impacts.m_dist = DistSpec::Constant { value: 0.0 };
                }
                c
            }
        };
        for (key, v) in obj {
            cfg.set_key(key, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Override a single key, e.g. from a command-line flag.
    pub fn set_key(&mut self, key: &str, v: &Value) -> Result<(), ConfigError> {
        match key {
            "preset" => {}
            "model" => self.model = parse_model(v)?,
            "units" => {
                self.units = v
                    .as_str()
                    .and_then(UnitsConvention::parse)
                    .ok_or_else(|| ConfigError::invalid("units", format!("expected \"percent\" or \"fraction\", got {v}")))?
            }
            "T" => self.horizon = as_count(key, v)?,
            "p0" => self.p0 = as_f64(key, v)?,
            "v0" => self.v0 = as_f64(key, v)?,
            "pe0" => self.pe0 = as_f64(key, v)?,
            "re0" => self.re0 = as_f64(key, v)?,
            "prob_i" => self.news.prob_i = as_f64(key, v)?,
            "prob_j" => self.news.prob_j = as_f64(key, v)?,
            "common_news" => {
                self.news.common_news = v
                    .as_bool()
                    .ok_or_else(|| ConfigError::invalid(key, format!("expected a boolean, got {v}")))?
            }
            "eps" => self.news.eps_dist = as_dist(key, v)?,
            "nu" => self.news.nu_dist = as_dist(key, v)?,
            "m" => self.impacts.m_dist = as_dist(key, v)?,
            "n" => self.impacts.n_dist = as_dist(key, v)?,
            "a" => self.a = as_f64(key, v)?,
            "weights" => {
                self.weights = serde_json::from_value(v.clone())
                    .map_err(|e| ConfigError::invalid(key, e.to_string()))?
            }
            "seed" => {
                self.seed = match v {
                    Value::Null => None,
                    other => Some(
                        other
                            .as_u64()
                            .ok_or_else(|| ConfigError::invalid(key, format!("expected an unsigned integer, got {other}")))?,
                    ),
                }
            }
            "n_paths" => self.n_paths = as_count(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Stable 64-bit FNV-1a hash of the serialized configuration, hex encoded.
    pub fn fingerprint(&self) -> String {
        use std::hash::Hasher;
        let text = serde_json::to_string(&self.to_json()).expect("config serializes");
        let mut h = fnv::FnvHasher::default();
        h.write(text.as_bytes());
        format!("{:016x}", h.finish())
    }
}

const KNOWN_KEYS: [&str; 19] = [
    "preset", "model", "units", "T", "p0", "v0", "pe0", "re0", "prob_i", "prob_j", "common_news", "eps", "nu", "m",
    "n", "a", "weights", "seed", "n_paths",
];

fn required_keys(kind: ModelKind) -> &'static [&'static str] {
    match kind {
        ModelKind::NewsDriven => &["prob_i", "prob_j", "eps", "nu", "m", "n"],
        ModelKind::TrendFollowing => &["prob_j", "nu", "n"],
        ModelKind::General => &["prob_i", "prob_j", "eps", "nu", "m", "n", "a"],
    }
}

fn parse_model(v: &Value) -> Result<ModelKind, ConfigError> {
    v.as_str()
        .and_then(ModelKind::parse)
        .ok_or_else(|| ConfigError::invalid("model", format!("expected news-driven, trend-following or general, got {v}")))
}

fn as_f64(key: &str, v: &Value) -> Result<f64, ConfigError> {
    v.as_f64()
        .ok_or_else(|| ConfigError::invalid(key, format!("expected a number, got {v}")))
}

fn as_count(key: &str, v: &Value) -> Result<usize, ConfigError> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| ConfigError::invalid(key, format!("expected a nonnegative integer, got {v}")))
}

fn as_dist(key: &str, v: &Value) -> Result<DistSpec, ConfigError> {
    let d: DistSpec = serde_json::from_value(v.clone()).map_err(|e| ConfigError::invalid(key, e.to_string()))?;
    d.validate().map_err(|e| e.nested(key))?;
    Ok(d)
}

pub fn load_config(path: &Path) -> Result<RunConfig, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(RunConfig::from_json_str(&text)?)
}

/// A preset name or a path to a JSON config file.
pub fn resolve_config(arg: &str) -> Result<RunConfig, DataError> {
    if PRESET_NAMES.contains(&arg) {
        return Ok(RunConfig::preset(arg)?);
    }
    load_config(Path::new(arg))
}
