//! Market models in which investors follow news-driven valuations and
//! speculators follow news-driven or trend-following expectations, plus the
//! statistics used to check their returns for fat tails and volatility
//! clustering.

// NaN must fail range checks, so `!(x > 0.0)` is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod kernel;
pub mod models;
pub mod sim;
pub mod stats;

pub use config::{load_config, resolve_config, RunConfig};
pub use error::{ConfigError, DataError, DomainError, ModelError, StatsError};
pub use kernel::{derive_stream, draw, draw_news, info_content, DistSpec, NewsSpec, SeedStream};
pub use models::{ModelKind, UnitsConvention};
pub use sim::{run_ensemble, simulate, Ensemble, Path, PathRecord};
