//! Path and ensemble simulation.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{ConfigError, ModelError};
use crate::models::{ModelKind, PathStreams};
use crate::stats::{summary_stats, SummaryStats};

/// One recorded period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub t: usize,
    pub price: f64,
    pub ret: f64,
    pub value: f64,
    /// Anticipated price (news-driven model) or anticipated return.
    pub expectation: f64,
    pub news_i: bool,
    pub news_j: bool,
    pub m: f64,
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub kind: ModelKind,
    pub records: Vec<PathRecord>,
    pub fingerprint: String,
    pub root_seed: u64,
    pub path_index: u64,
    pub initial_price: f64,
    /// Set when the run stopped early; records end just before the failing step.
    pub aborted: Option<ModelError>,
}

impl Path {
    pub fn returns(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ret).collect()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.price).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }

    pub fn abort_step(&self) -> Option<usize> {
        self.aborted.as_ref().map(|ModelError::PriceFloorBreach { t, .. }| *t)
    }

    pub fn is_complete(&self) -> bool {
        self.aborted.is_none()
    }
}

/// Simulate path `path_index` of the ensemble keyed by `root_seed`.
pub fn simulate_path(config: &RunConfig, root_seed: u64, path_index: u64) -> Result<Path, ConfigError> {
    let model = config.build_model()?;
    let mut streams = PathStreams::new(root_seed, path_index);
    let mut state = config.initial_state();
    let mut records = Vec::with_capacity(config.horizon);
    let mut aborted = None;
    for _ in 0..config.horizon {
        match model.step(&state, &mut streams) {
            Ok((next, d)) => {
                records.push(PathRecord {
                    t: next.t,
                    price: next.price,
                    ret: next.ret,
                    value: next.value,
                    expectation: model.expectation(&next),
                    news_i: d.news.indicator_i,
                    news_j: d.news.indicator_j,
                    m: d.m,
                    n: d.n,
                });
                state = next;
            }
            Err(e) => {
                aborted = Some(e);
                break;
            }
        }
    }
    Ok(Path {
        kind: config.model,
        records,
        fingerprint: config.fingerprint(),
        root_seed,
        path_index,
        initial_price: config.p0,
        aborted,
    })
}

/// Single path from `(config, root_seed)`; identical to path 0 of an ensemble.
pub fn simulate(config: &RunConfig, root_seed: u64) -> Result<Path, ConfigError> {
    simulate_path(config, root_seed, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PathSeed {
    pub root_seed: u64,
    pub path_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub seed: PathSeed,
    /// `None` when the path aborted before recording any return.
    pub stats: Option<SummaryStats>,
    pub steps: usize,
    pub aborted_at: Option<usize>,
}

impl PathSummary {
    pub fn of(path: &Path) -> Self {
        PathSummary {
            seed: PathSeed {
                root_seed: path.root_seed,
                path_index: path.path_index,
            },
            stats: summary_stats(&path.returns()).ok(),
            steps: path.records.len(),
            aborted_at: path.abort_step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub root_seed: u64,
    pub paths: Vec<Path>,
    pub summaries: Vec<PathSummary>,
    /// Returns of every path concatenated in path order, aborted paths included
    /// up to their abort step.
    pub pooled_returns: Vec<f64>,
}

impl Ensemble {
    pub fn path_seeds(&self) -> Vec<PathSeed> {
        self.summaries.iter().map(|s| s.seed).collect()
    }

    /// Per-path standard deviations of complete paths.
    pub fn path_stds(&self) -> Vec<f64> {
        self.summaries
            .iter()
            .filter(|s| s.aborted_at.is_none())
            .filter_map(|s| s.stats.map(|st| st.std))
            .collect()
    }

    /// Mean over paths of the per-path mean and std.
    pub fn averaged_stats(&self) -> Option<(f64, f64)> {
        let st: Vec<SummaryStats> = self.summaries.iter().filter_map(|s| s.stats).collect();
        if st.is_empty() {
            return None;
        }
        let k = st.len() as f64;
        Some((
            st.iter().map(|s| s.mean).sum::<f64>() / k,
            st.iter().map(|s| s.std).sum::<f64>() / k,
        ))
    }
}

/// `n_paths` independent paths, optionally on a dedicated pool of `jobs`
/// threads. Output does not depend on scheduling.
pub fn run_ensemble(config: &RunConfig, n_paths: usize, root_seed: u64, jobs: Option<usize>) -> Result<Ensemble, ConfigError> {
    if n_paths == 0 {
        return Err(ConfigError::invalid("n_paths", "must be >= 1"));
    }
    config.validate()?;
    let run = || -> Result<Vec<Path>, ConfigError> {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| simulate_path(config, root_seed, i))
            .collect()
    };
    let paths = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .expect("thread pool")
            .install(run)?,
        None => run()?,
    };
    let summaries = paths.iter().map(PathSummary::of).collect();
    let pooled_returns = paths.iter().flat_map(|p| p.records.iter().map(|r| r.ret)).collect();
    Ok(Ensemble {
        root_seed,
        paths,
        summaries,
        pooled_returns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::DistSpec;

    fn short(name: &str, t: usize) -> RunConfig {
        let mut c = RunConfig::preset(name).unwrap();
        c.horizon = t;
        c
    }

    #[test]
    fn deterministic_per_seed() {
        let c = short("fig5", 2000);
        assert_eq!(simulate(&c, 42).unwrap(), simulate(&c, 42).unwrap());
        assert_ne!(simulate(&c, 42).unwrap().returns(), simulate(&c, 43).unwrap().returns());
    }

    #[test]
    fn path_length_matches_horizon() {
        let p = simulate(&short("fig3", 10), 1).unwrap();
        assert_eq!(p.records.len(), 10);
        assert_eq!(p.records[0].t, 1);
        assert_eq!(p.records[9].t, 10);
    }

    #[test]
    fn no_news_constant_path() {
        let mut c = short("fig3", 500);
        c.news.prob_i = 0.0;
        c.news.prob_j = 0.0;
        let p = simulate(&c, 3).unwrap();
        assert!(p.prices().iter().all(|&x| x == 100.0));
        assert!(p.returns().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn general_without_feedback_news_tracks_value() {
        let mut c = short("fig5", 300);
        c.a = 0.0;
        c.news.prob_j = 0.0;
        let p = simulate(&c, 4).unwrap();
        assert!(p.records.iter().all(|r| r.expectation == 0.0));
    }

    #[test]
    fn value_accounting_identity() {
        let c = short("fig5", 3000);
        let p = simulate(&c, 11).unwrap();
        // Replay the value shocks from an identical stream set.
        let mut streams = PathStreams::new(11, 0);
        let mut acc = c.v0;
        for r in &p.records {
            let d = streams.draw(&c.impacts.m_dist, &c.impacts.n_dist, &c.news);
            if d.news.indicator_i {
                acc += d.news.nu;
            }
            assert_eq!(r.value, acc);
        }
    }

    #[test]
    fn truncation_equivalence() {
        let long = simulate(&short("fig5", 1000), 8).unwrap();
        let cut = simulate(&short("fig5", 400), 8).unwrap();
        assert_eq!(&long.records[..400], &cut.records[..]);
    }

    #[test]
    fn trend_h1_reduction() {
        let mut c = RunConfig::preset("trend").unwrap();
        c.horizon = 2000;
        let p = simulate(&c, 5).unwrap();
        let mut streams = PathStreams::new(5, 0);
        let mut prev = 0.0;
        for r in &p.records {
            let d = streams.draw(&DistSpec::Constant { value: 0.0 }, &c.impacts.n_dist, &c.news);
            let news = if d.news.indicator_j { d.news.nu } else { 0.0 };
            let expected = d.n * prev + d.n * news;
            assert_eq!(r.ret, expected);
            prev = r.ret;
        }
    }

    #[test]
    fn singleton_ensemble_equals_simulate() {
        let c = short("fig5", 1000);
        let e = run_ensemble(&c, 1, 9, None).unwrap();
        let p = simulate(&c, 9).unwrap();
        assert_eq!(e.paths[0], p);
        assert_eq!(e.summaries[0], PathSummary::of(&p));
        assert_eq!(e.pooled_returns, p.returns());
    }

    #[test]
    fn ensemble_independent_of_thread_count() {
        let c = short("fig6", 1000);
        let a = run_ensemble(&c, 6, 77, Some(1)).unwrap();
        let b = run_ensemble(&c, 6, 77, Some(4)).unwrap();
        assert_eq!(a, b);
        let seeds = a.path_seeds();
        for i in 0..seeds.len() {
            for j in i + 1..seeds.len() {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
        assert!(run_ensemble(&c, 0, 1, None).is_err());
    }

    #[test]
    fn price_floor_abort_keeps_partial_path() {
        let mut c = short("fig3", 100);
        c.units = crate::models::UnitsConvention::Fraction;
        c.news.eps_dist = DistSpec::gaussian(0.0, 500.0);
        c.impacts.m_dist = DistSpec::exponential(0.9);
        c.news.prob_i = 1.0;
        let p = simulate(&c, 1).unwrap();
        let t = p.abort_step().expect("aggressive fraction run aborts");
        assert_eq!(p.records.len(), t - 1);
        assert!(p.prices().iter().all(|&x| x > 0.0));
    }
}
