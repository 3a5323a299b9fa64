//! Repeated simulation runs with per-run seeds and fairness aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_rng, run_with_book, stream_traces, ForecastBook, SimulationConfig};
use crate::domain::Unit250;
use crate::error::{Error, Result};
use crate::metrics::{fairness_summary, score_stream, AccuracyBasis, FairnessSummary, ForecastAccuracy};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub master_seed: u64,
    pub hubs: Vec<String>,
    /// `[hub]` total actual demand, 500 ml doses.
    pub hub_total_demand: Vec<f64>,
    /// `[hub]` mean total forecast demand over runs, 500 ml doses.
    pub hub_forecast_demand: Vec<f64>,
    /// `[run][hub]` final unmet demand in 250 ml units.
    pub per_run_unmet: Vec<Vec<Unit250>>,
    pub fairness: FairnessSummary,
    /// Cumulative-basis accuracy per stream (identical in every run).
    pub accuracy: Vec<ForecastAccuracy>,
}

/// Runs `cfg.runs` simulations. Run `k` draws its randomness only from
/// `(cfg.master_seed, k)`, and results are gathered in run order, so the
/// report does not depend on `cfg.workers`.
pub fn run_monte_carlo(scenario: &Scenario, cfg: &SimulationConfig) -> Result<AggregateReport> {
    if cfg.runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    cfg.validate(scenario)?;
    let book = ForecastBook::build(scenario, cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let results: Vec<(Vec<Unit250>, Vec<Unit250>)> = pool.install(|| {
        (0..cfg.runs as u64)
            .into_par_iter()
            .map(|k| {
                let rep = run_with_book(scenario, cfg, &book, &mut run_rng(cfg.master_seed, k))?;
                Ok((rep.final_unmet_by_hub(), rep.hub_forecast_demand))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let horizon = scenario.truncated(cfg.horizon)?;
    let demand: Vec<Unit250> = (0..scenario.num_hubs()).map(|h| horizon.hub_total_demand(h)).collect();
    let per_run_unmet: Vec<Vec<Unit250>> = results.iter().map(|(u, _)| u.clone()).collect();
    let m = results.len() as f64;
    let hub_forecast_demand = (0..scenario.num_hubs())
        .map(|h| results.iter().map(|(_, f)| f[h].0).sum::<u64>() as f64 / m / 2.0)
        .collect();
    let accuracy = stream_traces(scenario, cfg, &book)
        .iter()
        .filter_map(|t| score_stream(t.entity, t.resource, &t.actual_cumulative, &t.steps, AccuracyBasis::Cumulative).ok())
        .collect();

    Ok(AggregateReport {
        runs: cfg.runs,
        master_seed: cfg.master_seed,
        hubs: scenario.hubs.clone(),
        hub_total_demand: demand.iter().map(|d| d.doses_500ml()).collect(),
        hub_forecast_demand,
        fairness: fairness_summary(&per_run_unmet, &demand)?,
        per_run_unmet,
        accuracy,
    })
}
