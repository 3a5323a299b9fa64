//! Rolling-horizon weekly simulation.
//!
//! Each week: forecast new supply and demand, cap supply at what actually
//! arrived, solve the allocation, reveal actual demand, fulfil from hub
//! stock, and carry unmet demand forward.

pub mod montecarlo;
pub mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

pub use montecarlo::{run_monte_carlo, AggregateReport};
pub use report::{write_plot_csv, write_week_log_csv};

use crate::allocate::{cap_supply, solve_exact, AllocationPlan, AllocationProblem};
use crate::domain::{CompatPreset, CompatibilityMatrix, CumulativeSeries, Entity, Unit250};
use crate::error::{Error, Result};
use crate::forecast::{ForecastConfig, ForecastStep, OnlineForecaster};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecastMode {
    /// One forecaster per (entity, resource) stream.
    #[default]
    PerResource,
    /// Forecast totals per entity, then split across resources by weights.
    #[serde(alias = "aggregate")]
    AggregateDisaggregate,
}

impl std::str::FromStr for ForecastMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "per-resource" => Ok(Self::PerResource),
            "aggregate" | "aggregate-disaggregate" => Ok(Self::AggregateDisaggregate),
            other => Err(Error::InvalidConfig(format!("unknown forecast mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon: usize,
    /// First week with shipments.
    pub warmup: usize,
    pub mip_compat: CompatibilityMatrix,
    pub fulfillment_compat: CompatibilityMatrix,
    pub forecast: ForecastConfig,
    pub mode: ForecastMode,
    /// Per-resource split probabilities used in aggregate mode.
    pub weights: Vec<f64>,
    /// Replace forecasts by the actual values.
    pub perfect_information: bool,
    pub runs: usize,
    pub master_seed: u64,
    /// Worker threads for Monte Carlo runs; 0 uses all cores.
    pub workers: usize,
}

impl SimulationConfig {
    /// Defaults for `scenario`: full horizon, warmup 4, both matrices from presets.
    pub fn for_scenario(scenario: &Scenario, mip: CompatPreset, fulfillment: CompatPreset) -> Result<Self> {
        Ok(Self {
            horizon: scenario.weeks,
            warmup: 4,
            mip_compat: mip.build(&scenario.resources)?,
            fulfillment_compat: fulfillment.build(&scenario.resources)?,
            forecast: ForecastConfig::default(),
            mode: ForecastMode::PerResource,
            weights: crate::domain::default_weights(&scenario.resources),
            perfect_information: false,
            runs: 300,
            master_seed: 0,
            workers: 1,
        })
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        scenario.validate()?;
        self.forecast.validate()?;
        let r = scenario.num_resources();
        if self.mip_compat.size() != r || self.fulfillment_compat.size() != r {
            return Err(Error::InvalidDimension(format!("compatibility matrices must be {r}x{r}")));
        }
        if self.warmup == 0 || self.horizon < self.warmup {
            return Err(Error::InvalidConfig(format!("horizon {} must be at least warmup {} (>= 1)", self.horizon, self.warmup)));
        }
        if self.horizon > scenario.weeks {
            return Err(Error::Horizon { requested: self.horizon, available: scenario.weeks });
        }
        if self.mode == ForecastMode::AggregateDisaggregate {
            check_weights(&self.weights, r)?;
        }
        Ok(())
    }
}

fn check_weights(weights: &[f64], r: usize) -> Result<()> {
    if weights.len() != r {
        return Err(Error::InvalidConfig(format!("{} weights for {r} resources", weights.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig("weights must be non-negative and sum to 1".into()));
    }
    Ok(())
}

/// Multinomial split of `aggregate` units across resources, drawn as a
/// sequence of conditional binomials.
pub fn disaggregate<R: rand::Rng>(aggregate: Unit250, weights: &[f64], rng: &mut R) -> Result<Vec<Unit250>> {
    check_weights(weights, weights.len())?;
    let mut out = vec![Unit250::ZERO; weights.len()];
    let mut left = aggregate.0;
    let mut mass = 1.0;
    for (k, &w) in weights.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == weights.len() {
            out[k] = Unit250(left);
            break;
        }
        let p = if mass > 0.0 { (w / mass).clamp(0.0, 1.0) } else { 0.0 };
        let x = Binomial::new(left, p).map_err(|e| Error::InvalidConfig(e.to_string()))?.sample(rng);
        out[k] = Unit250(x);
        left -= x;
        mass -= w;
    }
    Ok(out)
}

/// Forecast steps for every stream, computed once per scenario.
///
/// Forecasts depend only on scenario data, so Monte Carlo runs (which differ
/// only in the random split of aggregate forecasts) share one book.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastBook {
    pub mode: ForecastMode,
    /// Per-resource mode: one per resource. Aggregate mode: one entry.
    pub supply: Vec<Vec<ForecastStep>>,
    /// `[hub][resource]`, or `[hub][0]` in aggregate mode.
    pub demand: Vec<Vec<Vec<ForecastStep>>>,
}

impl ForecastBook {
    pub fn build(scenario: &Scenario, cfg: &SimulationConfig) -> Result<Self> {
        let replay = |s: &CumulativeSeries| OnlineForecaster::replay(&cfg.forecast, &s.truncated(cfg.horizon));
        let (supply, demand) = match cfg.mode {
            ForecastMode::PerResource => (
                (0..scenario.num_resources()).map(|r| replay(&scenario.supply_series(r))).collect::<Result<Vec<_>>>()?,
                (0..scenario.num_hubs())
                    .map(|h| (0..scenario.num_resources()).map(|r| replay(&scenario.demand_series(h, r))).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?,
            ),
            ForecastMode::AggregateDisaggregate => (
                vec![replay(&scenario.aggregate_supply_series())?],
                (0..scenario.num_hubs()).map(|h| Ok(vec![replay(&scenario.aggregate_demand_series(h))?])).collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(Self { mode: cfg.mode, supply, demand })
    }

    /// Step issued for week `week` (weeks start at 2).
    fn step(steps: &[ForecastStep], week: usize) -> Option<&ForecastStep> {
        week.checked_sub(2).and_then(|i| steps.get(i))
    }

    fn increment(steps: &[ForecastStep], week: usize) -> Unit250 {
        Self::step(steps, week).map_or(Unit250::ZERO, ForecastStep::increment)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationState {
    /// Last completed week (0 before the first step).
    pub week: usize,
    pub supplier_inventory: Vec<Unit250>,
    /// `[hub][resource]`
    pub hub_inventory: Vec<Vec<Unit250>>,
    /// Carried-over actual demand, `[hub][resource]`.
    pub unmet_ledger: Vec<Vec<Unit250>>,
}

impl SimulationState {
    pub fn new(resources: usize, hubs: usize) -> Self {
        Self {
            week: 0,
            supplier_inventory: vec![Unit250::ZERO; resources],
            hub_inventory: vec![vec![Unit250::ZERO; resources]; hubs],
            unmet_ledger: vec![vec![Unit250::ZERO; resources]; hubs],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekOutcome {
    pub week: usize,
    /// Whether an allocation was solved (false during warmup).
    pub allocated: bool,
    pub supply_forecast: Vec<Unit250>,
    /// `[hub][resource]` forecast new demand.
    pub demand_forecast: Vec<Vec<Unit250>>,
    pub caps: Vec<Unit250>,
    pub plan: Option<AllocationPlan>,
    /// `[hub][supply resource]` units received this week.
    pub received: Vec<Vec<Unit250>>,
    /// `[hub][demand resource][supply resource]` units used to serve demand.
    pub fulfilled: Vec<Vec<Vec<Unit250>>>,
    pub actual_supply: Vec<Unit250>,
    pub actual_demand: Vec<Vec<Unit250>>,
    pub start: SimulationState,
    pub end: SimulationState,
}

impl WeekOutcome {
    pub fn shipped_of(&self, supply: usize) -> u64 {
        self.received.iter().map(|row| row[supply].0).sum()
    }

    pub fn fulfilled_demand(&self, hub: usize, demand: usize) -> u64 {
        self.fulfilled[hub][demand].iter().map(|u| u.0).sum()
    }

    pub fn fulfilled_from(&self, hub: usize, supply: usize) -> u64 {
        self.fulfilled[hub].iter().map(|row| row[supply].0).sum()
    }
}

/// Serves each hub's ledger from its available units: exact matches first,
/// then compatible substitutes in ascending supply index. Returns
/// `[demand][supply]` counts and updates `ledger` and `available` in place.
pub fn fulfill(ledger: &mut [Unit250], available: &mut [Unit250], compat: &CompatibilityMatrix) -> Vec<Vec<Unit250>> {
    let r = ledger.len();
    let mut used = vec![vec![Unit250::ZERO; r]; r];
    for d in 0..r {
        let take = ledger[d].0.min(available[d].0);
        used[d][d] = Unit250(take);
        ledger[d].0 -= take;
        available[d].0 -= take;
    }
    for d in 0..r {
        for s in compat.suppliers_of(d).filter(|&s| s != d) {
            let take = ledger[d].0.min(available[s].0);
            used[d][s].0 += take;
            ledger[d].0 -= take;
            available[s].0 -= take;
        }
    }
    used
}

/// Forecast increments for `week`, split across resources in aggregate mode.
fn forecasts_for(scenario: &Scenario, cfg: &SimulationConfig, book: &ForecastBook, week: usize, rng: &mut ChaCha8Rng) -> Result<(Vec<Unit250>, Vec<Vec<Unit250>>)> {
    let r = scenario.num_resources();
    if cfg.perfect_information {
        return Ok((scenario.supply[week - 1].clone(), scenario.demand[week - 1].clone()));
    }
    match book.mode {
        ForecastMode::PerResource => Ok((
            (0..r).map(|k| ForecastBook::increment(&book.supply[k], week)).collect(),
            book.demand.iter().map(|hub| (0..r).map(|k| ForecastBook::increment(&hub[k], week)).collect()).collect(),
        )),
        ForecastMode::AggregateDisaggregate => {
            let supply = disaggregate(ForecastBook::increment(&book.supply[0], week), &cfg.weights, rng)?;
            let demand = book
                .demand
                .iter()
                .map(|hub| disaggregate(ForecastBook::increment(&hub[0], week), &cfg.weights, rng))
                .collect::<Result<Vec<_>>>()?;
            Ok((supply, demand))
        }
    }
}

/// Advances the simulation by one week.
pub fn step_week(state: &SimulationState, scenario: &Scenario, cfg: &SimulationConfig, book: &ForecastBook, rng: &mut ChaCha8Rng) -> Result<(SimulationState, WeekOutcome)> {
    let week = state.week + 1;
    if week > cfg.horizon || week > scenario.weeks {
        return Err(Error::Horizon { requested: week, available: cfg.horizon.min(scenario.weeks) });
    }
    let r = scenario.num_resources();
    let h = scenario.num_hubs();
    let start = state.clone();
    let mut next = state.clone();
    next.week = week;

    let actual_supply = scenario.supply[week - 1].clone();
    let actual_demand = scenario.demand[week - 1].clone();
    let allocated = week >= cfg.warmup;

    let (supply_forecast, demand_forecast, caps, plan) = if allocated {
        let (sf, df) = forecasts_for(scenario, cfg, book, week, rng)?;
        let caps: Vec<Unit250> = (0..r).map(|k| cap_supply(state.supplier_inventory[k] + sf[k], state.supplier_inventory[k] + actual_supply[k])).collect();
        let demands: Vec<Vec<Unit250>> = (0..h).map(|hub| (0..r).map(|k| df[hub][k] + state.unmet_ledger[hub][k]).collect()).collect();
        let problem = AllocationProblem {
            resources: scenario.resources.clone(),
            hubs: scenario.hubs.clone(),
            caps: caps.clone(),
            demands,
            inventories: state.hub_inventory.clone(),
            compat: cfg.mip_compat.clone(),
        };
        let plan = solve_exact(&problem)?;
        (sf, df, caps, Some(plan))
    } else {
        (vec![Unit250::ZERO; r], vec![vec![Unit250::ZERO; r]; h], vec![Unit250::ZERO; r], None)
    };

    let received: Vec<Vec<Unit250>> = (0..h).map(|hub| (0..r).map(|s| Unit250(plan.as_ref().map_or(0, |p| p.received(hub, s)))).collect()).collect();
    for k in 0..r {
        let shipped: u64 = received.iter().map(|row| row[k].0).sum();
        next.supplier_inventory[k] = state.supplier_inventory[k] + actual_supply[k] - Unit250(shipped);
    }

    let mut fulfilled = Vec::with_capacity(h);
    for hub in 0..h {
        for k in 0..r {
            next.unmet_ledger[hub][k] += actual_demand[hub][k];
        }
        let mut available: Vec<Unit250> = (0..r).map(|k| state.hub_inventory[hub][k] + received[hub][k]).collect();
        fulfilled.push(fulfill(&mut next.unmet_ledger[hub], &mut available, &cfg.fulfillment_compat));
        next.hub_inventory[hub] = available;
    }

    let outcome = WeekOutcome {
        week,
        allocated,
        supply_forecast,
        demand_forecast,
        caps,
        plan,
        received,
        fulfilled,
        actual_supply,
        actual_demand,
        start,
        end: next.clone(),
    };
    Ok((next, outcome))
}

/// Actual and forecast cumulative values of one forecast stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamTrace {
    pub entity: Entity,
    /// `None` for aggregate streams.
    pub resource: Option<usize>,
    pub actual_cumulative: Vec<i64>,
    pub steps: Vec<ForecastStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub horizon: usize,
    pub weeks: Vec<WeekOutcome>,
    /// `[hub][resource]` ledger after the last week.
    pub final_unmet: Vec<Vec<Unit250>>,
    /// `[hub]` total actual demand over the horizon.
    pub hub_total_demand: Vec<Unit250>,
    /// `[hub]` demand the allocator was told to expect: forecast increments
    /// in allocation weeks plus actual demand before the first allocation.
    pub hub_forecast_demand: Vec<Unit250>,
}

impl SimulationReport {
    pub fn final_unmet_by_hub(&self) -> Vec<Unit250> {
        self.final_unmet.iter().map(|row| row.iter().copied().sum()).collect()
    }

    pub fn final_unmet_by_resource(&self) -> Vec<Unit250> {
        let r = self.final_unmet.first().map_or(0, Vec::len);
        (0..r).map(|k| self.final_unmet.iter().map(|row| row[k]).sum()).collect()
    }

    pub fn total_unmet(&self) -> Unit250 {
        self.final_unmet.iter().flatten().copied().sum()
    }
}

/// Per-stream traces for accuracy scoring and plotting.
pub fn stream_traces(scenario: &Scenario, cfg: &SimulationConfig, book: &ForecastBook) -> Vec<StreamTrace> {
    let cut = |s: CumulativeSeries| s.truncated(cfg.horizon).values;
    let mut out = Vec::new();
    match book.mode {
        ForecastMode::PerResource => {
            for (k, steps) in book.supply.iter().enumerate() {
                out.push(StreamTrace { entity: Entity::Supplier, resource: Some(k), actual_cumulative: cut(scenario.supply_series(k)), steps: steps.clone() });
            }
            for (h, hub) in book.demand.iter().enumerate() {
                for (k, steps) in hub.iter().enumerate() {
                    out.push(StreamTrace { entity: Entity::Hub(h), resource: Some(k), actual_cumulative: cut(scenario.demand_series(h, k)), steps: steps.clone() });
                }
            }
        }
        ForecastMode::AggregateDisaggregate => {
            out.push(StreamTrace { entity: Entity::Supplier, resource: None, actual_cumulative: cut(scenario.aggregate_supply_series()), steps: book.supply[0].clone() });
            for (h, hub) in book.demand.iter().enumerate() {
                out.push(StreamTrace { entity: Entity::Hub(h), resource: None, actual_cumulative: cut(scenario.aggregate_demand_series(h)), steps: hub[0].clone() });
            }
        }
    }
    out
}

/// Runs weeks `1..=horizon` with a precomputed forecast book.
pub fn run_with_book(scenario: &Scenario, cfg: &SimulationConfig, book: &ForecastBook, rng: &mut ChaCha8Rng) -> Result<SimulationReport> {
    let mut state = SimulationState::new(scenario.num_resources(), scenario.num_hubs());
    let mut weeks = Vec::with_capacity(cfg.horizon);
    let mut forecast_demand = vec![Unit250::ZERO; scenario.num_hubs()];
    for _ in 0..cfg.horizon {
        let (next, outcome) = step_week(&state, scenario, cfg, book, rng)?;
        for (h, fd) in forecast_demand.iter_mut().enumerate() {
            let src = if outcome.allocated { &outcome.demand_forecast[h] } else { &outcome.actual_demand[h] };
            *fd += src.iter().copied().sum();
        }
        weeks.push(outcome);
        state = next;
    }
    let horizon_scenario = scenario.truncated(cfg.horizon)?;
    Ok(SimulationReport {
        horizon: cfg.horizon,
        weeks,
        final_unmet: state.unmet_ledger,
        hub_total_demand: (0..scenario.num_hubs()).map(|h| horizon_scenario.hub_total_demand(h)).collect(),
        hub_forecast_demand: forecast_demand,
    })
}

/// RNG for run `k` of a Monte Carlo experiment.
pub fn run_rng(master_seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run);
    rng
}

/// One full simulation over the configured horizon.
pub fn run_horizon(scenario: &Scenario, cfg: &SimulationConfig, seed: u64) -> Result<SimulationReport> {
    cfg.validate(scenario)?;
    let book = ForecastBook::build(scenario, cfg)?;
    run_with_book(scenario, cfg, &book, &mut run_rng(seed, 0))
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::domain::ResourceSet;

    fn flat(supply: u64, demand: u64, weeks: usize) -> Scenario {
        Scenario {
            resources: ResourceSet::abo(),
            hubs: vec!["h1".into(), "h2".into()],
            weeks,
            supply: vec![vec![Unit250(supply); 4]; weeks],
            demand: vec![vec![vec![Unit250(demand); 4]; 2]; weeks],
            holiday_weeks: BTreeSet::new(),
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn abundant_supply_leaves_nothing_unmet() {
        let s = flat(10, 3, 8);
        let mut cfg = SimulationConfig::for_scenario(&s, CompatPreset::Identity, CompatPreset::Concor1).unwrap();
        cfg.perfect_information = true;
        let rep = run_horizon(&s, &cfg, 0).unwrap();
        for w in rep.weeks.iter().filter(|w| w.week >= cfg.warmup) {
            assert!(w.end.unmet_ledger.iter().flatten().all(|u| u.0 == 0), "week {}", w.week);
        }
        assert_eq!(rep.total_unmet(), Unit250(0));
    }

    #[test]
    fn warmup_weeks_do_not_ship() {
        let s = flat(10, 3, 6);
        let cfg = SimulationConfig::for_scenario(&s, CompatPreset::Identity, CompatPreset::Identity).unwrap();
        let rep = run_horizon(&s, &cfg, 0).unwrap();
        for w in &rep.weeks[..3] {
            assert!(!w.allocated);
            assert_eq!(w.shipped_of(0), 0);
        }
        assert!(rep.weeks[3].allocated);
        assert_eq!(rep.weeks[2].end.unmet_ledger[0][0], Unit250(9));
    }

    #[test]
    fn compatible_inventory_serves_other_group() {
        let res = ResourceSet::abo();
        let a = res.index_of("A").unwrap();
        let o = res.index_of("O").unwrap();
        let mut ledger = vec![Unit250::ZERO; 4];
        ledger[o] = Unit250(1);
        let mut avail = vec![Unit250::ZERO; 4];
        avail[a] = Unit250(1);
        let used = fulfill(&mut ledger, &mut avail, &CompatibilityMatrix::concor1(&res).unwrap());
        assert_eq!(used[o][a], Unit250(1));
        assert_eq!(ledger[o], Unit250(0));
        assert_eq!(avail[a], Unit250(0));
    }

    #[test]
    fn exact_match_preferred() {
        let res = ResourceSet::abo();
        let a = res.index_of("A").unwrap();
        let o = res.index_of("O").unwrap();
        let mut ledger = vec![Unit250::ZERO; 4];
        ledger[o] = Unit250(2);
        ledger[a] = Unit250(1);
        let mut avail = vec![Unit250::ZERO; 4];
        avail[a] = Unit250(2);
        avail[o] = Unit250(1);
        let used = fulfill(&mut ledger, &mut avail, &CompatibilityMatrix::concor1(&res).unwrap());
        assert_eq!(used[a][a], Unit250(1));
        assert_eq!(used[o][o], Unit250(1));
        assert_eq!(used[o][a], Unit250(1));
    }

    #[test]
    fn cap_uses_actual_arrivals() {
        let mut s = flat(0, 0, 5);
        for w in 0..3 {
            s.supply[w][0] = Unit250(5);
        }
        s.supply[3][0] = Unit250(2);
        let cfg = SimulationConfig::for_scenario(&s, CompatPreset::Identity, CompatPreset::Identity).unwrap();
        let book = ForecastBook::build(&s, &cfg).unwrap();
        let mut state = SimulationState::new(4, 2);
        state.week = 3;
        state.unmet_ledger[0][0] = Unit250(5);
        let (_, out) = step_week(&state, &s, &cfg, &book, &mut run_rng(0, 0)).unwrap();
        assert_eq!(out.supply_forecast[0], Unit250(5));
        assert_eq!(out.caps[0], Unit250(2));
        assert_eq!(out.shipped_of(0), 2);
    }

    #[test]
    fn disaggregate_examples() {
        let mut rng = run_rng(1, 0);
        assert_eq!(disaggregate(Unit250(0), &[0.42, 0.46, 0.09, 0.03], &mut rng).unwrap(), vec![Unit250(0); 4]);
        assert_eq!(disaggregate(Unit250(7), &[1.0, 0.0, 0.0, 0.0], &mut rng).unwrap(), vec![Unit250(7), Unit250(0), Unit250(0), Unit250(0)]);
        assert!(disaggregate(Unit250(7), &[0.5, 0.6], &mut rng).is_err());
        let w = [0.42, 0.46, 0.09, 0.03];
        let n = 20_000;
        let mut sums = [0u64; 4];
        for _ in 0..n {
            let v = disaggregate(Unit250(10), &w, &mut rng).unwrap();
            assert_eq!(v.iter().map(|u| u.0).sum::<u64>(), 10);
            for k in 0..4 {
                sums[k] += v[k].0;
            }
        }
        for k in 0..4 {
            let mean = sums[k] as f64 / n as f64;
            assert!((mean - 10.0 * w[k]).abs() < 0.05, "resource {k}: {mean}");
        }
    }

    #[test]
    fn horizon_error() {
        let s = flat(1, 1, 5);
        let mut cfg = SimulationConfig::for_scenario(&s, CompatPreset::Identity, CompatPreset::Identity).unwrap();
        cfg.horizon = 6;
        assert!(matches!(run_horizon(&s, &cfg, 0), Err(Error::Horizon { .. })));
    }
}
