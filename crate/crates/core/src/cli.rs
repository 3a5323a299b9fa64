//! Command implementations behind the `epialloc` binary.
//!
//! Every command takes a fully resolved [`RunConfig`] (config file merged
//! with flags), writes its outputs under `out` atomically, and returns the
//! paths it wrote.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::info;
use serde::{Deserialize, Serialize};

use crate::allocate::{build_problem, solve_exact, AllocationPlan, AllocationProblem, AllocationRecord};
use crate::domain::{validate_series, CompatPreset, CumulativeSeries, Entity};
use crate::error::{Error, Result};
use crate::forecast::{ForecastConfig, OnlineForecaster};
use crate::metrics::{fairness_summary, score_stream, write_summary_csv, AccuracyBasis, ForecastAccuracy, SettingSummary};
use crate::scenario::{generate_synthetic, Scenario, SyntheticParams};
use crate::simulate::{run_horizon, run_monte_carlo, stream_traces, write_plot_csv, write_week_log_csv, AggregateReport, ForecastBook, ForecastMode, SimulationConfig};

/// Resolved settings shared by all subcommands. Loaded from a JSON document;
/// command-line flags are applied on top with [`RunConfig::apply`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Master seed; commands that need one and find none pick one from the clock.
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub workers: usize,
    /// Allocation-level compatibility; Monte Carlo runs both presets when unset.
    pub mip_compat: Option<CompatPreset>,
    pub fulfill_compat: CompatPreset,
    pub mode: ForecastMode,
    /// Weeks to simulate; the whole scenario when unset.
    pub horizon: Option<usize>,
    pub warmup: usize,
    pub runs: usize,
    /// Resource split for aggregate mode; ABO frequencies when unset.
    pub weights: Option<Vec<f64>>,
    pub perfect_information: bool,
    pub accuracy_basis: AccuracyBasis,
    pub forecast: ForecastConfig,
    pub generator: SyntheticParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out: PathBuf::from("out"),
            workers: 1,
            mip_compat: None,
            fulfill_compat: CompatPreset::Concor1,
            mode: ForecastMode::PerResource,
            horizon: None,
            warmup: 4,
            runs: 300,
            weights: None,
            perfect_information: false,
            accuracy_basis: AccuracyBasis::Cumulative,
            forecast: ForecastConfig::default(),
            generator: SyntheticParams::default(),
        }
    }
}

/// Flag values; `None` leaves the config file value in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub mip_compat: Option<CompatPreset>,
    pub fulfill_compat: Option<CompatPreset>,
    pub mode: Option<ForecastMode>,
    pub runs: Option<usize>,
    pub horizon: Option<usize>,
    pub perfect_information: bool,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
            None => Ok(Self::default()),
        }
    }

    pub fn apply(mut self, o: Overrides) -> Self {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if let Some(v) = o.out {
            self.out = v;
        }
        if let Some(v) = o.workers {
            self.workers = v;
        }
        if o.mip_compat.is_some() {
            self.mip_compat = o.mip_compat;
        }
        if let Some(v) = o.fulfill_compat {
            self.fulfill_compat = v;
        }
        if let Some(v) = o.mode {
            self.mode = v;
        }
        if let Some(v) = o.runs {
            self.runs = v;
        }
        if o.horizon.is_some() {
            self.horizon = o.horizon;
        }
        self.perfect_information |= o.perfect_information;
        self
    }

    fn log_resolved(&self, command: &str) {
        info!("{command}: resolved config {}", serde_json::to_string(self).unwrap_or_default());
    }

    fn seed_or_clock(&self) -> u64 {
        self.seed.unwrap_or_else(|| {
            let seed = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
            info!("no seed given; using {seed}");
            seed
        })
    }

    /// Simulation settings for `scenario` with the given allocation matrix.
    pub fn simulation(&self, scenario: &Scenario, mip: CompatPreset) -> Result<SimulationConfig> {
        let mut cfg = SimulationConfig::for_scenario(scenario, mip, self.fulfill_compat)?;
        cfg.horizon = self.horizon.unwrap_or(scenario.weeks);
        cfg.warmup = self.warmup;
        cfg.forecast = self.forecast.clone();
        cfg.mode = self.mode;
        if let Some(w) = &self.weights {
            cfg.weights = w.clone();
        }
        cfg.perfect_information = self.perfect_information;
        cfg.runs = self.runs;
        cfg.master_seed = self.seed.unwrap_or(0);
        cfg.workers = self.workers;
        cfg.validate(scenario)?;
        Ok(cfg)
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed command never leaves a partial file behind.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

/// Writes a synthetic scenario to `out/scenario.json`.
pub fn cmd_generate(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.log_resolved("generate");
    let seed = cfg.seed.or(cfg.generator.seed).unwrap_or_else(|| cfg.seed_or_clock());
    let scenario = generate_synthetic(&cfg.generator, seed)?;
    if let Some(p) = &cfg.generator.pinned_totals {
        check_pinned(&scenario, p)?;
    }
    let path = cfg.out.join("scenario.json");
    write_json(&path, &scenario)?;
    info!("wrote {} ({} weeks, {} hubs, seed {seed})", path.display(), scenario.weeks, scenario.num_hubs());
    Ok(path)
}

fn check_pinned(s: &Scenario, p: &crate::scenario::PinnedTotals) -> Result<()> {
    let check = |totals: &Option<Vec<f64>>, got: &dyn Fn(usize) -> f64, what: &str| -> Result<()> {
        if let Some(t) = totals {
            for (r, want) in t.iter().enumerate() {
                if (got(r) - want).abs() > 1e-9 {
                    return Err(Error::Infeasible(format!("{what} total for {} is {} not {want}", s.resources.label(r), got(r))));
                }
            }
        }
        Ok(())
    };
    check(&p.supply, &|r| s.total_supply(r).doses_500ml(), "supply")?;
    check(&p.demand, &|r| s.total_demand(r).doses_500ml(), "demand")
}

/// Parses a stream id: `supplier:<resource>`, `<hub>:<resource>`, with
/// `all` for the aggregate over resources.
pub fn resolve_stream(scenario: &Scenario, id: &str) -> Result<CumulativeSeries> {
    let (who, what) = id.split_once(':').ok_or_else(|| Error::UnknownStream(id.to_string()))?;
    let resource = if what.eq_ignore_ascii_case("all") {
        None
    } else {
        Some(scenario.resources.index_of(what).ok_or_else(|| Error::UnknownStream(id.to_string()))?)
    };
    let entity = if who.eq_ignore_ascii_case("supplier") {
        Entity::Supplier
    } else {
        Entity::Hub(scenario.hubs.iter().position(|h| h.eq_ignore_ascii_case(who)).ok_or_else(|| Error::UnknownStream(id.to_string()))?)
    };
    Ok(match (entity, resource) {
        (Entity::Supplier, Some(r)) => scenario.supply_series(r),
        (Entity::Supplier, None) => scenario.aggregate_supply_series(),
        (Entity::Hub(h), Some(r)) => scenario.demand_series(h, r),
        (Entity::Hub(h), None) => scenario.aggregate_demand_series(h),
    })
}

/// One row of `cmd_forecast` output. Model columns are empty before the
/// warmup ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastCsvRow {
    pub week: usize,
    pub actual: i64,
    pub raw: Option<f64>,
    pub corrected: Option<f64>,
    pub issued: Option<f64>,
    pub increment: u64,
}

pub fn forecast_rows(series: &CumulativeSeries, cfg: &ForecastConfig) -> Result<Vec<ForecastCsvRow>> {
    let steps = OnlineForecaster::replay(cfg, series)?;
    Ok(steps
        .iter()
        .map(|s| {
            let f = s.issued();
            ForecastCsvRow {
                week: s.week().get(),
                actual: series.values[s.week().get() - 1],
                raw: f.map(|f| f.raw_cumulative),
                corrected: f.map(|f| f.corrected_cumulative),
                issued: f.map(|f| f.issued_cumulative),
                increment: s.increment().0,
            }
        })
        .collect())
}

/// Replays the online forecaster over one stream and writes
/// `out/forecast_<stream>.csv` with `week,actual,raw,corrected,issued,increment`.
pub fn cmd_forecast(scenario: &Scenario, stream: &str, cfg: &RunConfig) -> Result<PathBuf> {
    cfg.log_resolved("forecast");
    let series = resolve_stream(scenario, stream)?;
    let rows = forecast_rows(&series, &cfg.forecast)?;
    let path = cfg.out.join(format!("forecast_{}.csv", stream.replace(':', "_")));
    write_atomic(&path, |w| {
        let mut c = csv::Writer::from_writer(w);
        for r in &rows {
            c.serialize(r)?;
        }
        c.flush()?;
        Ok(())
    })?;
    Ok(path)
}

/// Result of a one-shot allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocateOutput {
    pub variables: usize,
    pub constraints: usize,
    #[serde(flatten)]
    pub record: AllocationRecord,
}

pub fn allocate_problem(problem: &AllocationProblem) -> Result<AllocateOutput> {
    let model = build_problem(problem)?;
    let plan = solve_exact(problem)?;
    Ok(AllocateOutput {
        variables: model.variable_count(),
        constraints: model.constraint_count(),
        record: AllocationRecord { problem: problem.clone(), plan },
    })
}

pub fn describe_plan(problem: &AllocationProblem, plan: &AllocationPlan) -> String {
    let mut s = format!("z* = {} ({:.6})\n", plan.objective_exact, plan.objective);
    for (h, grid) in plan.shipments.iter().enumerate() {
        for (d, row) in grid.iter().enumerate() {
            for (sup, v) in row.iter().enumerate() {
                if v.0 > 0 {
                    s.push_str(&format!("  {}: {} <- {} x{}\n", problem.hubs[h], problem.resources.label(d), problem.resources.label(sup), v.0));
                }
            }
        }
    }
    s.push_str(&format!(
        "shipped {} units, residual unmet {}; {} LP solves, {} pivots, {} nodes",
        plan.total_shipped, plan.residual_unmet, plan.stats.lp_solves, plan.stats.pivots, plan.stats.nodes
    ));
    s
}

/// Solves the problem in `problem_path` and writes `out/plan.json`.
pub fn cmd_allocate(problem_path: &Path, cfg: &RunConfig) -> Result<(PathBuf, AllocateOutput)> {
    cfg.log_resolved("allocate");
    let problem: AllocationProblem = serde_json::from_str(&fs::read_to_string(problem_path)?)?;
    problem.validate()?;
    let output = allocate_problem(&problem)?;
    info!("model: {} variables, {} constraints", output.variables, output.constraints);
    let path = cfg.out.join("plan.json");
    write_json(&path, &output)?;
    Ok((path, output))
}

fn accuracy_rows(scenario: &Scenario, sim: &SimulationConfig, basis: AccuracyBasis) -> Result<Vec<ForecastAccuracy>> {
    let book = ForecastBook::build(scenario, sim)?;
    Ok(stream_traces(scenario, sim, &book)
        .iter()
        .filter_map(|t| score_stream(t.entity, t.resource, &t.actual_cumulative, &t.steps, basis).ok())
        .collect())
}

fn write_accuracy_csv(path: &Path, scenario: &Scenario, rows: &[ForecastAccuracy]) -> Result<()> {
    write_atomic(path, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["entity", "resource", "n", "rmse", "mape", "mape_skipped"])?;
        for a in rows {
            let entity = match a.entity {
                Entity::Supplier => "supplier".to_string(),
                Entity::Hub(h) => scenario.hubs[h].clone(),
            };
            let resource = a.resource.map_or("all".to_string(), |r| scenario.resources.label(r).to_string());
            c.write_record([
                entity,
                resource,
                a.n.to_string(),
                format!("{:.4}", a.rmse),
                a.mape.map_or(String::new(), |m| format!("{m:.4}")),
                a.mape_skipped.to_string(),
            ])?;
        }
        c.flush()?;
        Ok(())
    })
}

/// One simulation run. Writes `simulation.json`, `week_log.csv`, `plot.csv`,
/// `accuracy.csv` and `summary.csv` under `out`.
pub fn cmd_simulate(scenario: &Scenario, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.log_resolved("simulate");
    let preset = cfg.mip_compat.unwrap_or(CompatPreset::Concor1);
    let sim = cfg.simulation(scenario, preset)?;
    let seed = cfg.seed.unwrap_or(0);
    let report = run_horizon(scenario, &sim, seed)?;
    let book = ForecastBook::build(scenario, &sim)?;
    let traces = stream_traces(scenario, &sim, &book);

    let out = &cfg.out;
    let paths: Vec<PathBuf> = ["simulation.json", "week_log.csv", "plot.csv", "accuracy.csv", "summary.csv"].iter().map(|f| out.join(f)).collect();
    write_json(&paths[0], &report)?;
    write_atomic(&paths[1], |w| write_week_log_csv(scenario, &report, w))?;
    write_atomic(&paths[2], |w| write_plot_csv(scenario, &traces, w))?;
    write_accuracy_csv(&paths[3], scenario, &accuracy_rows(scenario, &sim, cfg.accuracy_basis)?)?;
    let fairness = fairness_summary(&[report.final_unmet_by_hub()], &report.hub_total_demand)?;
    let forecast: Vec<f64> = report.hub_forecast_demand.iter().map(|u| u.doses_500ml()).collect();
    let settings = [SettingSummary { setting: preset.name().to_string(), summary: fairness }];
    write_atomic(&paths[4], |w| write_summary_csv(&scenario.hubs, &forecast, &settings, w))?;
    info!("final unmet {} doses over {} weeks", report.total_unmet().doses_500ml(), report.horizon);
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOutput {
    pub settings: Vec<(CompatPreset, AggregateReport)>,
}

/// Monte Carlo runs for one or both allocation matrices. Writes
/// `montecarlo.json`, `summary.csv` and `accuracy.csv` under `out`.
pub fn cmd_montecarlo(scenario: &Scenario, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.log_resolved("montecarlo");
    let presets = match cfg.mip_compat {
        Some(p) => vec![p],
        None => vec![CompatPreset::Identity, CompatPreset::Concor1],
    };
    let seeded = RunConfig { seed: Some(cfg.seed_or_clock()), ..cfg.clone() };
    let mut settings = Vec::new();
    for p in presets {
        let sim = seeded.simulation(scenario, p)?;
        settings.push((p, run_monte_carlo(scenario, &sim)?));
    }
    let first = &settings[0].1;
    let out = &cfg.out;
    let paths: Vec<PathBuf> = ["montecarlo.json", "summary.csv", "accuracy.csv"].iter().map(|f| out.join(f)).collect();
    let output = MonteCarloOutput { settings: settings.clone() };
    write_json(&paths[0], &output)?;
    let summaries: Vec<SettingSummary> = settings.iter().map(|(p, r)| SettingSummary { setting: p.name().to_string(), summary: r.fairness.clone() }).collect();
    write_atomic(&paths[1], |w| write_summary_csv(&scenario.hubs, &first.hub_forecast_demand, &summaries, w))?;
    write_accuracy_csv(&paths[2], scenario, &first.accuracy)?;
    Ok(paths)
}

/// What [`cmd_validate`] recognised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Validated {
    Scenario { weeks: usize, hubs: usize, resources: usize },
    Problem { variables: usize, constraints: usize },
    Config,
}

/// Checks a scenario, problem or config JSON file. Scenario series must be
/// non-negative and non-decreasing once accumulated.
pub fn cmd_validate(path: &Path) -> Result<Validated> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let has = |k: &str| value.get(k).is_some();
    if has("supply") && has("demand") && has("weeks") {
        let s = Scenario::from_json_str(&text)?;
        for r in 0..s.num_resources() {
            check_stream(&s.supply_series(r), &format!("supplier:{}", s.resources.label(r)))?;
            for h in 0..s.num_hubs() {
                check_stream(&s.demand_series(h, r), &format!("{}:{}", s.hubs[h], s.resources.label(r)))?;
            }
        }
        return Ok(Validated::Scenario { weeks: s.weeks, hubs: s.num_hubs(), resources: s.num_resources() });
    }
    if has("caps") && has("demands") {
        let p: AllocationProblem = serde_json::from_str(&text)?;
        let m = build_problem(&p)?;
        return Ok(Validated::Problem { variables: m.variable_count(), constraints: m.constraint_count() });
    }
    let cfg: RunConfig = serde_json::from_str(&text)?;
    cfg.forecast.validate()?;
    cfg.generator.validate()?;
    Ok(Validated::Config)
}

fn check_stream(s: &CumulativeSeries, id: &str) -> Result<()> {
    validate_series(&s.values).map_err(|v| Error::InvalidConfig(format!("stream {id}: {} violations, first at week {}", v.len(), v[0].index)))
}
