//! Repeated runs in aggregate-disaggregate mode: forecasts of total flow are
//! split across groups by population weights, so each run differs.

use epialloc::domain::CompatPreset;
use epialloc::metrics::{write_summary_csv, SettingSummary};
use epialloc::scenario::synthetic::{generate_synthetic, SyntheticParams};
use epialloc::simulate::{run_monte_carlo, ForecastMode, SimulationConfig};

fn main() -> epialloc::Result<()> {
    let scenario = generate_synthetic(&SyntheticParams::default(), 3)?;
    let mut settings = Vec::new();
    let mut forecast_demand = Vec::new();
    for preset in [CompatPreset::Identity, CompatPreset::Concor1] {
        let mut cfg = SimulationConfig::for_scenario(&scenario, preset, CompatPreset::Concor1)?;
        cfg.mode = ForecastMode::AggregateDisaggregate;
        cfg.runs = 50;
        cfg.master_seed = 2020;
        cfg.workers = 0;
        let report = run_monte_carlo(&scenario, &cfg)?;
        forecast_demand = report.hub_forecast_demand.clone();
        settings.push(SettingSummary { setting: preset.name().into(), summary: report.fairness });
    }
    write_summary_csv(&scenario.hubs, &forecast_demand, &settings, std::io::stdout())
}
