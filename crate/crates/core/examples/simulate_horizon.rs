//! One rolling-horizon run on a synthetic scenario with each compatibility
//! setting, plus the perfect-information reference.

use epialloc::domain::{CompatPreset, Unit250};
use epialloc::scenario::synthetic::{generate_synthetic, SyntheticParams};
use epialloc::simulate::{run_horizon, SimulationConfig};

fn main() -> epialloc::Result<()> {
    let scenario = generate_synthetic(&SyntheticParams::default(), 11)?;
    let r = scenario.num_resources();
    let demand: Unit250 = (0..r).map(|k| scenario.total_demand(k)).sum();
    let supply: Unit250 = (0..r).map(|k| scenario.total_supply(k)).sum();
    println!("{} weeks, {} hubs, demand {:.1} doses, supply {:.1} doses", scenario.weeks, scenario.num_hubs(), demand.doses_500ml(), supply.doses_500ml());

    for perfect in [false, true] {
        for preset in [CompatPreset::Identity, CompatPreset::Concor1] {
            let mut cfg = SimulationConfig::for_scenario(&scenario, preset, CompatPreset::Concor1)?;
            cfg.perfect_information = perfect;
            let report = run_horizon(&scenario, &cfg, 1)?;
            let by_res: Vec<f64> = report.final_unmet_by_resource().iter().map(|u| u.doses_500ml()).collect();
            println!("{:<8} perfect={perfect:<5} unmet {:>5.1} by group {by_res:?}", preset.name(), report.total_unmet().doses_500ml());
        }
    }

    let cfg = SimulationConfig::for_scenario(&scenario, CompatPreset::Concor1, CompatPreset::Concor1)?;
    let report = run_horizon(&scenario, &cfg, 1)?;
    println!("\nweek  caps               shipped  ledger");
    for w in report.weeks.iter().filter(|w| w.allocated) {
        let shipped: u64 = (0..scenario.num_resources()).map(|k| w.shipped_of(k)).sum();
        let ledger: u64 = w.end.unmet_ledger.iter().flatten().map(|u| u.0).sum();
        println!("{:>4}  {:<18} {shipped:>7}  {ledger:>6}", w.week, format!("{:?}", w.caps.iter().map(|c| c.0).collect::<Vec<_>>()));
    }
    Ok(())
}
