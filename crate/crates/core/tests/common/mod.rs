#![allow(dead_code)]

pub mod maxflow;

use epialloc::allocate::AllocationProblem;
use epialloc::domain::{CompatPreset, CompatibilityMatrix, ResourceSet, Unit250, CONCOR1_RULES};
use epialloc::scenario::Scenario;
use epialloc::simulate::{ForecastMode, SimulationConfig, WeekOutcome};
use rand::Rng;

/// Random instance with up to `max_r` resources, `max_h` hubs and
/// quantities in `0..=max_q`. Two-resource CONCOR instances use the O<-A rule.
pub fn random_problem<R: Rng>(rng: &mut R, max_r: usize, max_h: usize, max_q: u64, concor: bool) -> AllocationProblem {
    let r = rng.random_range(1..=max_r);
    let h = rng.random_range(1..=max_h);
    let labels: Vec<&str> = match (r, concor) {
        (4, _) => vec!["A", "O", "B", "AB"],
        (2, true) => vec!["O", "A"],
        _ => ["X", "Y", "Z", "W"][..r].to_vec(),
    };
    let resources = ResourceSet::new(&labels).unwrap();
    let compat = if concor {
        CompatibilityMatrix::from_rules(&resources, &CONCOR1_RULES).unwrap()
    } else {
        CompatibilityMatrix::identity(r).unwrap()
    };
    let mut grid = |rows: usize| -> Vec<Vec<Unit250>> {
        (0..rows).map(|_| (0..r).map(|_| Unit250(rng.random_range(0..=max_q))).collect()).collect()
    };
    let demands = grid(h);
    let inventories = grid(h);
    let caps = (0..r).map(|_| Unit250(rng.random_range(0..=max_q))).collect();
    AllocationProblem::new(resources, caps, demands, inventories, compat).unwrap()
}

/// Case-study sized instance: four ABO resources, seven hubs.
pub fn desk_problem<R: Rng>(rng: &mut R, concor: bool) -> AllocationProblem {
    let resources = ResourceSet::abo();
    let compat = if concor { CompatibilityMatrix::concor1(&resources).unwrap() } else { CompatibilityMatrix::identity(4).unwrap() };
    let demands: Vec<Vec<Unit250>> = (0..7).map(|_| (0..4).map(|_| Unit250(rng.random_range(0..=12))).collect()).collect();
    let inventories: Vec<Vec<Unit250>> = (0..7).map(|_| (0..4).map(|_| Unit250(rng.random_range(0..=3))).collect()).collect();
    let caps = (0..4).map(|_| Unit250(rng.random_range(0..=50))).collect();
    AllocationProblem::new(resources, caps, demands, inventories, compat).unwrap()
}

/// Small random scenario with a matching simulation config. Presets, forecast
/// mode and perfect information are drawn as well.
pub fn random_scenario<R: Rng>(rng: &mut R) -> (Scenario, SimulationConfig) {
    let labels: Vec<&str> = if rng.random_bool(0.5) { vec!["A", "O", "B", "AB"] } else { vec!["O", "A"] };
    let resources = ResourceSet::new(&labels).unwrap();
    let r = labels.len();
    let h = rng.random_range(1..=4);
    let weeks = rng.random_range(4..=12);
    let max_s = rng.random_range(0..=8);
    let max_d = rng.random_range(0..=6);
    let supply = (0..weeks).map(|_| (0..r).map(|_| Unit250(rng.random_range(0..=max_s))).collect()).collect();
    let demand = (0..weeks)
        .map(|_| (0..h).map(|_| (0..r).map(|_| Unit250(rng.random_range(0..=max_d))).collect()).collect())
        .collect();
    let holiday_weeks = (1..=weeks).filter(|_| rng.random_bool(0.1)).collect();
    let scenario = Scenario {
        resources,
        hubs: (1..=h).map(|i| format!("hub{i}")).collect(),
        weeks,
        supply,
        demand,
        holiday_weeks,
        metadata: Default::default(),
    };
    let mut cfg = SimulationConfig::for_scenario(&scenario, CompatPreset::Identity, CompatPreset::Identity).unwrap();
    if rng.random_bool(0.5) {
        cfg.mip_compat = substitution(&scenario.resources);
    }
    if rng.random_bool(0.5) {
        cfg.fulfillment_compat = substitution(&scenario.resources);
    }
    cfg.horizon = rng.random_range(cfg.warmup..=weeks);
    cfg.perfect_information = rng.random_bool(0.3);
    if rng.random_bool(0.5) {
        cfg.mode = ForecastMode::AggregateDisaggregate;
    }
    (scenario, cfg)
}

/// Checks the per-week stock and ledger identities of one outcome. Returns a
/// description of the first violation.
pub fn conservation_violation(w: &WeekOutcome, cfg: &SimulationConfig) -> Option<String> {
    let r = w.actual_supply.len();
    let h = w.actual_demand.len();
    for k in 0..r {
        let shipped: u64 = (0..h).map(|hub| w.received[hub][k].0).sum();
        if let Some(plan) = &w.plan {
            let planned: u64 = plan.shipments.iter().flat_map(|g| g.iter().map(|row| row[k].0)).sum();
            if planned != shipped {
                return Some(format!("week {}: plan ships {planned} of {k}, hubs received {shipped}", w.week));
            }
        } else if shipped != 0 {
            return Some(format!("week {}: shipment without a plan", w.week));
        }
        if w.start.supplier_inventory[k].0 + w.actual_supply[k].0 != shipped + w.end.supplier_inventory[k].0 {
            return Some(format!("week {}: supplier stock of {k}", w.week));
        }
    }
    for hub in 0..h {
        for s in 0..r {
            let used: u64 = (0..r).map(|d| w.fulfilled[hub][d][s].0).sum();
            if w.start.hub_inventory[hub][s].0 + w.received[hub][s].0 != used + w.end.hub_inventory[hub][s].0 {
                return Some(format!("week {}: hub {hub} stock of {s}", w.week));
            }
        }
        for d in 0..r {
            let got: u64 = (0..r).map(|s| w.fulfilled[hub][d][s].0).sum();
            if w.start.unmet_ledger[hub][d].0 + w.actual_demand[hub][d].0 != got + w.end.unmet_ledger[hub][d].0 {
                return Some(format!("week {}: hub {hub} ledger of {d}", w.week));
            }
            for s in 0..r {
                if w.fulfilled[hub][d][s].0 > 0 && !cfg.fulfillment_compat.allows(d, s) {
                    return Some(format!("week {}: hub {hub} served {d} from {s}", w.week));
                }
            }
            if let Some(plan) = &w.plan {
                let sent: u64 = plan.shipments[hub][d].iter().map(|v| v.0).sum();
                if sent > w.demand_forecast[hub][d].0 + w.start.unmet_ledger[hub][d].0 {
                    return Some(format!("week {}: hub {hub} sent {sent} for {d}, above its demand input", w.week));
                }
            }
        }
    }
    None
}

/// CONCOR-1 substitutions restricted to the labels present.
pub fn substitution(resources: &ResourceSet) -> CompatibilityMatrix {
    CompatibilityMatrix::from_rules(resources, &CONCOR1_RULES).unwrap()
}
