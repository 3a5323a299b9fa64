//! CSV emitters for simulation output.

use std::io::Write;

use super::{SimulationReport, StreamTrace};
use crate::domain::Entity;
use crate::error::Result;
use crate::scenario::Scenario;

fn entity_label(scenario: &Scenario, entity: Entity) -> String {
    match entity {
        Entity::Supplier => "supplier".into(),
        Entity::Hub(h) => scenario.hubs[h].clone(),
    }
}

/// Writes `week,hub,resource,forecast,shipped,fulfilled,unmet,inventory`.
///
/// Hub rows: `forecast` is the forecast new demand, `shipped` the units of
/// that resource received, `fulfilled` the demand for that resource served
/// this week, `unmet` the carried ledger and `inventory` the hub stock, all
/// at the end of the week. Supplier rows (hub `supplier`) report forecast
/// new supply, units shipped out and remaining stock.
pub fn write_week_log_csv<W: Write>(scenario: &Scenario, report: &SimulationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["week", "hub", "resource", "forecast", "shipped", "fulfilled", "unmet", "inventory"])?;
    for wk in &report.weeks {
        for r in 0..scenario.num_resources() {
            let label = scenario.resources.label(r);
            w.write_record([
                wk.week.to_string(),
                "supplier".into(),
                label.into(),
                wk.supply_forecast[r].to_string(),
                wk.shipped_of(r).to_string(),
                String::new(),
                String::new(),
                wk.end.supplier_inventory[r].to_string(),
            ])?;
        }
        for h in 0..scenario.num_hubs() {
            for r in 0..scenario.num_resources() {
                w.write_record([
                    wk.week.to_string(),
                    scenario.hubs[h].clone(),
                    scenario.resources.label(r).into(),
                    wk.demand_forecast[h][r].to_string(),
                    wk.received[h][r].to_string(),
                    wk.fulfilled_demand(h, r).to_string(),
                    wk.end.unmet_ledger[h][r].to_string(),
                    wk.end.hub_inventory[h][r].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `week,entity,resource,actual_cumulative,forecast_cumulative`; the
/// forecast column holds the cumulative value implied by the increment the
/// allocator used and is empty in week 1.
pub fn write_plot_csv<W: Write>(scenario: &Scenario, traces: &[StreamTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["week", "entity", "resource", "actual_cumulative", "forecast_cumulative"])?;
    for t in traces {
        let entity = entity_label(scenario, t.entity);
        let resource = t.resource.map_or_else(|| "all".to_string(), |r| scenario.resources.label(r).to_string());
        for (i, actual) in t.actual_cumulative.iter().enumerate() {
            let week = i + 1;
            let forecast = t.steps.iter().find(|s| s.week().get() == week).map_or(String::new(), |s| s.implied_cumulative().to_string());
            w.write_record([week.to_string(), entity.clone(), resource.clone(), actual.to_string(), forecast])?;
        }
    }
    w.flush()?;
    Ok(())
}
