//! Reads supplier stock snapshots and hub unit records and aggregates them
//! into weekly flows.

use std::path::Path;

use chrono::NaiveDate;
use epialloc::scenario::ingest::{build_weekly, load_csv};

fn main() -> epialloc::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let (supply, units) = load_csv(&data.join("supplier_stock.csv"), &data.join("hub_units.csv"))?;
    println!("{} stock snapshots, {} units ({} thawed/broken)", supply.len(), units.len(), units.iter().filter(|u| u.thawed_broken).count());

    let anchor = NaiveDate::from_ymd_opt(2020, 9, 7).unwrap();
    let scenario = build_weekly(&supply, &units, anchor)?;
    println!("hubs {:?}", scenario.hubs);
    println!("week  supply (A O B AB)  demand");
    for w in 0..scenario.weeks {
        let demand: u64 = scenario.demand[w].iter().flatten().map(|u| u.0).sum();
        println!("{:>4}  {:<18} {demand:>6}", w + 1, format!("{:?}", scenario.supply[w].iter().map(|u| u.0).collect::<Vec<_>>()));
    }
    Ok(())
}
