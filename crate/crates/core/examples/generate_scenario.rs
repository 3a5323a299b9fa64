//! Synthetic scenario with pinned per-group totals, written as JSON.

use epialloc::scenario::synthetic::{generate_synthetic, PinnedTotals, SyntheticParams};

fn main() -> epialloc::Result<()> {
    let params = SyntheticParams {
        pinned_totals: Some(PinnedTotals {
            supply: Some(vec![157.0, 84.5, 29.0, 26.0]),
            demand: Some(vec![131.5, 94.5, 34.5, 33.5]),
        }),
        holidays: [13, 14].into_iter().collect(),
        ..SyntheticParams::default()
    };
    let scenario = generate_synthetic(&params, 42)?;
    for r in 0..scenario.num_resources() {
        println!(
            "{:>2}: supply {:>6.1}  demand {:>6.1}",
            scenario.resources.label(r),
            scenario.supply_series(r).last() as f64 / 2.0,
            (0..scenario.num_hubs()).map(|h| scenario.demand_series(h, r).last()).sum::<i64>() as f64 / 2.0
        );
    }
    let out = std::env::temp_dir().join("epialloc_scenario.json");
    std::fs::write(&out, scenario.to_json_string()?)?;
    println!("wrote {}", out.display());
    Ok(())
}
