mod common;

use common::maxflow;
use epialloc::domain::{CompatPreset, Unit250};
use epialloc::scenario::Scenario;
use epialloc::simulate::{run_horizon, run_monte_carlo, ForecastMode, SimulationConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn totals(s: &Scenario, horizon: usize) -> (Vec<i64>, Vec<i64>) {
    let r = s.num_resources();
    let mut supply = vec![0i64; r];
    let mut demand = vec![0i64; r];
    for w in 0..horizon {
        for k in 0..r {
            supply[k] += s.supply[w][k].0 as i64;
            for hub in &s.demand[w] {
                demand[k] += hub[k].0 as i64;
            }
        }
    }
    (supply, demand)
}

#[test]
fn every_week_conserves_stock_and_ledgers() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..60 {
        let (s, cfg) = common::random_scenario(&mut rng);
        let report = run_horizon(&s, &cfg, i).unwrap();
        assert_eq!(report.weeks.len(), cfg.horizon);
        for w in &report.weeks {
            assert_eq!(w.allocated, w.week >= cfg.warmup);
            if let Some(v) = common::conservation_violation(w, &cfg) {
                panic!("scenario {i}: {v}");
            }
        }
    }
}

#[test]
fn perfect_identity_leaves_exactly_the_aggregate_shortage() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..40 {
        let (s, mut cfg) = common::random_scenario(&mut rng);
        cfg.mip_compat = CompatPreset::Identity.build(&s.resources).unwrap();
        cfg.fulfillment_compat = cfg.mip_compat.clone();
        cfg.perfect_information = true;
        cfg.warmup = 1;
        let report = run_horizon(&s, &cfg, 0).unwrap();
        let (supply, demand) = totals(&s, cfg.horizon);
        let expected: Vec<u64> = supply.iter().zip(&demand).map(|(s, d)| (d - s).max(0) as u64).collect();
        let got: Vec<u64> = report.final_unmet_by_resource().iter().map(|u| u.0).collect();
        assert_eq!(got, expected, "scenario {i}");
        let stranded: u64 = report.weeks.last().unwrap().end.hub_inventory.iter().flatten().map(|u| u.0).sum();
        assert_eq!(stranded, 0, "scenario {i}");
    }
}

#[test]
fn perfect_substitution_respects_flow_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..40 {
        let (s, mut cfg) = common::random_scenario(&mut rng);
        cfg.mip_compat = common::substitution(&s.resources);
        cfg.fulfillment_compat = cfg.mip_compat.clone();
        cfg.perfect_information = true;
        cfg.warmup = 1;
        let report = run_horizon(&s, &cfg, 0).unwrap();
        let (supply, demand) = totals(&s, cfg.horizon);
        let labels = s.resources.labels();
        let idx = |l: &str| labels.iter().position(|x| x == l);
        let mut edges: Vec<(usize, usize)> = (0..labels.len()).map(|k| (k, k)).collect();
        for (d, sup) in [("O", "A"), ("B", "AB")] {
            if let (Some(d), Some(sup)) = (idx(d), idx(sup)) {
                edges.push((d, sup));
            }
        }
        let lower = maxflow::shortage(&supply, &demand, &edges);
        let total = report.total_unmet().0 as i64;
        assert!(lower <= total, "scenario {i}: {lower} <= {total}");
    }
}

// Week 1 spends A on O demand, week 2 brings A demand, week 3 only O supply.
#[test]
fn myopic_substitution_can_lose_to_identity() {
    let u = |v: u64| Unit250(v);
    let s = Scenario {
        resources: epialloc::domain::ResourceSet::new(&["O", "A"]).unwrap(),
        hubs: vec!["hub1".into()],
        weeks: 3,
        supply: vec![vec![u(0), u(1)], vec![u(0), u(0)], vec![u(1), u(0)]],
        demand: vec![vec![vec![u(1), u(0)]], vec![vec![u(0), u(1)]], vec![vec![u(0), u(0)]]],
        holiday_weeks: Default::default(),
        metadata: Default::default(),
    };
    let mut cfg = SimulationConfig::for_scenario(&s, CompatPreset::Identity, CompatPreset::Identity).unwrap();
    cfg.perfect_information = true;
    cfg.warmup = 1;
    assert_eq!(run_horizon(&s, &cfg, 0).unwrap().total_unmet(), u(0));
    cfg.mip_compat = common::substitution(&s.resources);
    cfg.fulfillment_compat = cfg.mip_compat.clone();
    assert_eq!(run_horizon(&s, &cfg, 0).unwrap().total_unmet(), u(1));
}

fn desk_scenario() -> (Scenario, SimulationConfig) {
    let params = epialloc::scenario::synthetic::SyntheticParams::default();
    let s = epialloc::scenario::synthetic::generate_synthetic(&params, 17).unwrap();
    let cfg = SimulationConfig::for_scenario(&s, CompatPreset::Concor1, CompatPreset::Concor1).unwrap();
    (s, cfg)
}

#[test]
fn monte_carlo_is_independent_of_worker_count() {
    let (s, mut cfg) = desk_scenario();
    cfg.mode = ForecastMode::AggregateDisaggregate;
    cfg.runs = 12;
    cfg.master_seed = 99;
    cfg.workers = 1;
    let a = run_monte_carlo(&s, &cfg).unwrap();
    cfg.workers = 3;
    let b = run_monte_carlo(&s, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.per_run_unmet.windows(2).any(|w| w[0] != w[1]), "disaggregation should vary across runs");
}

#[test]
fn deterministic_runs_have_zero_spread() {
    let (s, mut cfg) = desk_scenario();
    cfg.perfect_information = true;
    cfg.runs = 4;
    let rep = run_monte_carlo(&s, &cfg).unwrap();
    assert!(rep.fairness.hubs.iter().all(|h| h.se_unmet == 0.0 && h.se_ratio_pct == 0.0));
    cfg.runs = 1;
    cfg.mode = ForecastMode::AggregateDisaggregate;
    let one = run_monte_carlo(&s, &cfg).unwrap();
    let single = run_horizon(&s, &cfg, cfg.master_seed).unwrap();
    for (h, f) in one.fairness.hubs.iter().enumerate() {
        assert_eq!(f.se_unmet, 0.0);
        assert_eq!(f.mean_unmet, single.final_unmet_by_hub()[h].doses_500ml());
    }
}

#[test]
fn zero_runs_is_rejected() {
    let (s, mut cfg) = desk_scenario();
    cfg.runs = 0;
    assert!(run_monte_carlo(&s, &cfg).is_err());
    assert_eq!(Unit250::from_doses_500ml(0.5).unwrap(), Unit250(1));
}
