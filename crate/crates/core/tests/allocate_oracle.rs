mod common;

use std::time::Instant;

use epialloc::allocate::{brute_force_solve, solve_epigraph, solve_exact};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn exact_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..600 {
        let p = common::random_problem(&mut rng, 2, 3, 4, i % 2 == 1);
        let exact = solve_exact(&p).unwrap();
        let brute = brute_force_solve(&p).unwrap();
        assert!(exact.same_solution(&brute), "instance {i}: {p:?}\nexact {exact:?}\nbrute {brute:?}");
        p.check_shipments(&exact.shipments).unwrap();
    }
}

#[test]
fn epigraph_branch_and_bound_agrees_on_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..300 {
        let p = common::random_problem(&mut rng, 3, 3, 6, i % 2 == 0);
        let a = solve_exact(&p).unwrap();
        let b = solve_epigraph(&p).unwrap();
        assert_eq!(a.objective_exact, b.objective_exact, "instance {i}: {p:?}");
    }
}

#[test]
fn desk_scale_solves_are_fast() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = Instant::now();
    let n = 200;
    for i in 0..n {
        let p = common::desk_problem(&mut rng, i % 2 == 0);
        let plan = solve_exact(&p).unwrap();
        p.check_shipments(&plan.shipments).unwrap();
    }
    let per = start.elapsed().as_secs_f64() / n as f64;
    eprintln!("mean desk-scale solve: {:.2} ms", per * 1e3);
    assert!(per < 0.05, "mean solve time {per:.4}s");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn raising_a_cap_never_raises_the_ratio(seed in any::<u64>(), which in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_problem(&mut rng, 4, 3, 5, seed % 2 == 0);
        let base = solve_exact(&p).unwrap();
        let mut q = p.clone();
        let s = which % q.caps.len();
        q.caps[s].0 += 1;
        let raised = solve_exact(&q).unwrap();
        prop_assert!(raised.objective_exact <= base.objective_exact);
    }

    #[test]
    fn plans_respect_constraints(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_problem(&mut rng, 4, 4, 8, seed % 3 == 0);
        let plan = solve_exact(&p).unwrap();
        prop_assert!(p.check_shipments(&plan.shipments).is_ok());
        let shipped: u64 = (0..p.num_resources()).map(|s| plan.shipped_of(s)).sum();
        prop_assert_eq!(shipped, plan.total_shipped.0);
    }

    #[test]
    fn scaling_keeps_the_plan_feasible_and_never_hurts(seed in any::<u64>(), k in 2u64..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_problem(&mut rng, 2, 3, 4, seed % 2 == 0);
        let base = solve_exact(&p).unwrap();
        let mut q = p.clone();
        for c in q.caps.iter_mut() { c.0 *= k; }
        for row in q.demands.iter_mut().chain(q.inventories.iter_mut()) {
            for v in row.iter_mut() { v.0 *= k; }
        }
        let scaled = solve_exact(&q).unwrap();
        prop_assert!(scaled.objective_exact <= base.objective_exact);
        let mut grid = base.shipments.clone();
        for g in grid.iter_mut() { for row in g.iter_mut() { for v in row.iter_mut() { v.0 *= k; } } }
        prop_assert!(q.check_shipments(&grid).is_ok());
    }
}
