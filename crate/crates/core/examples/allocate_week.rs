//! Solves one weekly allocation, compares it with the brute-force oracle,
//! and shows how raising a cap moves the optimal ratio.

use std::path::Path;

use epialloc::allocate::{brute_force_solve, build_problem, solve_exact, AllocationProblem};
use epialloc::cli::describe_plan;
use epialloc::domain::{CompatibilityMatrix, Unit250};

fn main() -> epialloc::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/problem.json");
    let problem: AllocationProblem = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let model = build_problem(&problem)?;
    println!("{} variables, {} constraints", model.variable_count(), model.constraint_count());

    let plan = solve_exact(&problem)?;
    println!("{}", describe_plan(&problem, &plan));
    println!("lp solves {}, nodes {}", plan.stats.lp_solves, plan.stats.nodes);

    let small = AllocationProblem::from_counts(&[3], &[vec![2], vec![2]], &[vec![0], vec![0]], CompatibilityMatrix::identity(1)?)?;
    let oracle = brute_force_solve(&small)?;
    println!("\ntwo hubs, 3 units for 2 + 2: z* = {}, shipments {:?}", oracle.objective_exact, [oracle.shipments[0][0][0], oracle.shipments[1][0][0]]);

    for k in 0..problem.caps.len() {
        let mut more = problem.clone();
        more.caps[k] += Unit250(2);
        let z = solve_exact(&more)?.objective_exact;
        println!("cap {} + 2: z* {} -> {}", problem.resources.label(k), plan.objective_exact, z);
    }
    Ok(())
}
