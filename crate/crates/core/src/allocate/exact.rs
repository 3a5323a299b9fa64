//! Exact staged solver.
//!
//! The optimal ratio is one of the finitely many values
//! `(D_h − I_h − k) / D_h`, `0 ≤ k ≤ D_h`, so the primary stage searches that
//! sorted candidate set for the smallest value whose hub-wise shipment lower
//! bounds admit an integer plan. Feasibility, the secondary objective and each
//! lexicographic tie-break step are integer programs solved by branch and
//! bound over the bounded-variable simplex.

use num_rational::Rational64;

use super::lp::{solve_lp, solve_mip, LinearProgram, LpOutcome, MipOptions, MipOutcome, Sense, SolveStats};
use super::model::build_problem;
use super::{AllocationPlan, AllocationProblem, Arc};
use crate::error::{Error, Result};

struct Base {
    arcs: Vec<Arc>,
    /// Arc index for each LP column.
    live: Vec<usize>,
    lp: LinearProgram,
}

fn base_program(problem: &AllocationProblem) -> Base {
    let arcs = problem.arcs();
    let live: Vec<usize> = (0..arcs.len()).filter(|&k| problem.arc_bound(arcs[k]) > 0).collect();
    let mut lp = LinearProgram::new();
    for &k in &live {
        lp.add_var(0.0, problem.arc_bound(arcs[k]) as f64, true, 0.0);
    }
    // Only rows that can bind.
    for (s, cap) in problem.caps.iter().enumerate() {
        let cols: Vec<usize> = (0..live.len()).filter(|&j| arcs[live[j]].supply == s).collect();
        let reach: u64 = cols.iter().map(|&j| problem.arc_bound(arcs[live[j]])).sum();
        if reach > cap.0 {
            lp.add_row(cols.iter().map(|&j| (j, 1.0)).collect(), Sense::Le, cap.0 as f64);
        }
    }
    for h in 0..problem.num_hubs() {
        for r in 0..problem.num_resources() {
            let cols: Vec<usize> = (0..live.len()).filter(|&j| arcs[live[j]].hub == h && arcs[live[j]].demand == r).collect();
            let reach: u64 = cols.iter().map(|&j| problem.arc_bound(arcs[live[j]])).sum();
            if reach > problem.demands[h][r].0 {
                lp.add_row(cols.iter().map(|&j| (j, 1.0)).collect(), Sense::Le, problem.demands[h][r].0 as f64);
            }
        }
    }
    Base { arcs, live, lp }
}

/// `ceil(a / b)` for `b > 0`.
fn div_ceil(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && a > 0 {
        q + 1
    } else {
        q
    }
}

/// Minimum total shipment each hub needs for its ratio to be at most `z`.
fn hub_lower_bounds(problem: &AllocationProblem, z: Rational64) -> Vec<i128> {
    let p = *z.numer() as i128;
    let q = *z.denom() as i128;
    (0..problem.num_hubs())
        .map(|h| {
            let d = problem.hub_demand(h) as i128;
            if d == 0 {
                return 0;
            }
            let i = problem.hub_inventory(h) as i128;
            div_ceil(q * (d - i) - p * d, q).max(0)
        })
        .collect()
}

fn add_hub_rows(base: &Base, lp: &mut LinearProgram, lower: &[i128]) {
    for (h, &l) in lower.iter().enumerate() {
        if l > 0 {
            let coeffs = (0..base.live.len()).filter(|&j| base.arcs[base.live[j]].hub == h).map(|j| (j, 1.0)).collect();
            lp.add_row(coeffs, Sense::Ge, l as f64);
        }
    }
}

fn mip(lp: &LinearProgram, stats: &mut SolveStats) -> Result<Option<Vec<f64>>> {
    match solve_mip(lp, MipOptions { integral_objective: true, ..Default::default() }, stats)? {
        MipOutcome::Optimal { x, .. } => Ok(Some(x)),
        MipOutcome::Infeasible => Ok(None),
    }
}

/// Integer plan meeting the hub lower bounds for ratio `z`, if one exists.
fn feasible_at(problem: &AllocationProblem, base: &Base, z: Rational64, stats: &mut SolveStats) -> Result<Option<Vec<f64>>> {
    let lower = hub_lower_bounds(problem, z);
    for (h, &l) in lower.iter().enumerate() {
        let reach: u64 = base.live.iter().filter(|&&k| base.arcs[k].hub == h).map(|&k| problem.arc_bound(base.arcs[k])).sum();
        if l > reach as i128 {
            return Ok(None);
        }
    }
    let mut lp = base.lp.clone();
    add_hub_rows(base, &mut lp, &lower);
    mip(&lp, stats)
}

fn candidate_ratios(problem: &AllocationProblem) -> Vec<Rational64> {
    let mut out = Vec::new();
    for h in 0..problem.num_hubs() {
        let d = problem.hub_demand(h) as i64;
        if d == 0 {
            continue;
        }
        let i = problem.hub_inventory(h) as i64;
        for k in 0..=d {
            out.push(Rational64::new(d - i - k, d));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Solves the allocation problem exactly under the three-level objective:
/// minimal max ratio, then minimal residual unmet demand, then
/// lexicographically largest shipments in arc order.
pub fn solve_exact(problem: &AllocationProblem) -> Result<AllocationPlan> {
    problem.validate()?;
    let mut stats = SolveStats::default();
    let base = base_program(problem);
    let n = base.live.len();

    let candidates = candidate_ratios(problem);
    if candidates.is_empty() || n == 0 {
        let zeros = vec![0; base.arcs.len()];
        return Ok(AllocationPlan::from_arc_values(problem, &base.arcs, &zeros, stats));
    }

    // Primary stage. The LP relaxation bounds the answer from below; the
    // feasible candidates form an upper set, so binary search the rest.
    let relaxed = {
        let model = build_problem(problem)?;
        match solve_lp(&model.lp, &model.lp.lower, &model.lp.upper, &mut stats)? {
            LpOutcome::Optimal { objective, .. } => objective,
            _ => return Err(Error::Solver("ratio relaxation failed".into())),
        }
    };
    let last = candidates.len() - 1;
    let start = candidates.partition_point(|c| (*c.numer() as f64 / *c.denom() as f64) < relaxed - 1e-9).min(last);
    let star = if feasible_at(problem, &base, candidates[start], &mut stats)?.is_some() {
        start
    } else {
        // The largest candidate is the ratio of the empty plan, always feasible.
        let (mut lo, mut hi) = (start + 1, last);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if feasible_at(problem, &base, candidates[mid], &mut stats)?.is_some() {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    };
    let z_star = candidates[star];
    let lower = hub_lower_bounds(problem, z_star);

    // Secondary stage: maximise Σ y with y_{hr} ≤ min(e_{hr}, shipped_{hr}).
    let mut lp = base.lp.clone();
    add_hub_rows(&base, &mut lp, &lower);
    let mut y_cols = Vec::new();
    for h in 0..problem.num_hubs() {
        for r in 0..problem.num_resources() {
            let e = problem.uncovered(h, r);
            let cols: Vec<usize> = (0..n).filter(|&j| base.arcs[base.live[j]].hub == h && base.arcs[base.live[j]].demand == r).collect();
            if e == 0 || cols.is_empty() {
                continue;
            }
            let y = lp.add_var(0.0, e as f64, false, -1.0);
            let mut coeffs: Vec<(usize, f64)> = cols.iter().map(|&j| (j, -1.0)).collect();
            coeffs.push((y, 1.0));
            lp.add_row(coeffs, Sense::Le, 0.0);
            y_cols.push(y);
        }
    }
    let mut x = mip(&lp, &mut stats)?.ok_or_else(|| Error::Solver("secondary stage infeasible".into()))?;
    let covered: f64 = y_cols.iter().map(|&c| x[c]).sum::<f64>().round();
    if !y_cols.is_empty() && covered > 0.0 {
        lp.add_row(y_cols.iter().map(|&c| (c, 1.0)).collect(), Sense::Ge, covered);
    }
    for c in lp.cost.iter_mut() {
        *c = 0.0;
    }

    // Tie-break stage: fix arcs one at a time at their largest value.
    let mut cap_left: Vec<u64> = problem.caps.iter().map(|c| c.0).collect();
    let mut demand_left: Vec<Vec<u64>> = problem.demands.iter().map(|row| row.iter().map(|d| d.0).collect()).collect();
    let mut values = vec![0u64; base.arcs.len()];
    for j in 0..n {
        let a = base.arcs[base.live[j]];
        let bound = problem.arc_bound(a).min(cap_left[a.supply]).min(demand_left[a.hub][a.demand]);
        let mut v = x[j].round() as u64;
        if v < bound {
            lp.cost[j] = -1.0;
            x = mip(&lp, &mut stats)?.ok_or_else(|| Error::Solver("tie-break stage infeasible".into()))?;
            lp.cost[j] = 0.0;
            v = x[j].round() as u64;
        }
        lp.lower[j] = v as f64;
        lp.upper[j] = v as f64;
        cap_left[a.supply] -= v;
        demand_left[a.hub][a.demand] -= v;
        values[base.live[j]] = v;
    }

    let plan = AllocationPlan::from_arc_values(problem, &base.arcs, &values, stats);
    if plan.objective_exact != z_star {
        return Err(Error::Solver(format!("final plan ratio {} differs from optimum {z_star}", plan.objective_exact)));
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CompatibilityMatrix, ResourceSet, Unit250};

    fn identity(r: usize) -> CompatibilityMatrix {
        CompatibilityMatrix::identity(r).unwrap()
    }

    #[test]
    fn single_variable() {
        let p = AllocationProblem::from_counts(&[2], &[vec![4]], &[vec![1]], identity(1)).unwrap();
        let plan = solve_exact(&p).unwrap();
        assert_eq!(plan.shipments[0][0][0], Unit250(2));
        assert_eq!(plan.objective_exact, Rational64::new(1, 4));
    }

    #[test]
    fn two_hubs_tie_break() {
        let p = AllocationProblem::from_counts(&[3], &[vec![2], vec![2]], &[vec![0], vec![0]], identity(1)).unwrap();
        let plan = solve_exact(&p).unwrap();
        assert_eq!(plan.objective, 0.5);
        assert_eq!((plan.shipments[0][0][0], plan.shipments[1][0][0]), (Unit250(2), Unit250(1)));
    }

    #[test]
    fn abundant_supply() {
        let p = AllocationProblem::from_counts(&[9, 9], &[vec![3, 4], vec![5, 2]], &[vec![0, 0], vec![0, 0]], identity(2)).unwrap();
        let plan = solve_exact(&p).unwrap();
        assert_eq!(plan.objective, 0.0);
        assert_eq!(plan.total_shipped, Unit250(14));
    }

    #[test]
    fn o_shortage_covered_by_a() {
        let res = ResourceSet::abo();
        let o = res.index_of("O").unwrap();
        let a = res.index_of("A").unwrap();
        let mut caps = vec![Unit250(0); 4];
        caps[a] = Unit250(4);
        let mut demand = vec![Unit250(0); 4];
        demand[o] = Unit250(4);
        let p = AllocationProblem::new(res.clone(), caps, vec![demand], vec![vec![Unit250(0); 4]], CompatibilityMatrix::concor1(&res).unwrap()).unwrap();
        let plan = solve_exact(&p).unwrap();
        assert_eq!(plan.shipments[0][o][a], Unit250(4));
        assert_eq!(plan.objective, 0.0);
    }

    #[test]
    fn negative_ratio_when_inventory_exceeds_demand() {
        let p = AllocationProblem::from_counts(&[5], &[vec![2], vec![4]], &[vec![6], vec![0]], identity(1)).unwrap();
        let plan = solve_exact(&p).unwrap();
        // Hub 2 is fully served; hub 1 sits at (2 - 6)/2 = -2 regardless.
        assert_eq!(plan.objective_exact, Rational64::from_integer(0));
        assert_eq!(plan.shipments[1][0][0], Unit250(4));
    }

    #[test]
    fn zero_demand() {
        let p = AllocationProblem::from_counts(&[3], &[vec![0]], &[vec![0]], identity(1)).unwrap();
        let plan = solve_exact(&p).unwrap();
        assert_eq!(plan.objective, 0.0);
        assert_eq!(plan.total_shipped, Unit250(0));
    }
}
