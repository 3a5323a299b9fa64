//! Exhaustive enumeration over integer shipment grids, used as a test oracle.

use super::{score, AllocationPlan, AllocationProblem, Arc, PlanScore, SolveStats};
use crate::error::{Error, Result};

/// Upper bound on `Π (ub + 1)` over arcs before enumeration is refused.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

struct Search<'a> {
    problem: &'a AllocationProblem,
    arcs: &'a [Arc],
    bounds: Vec<u64>,
    cap_left: Vec<u64>,
    demand_left: Vec<Vec<u64>>,
    current: Vec<u64>,
    best: Option<(PlanScore, Vec<u64>)>,
    leaves: u64,
}

impl Search<'_> {
    fn visit(&mut self, k: usize) {
        if k == self.arcs.len() {
            self.leaves += 1;
            let s = score(self.problem, self.arcs, &self.current);
            let better = match &self.best {
                None => true,
                Some((b, _)) => (s.ratio, s.residual_unmet) < (b.ratio, b.residual_unmet),
            };
            if better {
                self.best = Some((s, self.current.clone()));
            }
            return;
        }
        let a = self.arcs[k];
        let top = self.bounds[k].min(self.cap_left[a.supply]).min(self.demand_left[a.hub][a.demand]);
        // Descending values: the first plan reaching a score is the
        // lexicographically largest one.
        for v in (0..=top).rev() {
            self.current[k] = v;
            self.cap_left[a.supply] -= v;
            self.demand_left[a.hub][a.demand] -= v;
            self.visit(k + 1);
            self.cap_left[a.supply] += v;
            self.demand_left[a.hub][a.demand] += v;
        }
        self.current[k] = 0;
    }
}

/// Enumerates every feasible integer plan and returns the best one under the
/// same ordering as [`super::solve_exact`].
pub fn brute_force_solve(problem: &AllocationProblem) -> Result<AllocationPlan> {
    problem.validate()?;
    let arcs = problem.arcs();
    let bounds: Vec<u64> = arcs.iter().map(|&a| problem.arc_bound(a)).collect();
    let states = bounds.iter().try_fold(1u128, |acc, &b| acc.checked_mul(b as u128 + 1)).unwrap_or(u128::MAX);
    if states > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge { states, limit: BRUTE_FORCE_LIMIT });
    }
    let mut search = Search {
        problem,
        arcs: &arcs,
        bounds,
        cap_left: problem.caps.iter().map(|c| c.0).collect(),
        demand_left: problem.demands.iter().map(|row| row.iter().map(|d| d.0).collect()).collect(),
        current: vec![0; arcs.len()],
        best: None,
        leaves: 0,
    };
    search.visit(0);
    let leaves = search.leaves;
    let (_, values) = search.best.expect("the zero plan is always feasible");
    let stats = SolveStats { nodes: leaves, ..Default::default() };
    Ok(AllocationPlan::from_arc_values(problem, &arcs, &values, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CompatibilityMatrix, ResourceSet, Unit250};
    use num_rational::Rational64;

    #[test]
    fn two_hubs_share_three_units() {
        let p = AllocationProblem::from_counts(&[3], &[vec![2], vec![2]], &[vec![0], vec![0]], CompatibilityMatrix::identity(1).unwrap()).unwrap();
        let plan = brute_force_solve(&p).unwrap();
        assert_eq!(plan.objective_exact, Rational64::new(1, 2));
        assert_eq!(plan.shipments[0][0][0], Unit250(2));
        assert_eq!(plan.shipments[1][0][0], Unit250(1));
    }

    #[test]
    fn zero_demand() {
        let p = AllocationProblem::from_counts(&[3, 1], &[vec![0, 0]], &[vec![1, 0]], CompatibilityMatrix::identity(2).unwrap()).unwrap();
        let plan = brute_force_solve(&p).unwrap();
        assert_eq!(plan.objective, 0.0);
        assert_eq!(plan.total_shipped, Unit250(0));
    }

    #[test]
    fn case_study_shape_is_refused() {
        let res = ResourceSet::abo();
        let p = AllocationProblem::new(
            res.clone(),
            vec![Unit250(20); 4],
            vec![vec![Unit250(10); 4]; 7],
            vec![vec![Unit250(0); 4]; 7],
            CompatibilityMatrix::concor1(&res).unwrap(),
        )
        .unwrap();
        assert!(matches!(brute_force_solve(&p), Err(Error::SearchSpaceTooLarge { .. })));
    }
}
