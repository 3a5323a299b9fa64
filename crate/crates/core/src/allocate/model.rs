//! Epigraph linearisation of the min-max ratio objective.
//!
//! Variables: one integer `v ≥ 0` per compatible arc, plus a free scalar `z`.
//! Rows: a cap per supply resource, a demand bound per `(hub, resource)`, and
//! `z·D_h + S_h ≥ D_h − I_h` for every hub with positive total demand `D_h`,
//! where `S_h` is the total shipped to the hub and `I_h` its inventory.

use super::lp::{solve_mip, LinearProgram, MipOptions, MipOutcome, Sense, SolveStats};
use super::{AllocationPlan, AllocationProblem, Arc};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EpigraphModel {
    pub lp: LinearProgram,
    pub arcs: Vec<Arc>,
    /// Column of `z`; shipment columns come first in arc order.
    pub z: usize,
}

impl EpigraphModel {
    pub fn variable_count(&self) -> usize {
        self.lp.num_vars()
    }

    /// Explicit rows plus one non-negativity bound per shipment variable.
    pub fn constraint_count(&self) -> usize {
        self.lp.rows.len() + self.arcs.len()
    }

    /// Number of hubs that contribute a ratio row.
    pub fn ratio_rows(&self) -> usize {
        self.lp.rows.iter().filter(|r| r.coeffs.iter().any(|&(j, _)| j == self.z)).count()
    }
}

pub fn build_problem(problem: &AllocationProblem) -> Result<EpigraphModel> {
    problem.validate()?;
    let arcs = problem.arcs();
    let mut lp = LinearProgram::new();
    for _ in &arcs {
        lp.add_var(0.0, f64::INFINITY, true, 0.0);
    }
    let z = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, false, 1.0);

    for (s, cap) in problem.caps.iter().enumerate() {
        let coeffs = arcs.iter().enumerate().filter(|(_, a)| a.supply == s).map(|(j, _)| (j, 1.0)).collect();
        lp.add_row(coeffs, Sense::Le, cap.0 as f64);
    }
    for h in 0..problem.num_hubs() {
        for r in 0..problem.num_resources() {
            let coeffs = arcs.iter().enumerate().filter(|(_, a)| a.hub == h && a.demand == r).map(|(j, _)| (j, 1.0)).collect();
            lp.add_row(coeffs, Sense::Le, problem.demands[h][r].0 as f64);
        }
    }
    for h in 0..problem.num_hubs() {
        let d = problem.hub_demand(h);
        if d == 0 {
            continue;
        }
        let mut coeffs: Vec<(usize, f64)> = arcs.iter().enumerate().filter(|(_, a)| a.hub == h).map(|(j, _)| (j, 1.0)).collect();
        coeffs.push((z, d as f64));
        lp.add_row(coeffs, Sense::Ge, d as f64 - problem.hub_inventory(h) as f64);
    }
    Ok(EpigraphModel { lp, arcs, z })
}

/// Minimises `z` directly by branch and bound on the epigraph model.
///
/// Only the primary objective is optimised, so the returned shipments are
/// some optimal plan, not necessarily the tie-broken one.
pub fn solve_epigraph(problem: &AllocationProblem) -> Result<AllocationPlan> {
    let model = build_problem(problem)?;
    if model.ratio_rows() == 0 {
        let zeros = vec![0; model.arcs.len()];
        return Ok(AllocationPlan::from_arc_values(problem, &model.arcs, &zeros, SolveStats::default()));
    }
    let mut stats = SolveStats::default();
    match solve_mip(&model.lp, MipOptions::default(), &mut stats)? {
        MipOutcome::Optimal { x, .. } => {
            let values: Vec<u64> = x[..model.arcs.len()].iter().map(|v| v.round().max(0.0) as u64).collect();
            Ok(AllocationPlan::from_arc_values(problem, &model.arcs, &values, stats))
        }
        MipOutcome::Infeasible => Err(Error::Solver("epigraph model reported infeasible".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CompatibilityMatrix, ResourceSet, Unit250};

    #[test]
    fn case_study_shape() {
        let res = ResourceSet::abo();
        let p = AllocationProblem::new(
            res.clone(),
            vec![Unit250(5); 4],
            vec![vec![Unit250(2); 4]; 7],
            vec![vec![Unit250(0); 4]; 7],
            CompatibilityMatrix::concor1(&res).unwrap(),
        )
        .unwrap();
        let m = build_problem(&p).unwrap();
        assert_eq!(m.variable_count(), 43);
        assert_eq!(m.constraint_count(), 81);
    }

    #[test]
    fn zero_demand_has_no_ratio_rows() {
        let p = AllocationProblem::from_counts(&[3], &[vec![0], vec![0]], &[vec![0], vec![2]], CompatibilityMatrix::identity(1).unwrap()).unwrap();
        let m = build_problem(&p).unwrap();
        assert_eq!(m.ratio_rows(), 0);
        let plan = solve_epigraph(&p).unwrap();
        assert_eq!(plan.objective, 0.0);
        assert_eq!(plan.total_shipped, Unit250(0));
    }

    #[test]
    fn single_variable() {
        let p = AllocationProblem::from_counts(&[2], &[vec![4]], &[vec![1]], CompatibilityMatrix::identity(1).unwrap()).unwrap();
        let plan = solve_epigraph(&p).unwrap();
        assert_eq!(plan.shipments[0][0][0], Unit250(2));
        assert!((plan.objective - 0.25).abs() < 1e-12);
    }
}
