//! Weekly min-max allocation of capped supply across hubs.
//!
//! A problem lists per-resource supply caps, per-hub forecast demand and
//! per-hub inventory. A plan ships integer units along compatible arcs
//! `(hub, demand resource, supply resource)` so that the largest
//! unmet-demand ratio over hubs with positive demand is minimal.
//!
//! Ties are resolved in two further stages: first the total residual unmet
//! demand `Σ max(0, d̂ − shipped − inventory)` is minimised, then shipments
//! are maximised lexicographically in arc order. [`solve_exact`] and
//! [`brute_force_solve`] implement the same rule and must agree exactly.

pub mod brute;
pub mod exact;
pub mod lp;
pub mod model;

use std::io::Write;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

pub use brute::{brute_force_solve, BRUTE_FORCE_LIMIT};
pub use exact::solve_exact;
pub use lp::SolveStats;
pub use model::{build_problem, solve_epigraph, EpigraphModel};

use crate::domain::{CompatibilityMatrix, ResourceSet, Unit250};
use crate::error::{Error, Result};

/// Effective allocatable supply: never more than what actually arrived.
pub fn cap_supply(forecast: Unit250, actual: Unit250) -> Unit250 {
    forecast.min(actual)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplyCap {
    pub forecast: Unit250,
    pub actual: Unit250,
    pub effective: Unit250,
}

impl SupplyCap {
    pub fn new(forecast: Unit250, actual: Unit250) -> Self {
        Self { forecast, actual, effective: cap_supply(forecast, actual) }
    }
}

/// One shipment variable: units of `supply` sent to `hub` against demand for `demand`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub hub: usize,
    pub demand: usize,
    pub supply: usize,
}

/// Weekly allocation instance. `demands` and `inventories` are indexed
/// `[hub][resource]`; `caps` by supply resource.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationProblem {
    pub resources: ResourceSet,
    pub hubs: Vec<String>,
    pub caps: Vec<Unit250>,
    pub demands: Vec<Vec<Unit250>>,
    pub inventories: Vec<Vec<Unit250>>,
    pub compat: CompatibilityMatrix,
}

impl AllocationProblem {
    /// Builds a problem with generated hub names `hub1..hubH`.
    pub fn new(
        resources: ResourceSet,
        caps: Vec<Unit250>,
        demands: Vec<Vec<Unit250>>,
        inventories: Vec<Vec<Unit250>>,
        compat: CompatibilityMatrix,
    ) -> Result<Self> {
        let hubs = (1..=demands.len()).map(|h| format!("hub{h}")).collect();
        let p = Self { resources, hubs, caps, demands, inventories, compat };
        p.validate()?;
        Ok(p)
    }

    /// Convenience constructor from raw counts with ABO-free labels `r0..`.
    pub fn from_counts(caps: &[u64], demands: &[Vec<u64>], inventories: &[Vec<u64>], compat: CompatibilityMatrix) -> Result<Self> {
        let labels: Vec<String> = (0..caps.len()).map(|r| format!("r{r}")).collect();
        let resources = ResourceSet::new(&labels)?;
        let wrap = |m: &[Vec<u64>]| m.iter().map(|row| row.iter().map(|&v| Unit250(v)).collect()).collect();
        Self::new(resources, caps.iter().map(|&c| Unit250(c)).collect(), wrap(demands), wrap(inventories), compat)
    }

    pub fn num_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn num_hubs(&self) -> usize {
        self.demands.len()
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.resources.len();
        let h = self.demands.len();
        if self.caps.len() != r {
            return Err(Error::InvalidDimension(format!("{} caps for {r} resources", self.caps.len())));
        }
        if self.compat.size() != r {
            return Err(Error::InvalidDimension(format!("compatibility matrix is {0}x{0} for {r} resources", self.compat.size())));
        }
        if self.hubs.len() != h {
            return Err(Error::InvalidDimension(format!("{} hub names for {h} demand rows", self.hubs.len())));
        }
        if self.inventories.len() != h {
            return Err(Error::InvalidDimension(format!("{} inventory rows for {h} hubs", self.inventories.len())));
        }
        for (hub, (d, i)) in self.demands.iter().zip(&self.inventories).enumerate() {
            if d.len() != r || i.len() != r {
                return Err(Error::InvalidDimension(format!("hub {hub}: expected {r} resources")));
            }
        }
        Ok(())
    }

    /// Compatible arcs in canonical order: by hub, then demand resource,
    /// then the exact-match arc followed by substitutes by supply index.
    /// Tie-breaking prefers larger shipments on earlier arcs.
    pub fn arcs(&self) -> Vec<Arc> {
        let r = self.num_resources();
        let mut arcs = Vec::new();
        for hub in 0..self.num_hubs() {
            for demand in 0..r {
                arcs.push(Arc { hub, demand, supply: demand });
                for supply in (0..r).filter(|&s| s != demand) {
                    if self.compat.allows(demand, supply) {
                        arcs.push(Arc { hub, demand, supply });
                    }
                }
            }
        }
        arcs
    }

    /// Largest value an arc can take on its own: `min(d̂, cap)`.
    pub fn arc_bound(&self, arc: Arc) -> u64 {
        self.demands[arc.hub][arc.demand].0.min(self.caps[arc.supply].0)
    }

    pub fn hub_demand(&self, hub: usize) -> u64 {
        self.demands[hub].iter().map(|u| u.0).sum()
    }

    pub fn hub_inventory(&self, hub: usize) -> u64 {
        self.inventories[hub].iter().map(|u| u.0).sum()
    }

    /// Residual demand `max(0, d̂ − i)` that shipments can still cover.
    pub fn uncovered(&self, hub: usize, resource: usize) -> u64 {
        self.demands[hub][resource].0.saturating_sub(self.inventories[hub][resource].0)
    }

    /// Checks capacity, demand bounds and compatibility for a shipment grid.
    pub fn check_shipments(&self, shipments: &[Vec<Vec<Unit250>>]) -> Result<()> {
        let r = self.num_resources();
        if shipments.len() != self.num_hubs() || shipments.iter().any(|g| g.len() != r || g.iter().any(|row| row.len() != r)) {
            return Err(Error::InvalidDimension("shipment grid shape".into()));
        }
        let mut used = vec![0u64; r];
        for (h, grid) in shipments.iter().enumerate() {
            for (d, row) in grid.iter().enumerate() {
                let mut to_demand = 0;
                for (s, v) in row.iter().enumerate() {
                    if v.0 > 0 && !self.compat.allows(d, s) {
                        return Err(Error::Infeasible(format!("hub {h}: {d}<-{s} is not compatible")));
                    }
                    to_demand += v.0;
                    used[s] += v.0;
                }
                if to_demand > self.demands[h][d].0 {
                    return Err(Error::Infeasible(format!("hub {h}: {to_demand} shipped against demand {}", self.demands[h][d].0)));
                }
            }
        }
        for (s, (&u, c)) in used.iter().zip(&self.caps).enumerate() {
            if u > c.0 {
                return Err(Error::Infeasible(format!("resource {s}: {u} shipped over cap {}", c.0)));
            }
        }
        Ok(())
    }
}

/// Value of a shipment plan under the three-level objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanScore {
    /// Largest unmet-demand ratio; zero when no hub has demand.
    pub ratio: Rational64,
    /// `Σ max(0, d̂ − shipped − i)` over hubs and resources.
    pub residual_unmet: u64,
}

/// Scores per-arc shipment values (in [`AllocationProblem::arcs`] order).
pub fn score(problem: &AllocationProblem, arcs: &[Arc], values: &[u64]) -> PlanScore {
    let h = problem.num_hubs();
    let r = problem.num_resources();
    let mut shipped = vec![vec![0u64; r]; h];
    for (a, &v) in arcs.iter().zip(values) {
        shipped[a.hub][a.demand] += v;
    }
    let mut ratio: Option<Rational64> = None;
    let mut residual_unmet = 0;
    for hub in 0..h {
        let total_demand = problem.hub_demand(hub) as i64;
        let mut numer = 0i64;
        for res in 0..r {
            let d = problem.demands[hub][res].0;
            let i = problem.inventories[hub][res].0;
            let s = shipped[hub][res];
            numer += d as i64 - s as i64 - i as i64;
            residual_unmet += d.saturating_sub(s + i);
        }
        if total_demand > 0 {
            let q = Rational64::new(numer, total_demand);
            ratio = Some(ratio.map_or(q, |best| best.max(q)));
        }
    }
    PlanScore { ratio: ratio.unwrap_or_else(|| Rational64::from_integer(0)), residual_unmet }
}

/// Optimal shipments. `shipments` is indexed `[hub][demand][supply]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub shipments: Vec<Vec<Vec<Unit250>>>,
    /// Minimised maximum unmet-demand ratio.
    pub objective: f64,
    /// The same value as an exact fraction `[numerator, denominator]`.
    pub objective_exact: Rational64,
    pub total_shipped: Unit250,
    /// Secondary objective value.
    pub residual_unmet: Unit250,
    #[serde(default)]
    pub stats: SolveStats,
}

impl AllocationPlan {
    pub fn from_arc_values(problem: &AllocationProblem, arcs: &[Arc], values: &[u64], stats: SolveStats) -> Self {
        let h = problem.num_hubs();
        let r = problem.num_resources();
        let mut shipments = vec![vec![vec![Unit250::ZERO; r]; r]; h];
        for (a, &v) in arcs.iter().zip(values) {
            shipments[a.hub][a.demand][a.supply] = Unit250(v);
        }
        let s = score(problem, arcs, values);
        Self {
            shipments,
            objective: *s.ratio.numer() as f64 / *s.ratio.denom() as f64,
            objective_exact: s.ratio,
            total_shipped: Unit250(values.iter().sum()),
            residual_unmet: Unit250(s.residual_unmet),
            stats,
        }
    }

    /// Units of supply resource `supply` shipped in total.
    pub fn shipped_of(&self, supply: usize) -> u64 {
        self.shipments.iter().flat_map(|g| g.iter()).map(|row| row[supply].0).sum()
    }

    /// Units shipped to `hub` against demand for `demand`.
    pub fn shipped_for(&self, hub: usize, demand: usize) -> u64 {
        self.shipments[hub][demand].iter().map(|u| u.0).sum()
    }

    /// Units of `supply` shipped to `hub`, across demand resources.
    pub fn received(&self, hub: usize, supply: usize) -> u64 {
        self.shipments[hub].iter().map(|row| row[supply].0).sum()
    }

    /// Same shipments and objective, ignoring solver statistics.
    pub fn same_solution(&self, other: &AllocationPlan) -> bool {
        self.shipments == other.shipments && self.objective_exact == other.objective_exact && self.residual_unmet == other.residual_unmet
    }
}

/// Problem and plan together, the JSON shape written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRecord {
    pub problem: AllocationProblem,
    pub plan: AllocationPlan,
}

pub fn write_plan_json<W: Write>(problem: &AllocationProblem, plan: &AllocationPlan, out: W) -> Result<()> {
    let record = AllocationRecord { problem: problem.clone(), plan: plan.clone() };
    serde_json::to_writer_pretty(out, &record)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_examples() {
        assert_eq!(cap_supply(Unit250(10), Unit250(8)), Unit250(8));
        assert_eq!(cap_supply(Unit250(8), Unit250(10)), Unit250(8));
        assert_eq!(cap_supply(Unit250(0), Unit250(5)), Unit250(0));
        let c = SupplyCap::new(Unit250(7), Unit250(3));
        assert!(c.effective <= c.actual);
    }

    #[test]
    fn arcs_follow_compatibility() {
        let res = ResourceSet::abo();
        let p = AllocationProblem::new(
            res.clone(),
            vec![Unit250(1); 4],
            vec![vec![Unit250(1); 4]; 7],
            vec![vec![Unit250(0); 4]; 7],
            CompatibilityMatrix::concor1(&res).unwrap(),
        )
        .unwrap();
        let arcs = p.arcs();
        assert_eq!(arcs.len(), 42);
        assert!(arcs.windows(2).all(|w| (w[0].hub, w[0].demand) <= (w[1].hub, w[1].demand)));
        let o = res.index_of("O").unwrap();
        let a = res.index_of("A").unwrap();
        let first_o = arcs.iter().position(|x| x.demand == o).unwrap();
        assert_eq!((arcs[first_o].supply, arcs[first_o + 1].supply), (o, a));
    }

    #[test]
    fn dimension_errors() {
        let id = CompatibilityMatrix::identity(2).unwrap();
        assert!(AllocationProblem::from_counts(&[1], &[vec![1, 1]], &[vec![0, 0]], id.clone()).is_err());
        assert!(AllocationProblem::from_counts(&[1, 1], &[vec![1, 1]], &[], id).is_err());
    }

    #[test]
    fn score_allows_negative_ratio() {
        let p = AllocationProblem::from_counts(&[0], &[vec![2]], &[vec![5]], CompatibilityMatrix::identity(1).unwrap()).unwrap();
        let s = score(&p, &p.arcs(), &[0]);
        assert_eq!(s.ratio, Rational64::new(-3, 2));
        assert_eq!(s.residual_unmet, 0);
    }
}
