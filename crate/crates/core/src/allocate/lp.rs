//! Dense bounded-variable primal simplex and a depth-first branch-and-bound
//! driver on top of it.
//!
//! Problems here are tiny (tens of rows, under a hundred columns) and have
//! small integer data, so a dense tableau with explicit bound handling is
//! both simple and exact enough. Dantzig pricing is used until a run of
//! degenerate pivots is seen, after which the solve switches to Bland's rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const INT_TOL: f64 = 1e-6;
const DEGENERATE_RUN: usize = 25;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min cost·x` subject to rows and `lower <= x <= upper`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub cost: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, integer: bool, cost: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.integer.push(integer);
        self.cost.push(cost);
        self.lower.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn set_cost(&mut self, cost: Vec<f64>) {
        assert_eq!(cost.len(), self.num_vars());
        self.cost = cost;
    }
}

/// Work counters accumulated across LP and branch-and-bound calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub lp_solves: u64,
    pub pivots: u64,
    pub nodes: u64,
}

impl SolveStats {
    pub fn absorb(&mut self, other: SolveStats) {
        self.lp_solves += other.lp_solves;
        self.pivots += other.pivots;
        self.nodes += other.nodes;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    /// Free nonbasic variable held at zero.
    Free,
}

struct Tableau {
    m: usize,
    cols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    pivots: u64,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + j];
        for k in 0..cols {
            self.t[r * cols + k] /= piv;
        }
        self.beta[r] /= piv;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + j];
            if f == 0.0 {
                continue;
            }
            for k in 0..cols {
                self.t[i * cols + k] -= f * self.t[r * cols + k];
            }
            self.beta[i] -= f * self.beta[r];
        }
        self.basis[r] = j;
        self.pivots += 1;
    }

    fn run(&mut self, cost: &[f64]) -> Result<Phase> {
        let mut bland = false;
        let mut degenerate = 0usize;
        let mut d = vec![0.0; self.cols];
        for _ in 0..MAX_ITERATIONS {
            // Reduced costs.
            d.copy_from_slice(cost);
            for i in 0..self.m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    let row = &self.t[i * self.cols..(i + 1) * self.cols];
                    for (dj, tij) in d.iter_mut().zip(row) {
                        *dj -= cb * tij;
                    }
                }
            }

            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.cols {
                let eligible = match self.state[j] {
                    State::Basic => false,
                    _ if self.lo[j] == self.up[j] => false,
                    State::AtLower => d[j] < -COST_TOL,
                    State::AtUpper => d[j] > COST_TOL,
                    State::Free => d[j].abs() > COST_TOL,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((j, d[j]));
                    break;
                }
                if entering.is_none_or(|(_, best)| d[j].abs() > best.abs()) {
                    entering = Some((j, d[j]));
                }
            }
            let Some((j, dj)) = entering else {
                return Ok(Phase::Optimal);
            };
            let dir = if dj < 0.0 { 1.0 } else { -1.0 };

            // Ratio test. Basic i moves at rate -T_ij * dir.
            let mut theta = f64::INFINITY;
            let mut leave: Option<(usize, bool)> = None; // (row, hits upper)
            if self.lo[j].is_finite() && self.up[j].is_finite() {
                theta = self.up[j] - self.lo[j];
            }
            for i in 0..self.m {
                let tij = self.at(i, j);
                if tij.abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = -tij * dir;
                let b = self.basis[i];
                let (limit, hits_upper) = if rate < 0.0 {
                    if !self.lo[b].is_finite() {
                        continue;
                    }
                    (((self.x[b] - self.lo[b]) / -rate).max(0.0), false)
                } else {
                    if !self.up[b].is_finite() {
                        continue;
                    }
                    (((self.up[b] - self.x[b]) / rate).max(0.0), true)
                };
                let replace = match leave {
                    _ if limit < theta - PIVOT_TOL => true,
                    Some((r, _)) if limit <= theta + PIVOT_TOL => {
                        if bland {
                            b < self.basis[r]
                        } else {
                            tij.abs() > self.at(r, j).abs()
                        }
                    }
                    None if limit <= theta + PIVOT_TOL && limit < theta => true,
                    _ => false,
                };
                if replace {
                    theta = limit.min(theta);
                    leave = Some((i, hits_upper));
                }
            }
            if theta.is_infinite() {
                return Ok(Phase::Unbounded);
            }

            if theta <= PIVOT_TOL {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }

            self.x[j] += dir * theta;
            for i in 0..self.m {
                let tij = self.at(i, j);
                if tij != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= tij * dir * theta;
                }
            }

            match leave {
                None => {
                    // Bound flip.
                    self.state[j] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
                    self.x[j] = if dir > 0.0 { self.up[j] } else { self.lo[j] };
                }
                Some((r, hits_upper)) => {
                    let b = self.basis[r];
                    self.pivot(r, j);
                    self.state[j] = State::Basic;
                    if hits_upper {
                        self.state[b] = State::AtUpper;
                        self.x[b] = self.up[b];
                    } else {
                        self.state[b] = State::AtLower;
                        self.x[b] = self.lo[b];
                    }
                }
            }
        }
        Err(Error::Solver(format!("simplex did not converge in {MAX_ITERATIONS} iterations")))
    }

    fn refresh_basic_values(&mut self) {
        for i in 0..self.m {
            let mut v = self.beta[i];
            for j in 0..self.cols {
                if self.state[j] != State::Basic {
                    let tij = self.at(i, j);
                    if tij != 0.0 {
                        v -= tij * self.x[j];
                    }
                }
            }
            self.x[self.basis[i]] = v;
        }
    }
}

/// Solves the LP relaxation of `lp` with the given variable bounds.
pub fn solve_lp(lp: &LinearProgram, lower: &[f64], upper: &[f64], stats: &mut SolveStats) -> Result<LpOutcome> {
    let n = lp.num_vars();
    let m = lp.rows.len();
    stats.lp_solves += 1;
    for j in 0..n {
        if lower[j] > upper[j] + FEAS_TOL {
            return Ok(LpOutcome::Infeasible);
        }
    }

    // Column layout: structurals, one slack per row, then artificials.
    let mut lo: Vec<f64> = lower.to_vec();
    let mut up: Vec<f64> = upper.to_vec();
    let mut x: Vec<f64> = (0..n)
        .map(|j| {
            if lo[j].is_finite() {
                lo[j]
            } else if up[j].is_finite() {
                up[j]
            } else {
                0.0
            }
        })
        .collect();
    let mut state: Vec<State> = (0..n)
        .map(|j| {
            if lo[j].is_finite() {
                State::AtLower
            } else if up[j].is_finite() {
                State::AtUpper
            } else {
                State::Free
            }
        })
        .collect();

    let mut dense = vec![vec![0.0; n]; m];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            dense[i][j] += a;
        }
    }

    let mut basis = vec![0usize; m];
    let mut row_sign = vec![1.0; m];
    let mut artificial_rows: Vec<usize> = Vec::new();
    for (i, row) in lp.rows.iter().enumerate() {
        let (slo, sup) = match row.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        lo.push(slo);
        up.push(sup);
        let residual = row.rhs - dense[i].iter().zip(&x).map(|(a, v)| a * v).sum::<f64>();
        if residual >= slo - FEAS_TOL && residual <= sup + FEAS_TOL {
            x.push(residual);
            state.push(State::Basic);
            basis[i] = n + i;
        } else {
            x.push(0.0);
            state.push(if row.sense == Sense::Ge { State::AtUpper } else { State::AtLower });
            artificial_rows.push(i);
            row_sign[i] = if residual > 0.0 { 1.0 } else { -1.0 };
        }
    }
    let na = artificial_rows.len();
    let cols = n + m + na;
    let mut t = vec![0.0; m * cols];
    let mut beta = vec![0.0; m];
    for i in 0..m {
        let s = row_sign[i];
        for j in 0..n {
            t[i * cols + j] = s * dense[i][j];
        }
        t[i * cols + n + i] = s;
        beta[i] = s * lp.rows[i].rhs;
    }
    for (k, &i) in artificial_rows.iter().enumerate() {
        let col = n + m + k;
        t[i * cols + col] = 1.0;
        basis[i] = col;
        lo.push(0.0);
        up.push(f64::INFINITY);
        let residual = beta[i] - (0..n + m).map(|j| t[i * cols + j] * x[j]).sum::<f64>();
        x.push(residual.max(0.0));
        state.push(State::Basic);
    }

    let mut tab = Tableau { m, cols, t, beta, basis, state, lo, up, x, pivots: 0 };

    if na > 0 {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(n + m) {
            *c = 1.0;
        }
        tab.run(&phase1)?;
        tab.refresh_basic_values();
        let infeasibility: f64 = (n + m..cols).map(|j| tab.x[j]).sum();
        let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeasibility > FEAS_TOL * scale {
            stats.pivots += tab.pivots;
            return Ok(LpOutcome::Infeasible);
        }
        // Fix artificials at zero and pivot basic ones out where possible.
        for j in n + m..cols {
            tab.lo[j] = 0.0;
            tab.up[j] = 0.0;
            if tab.state[j] != State::Basic {
                tab.state[j] = State::AtLower;
                tab.x[j] = 0.0;
            }
        }
        for r in 0..m {
            if tab.basis[r] < n + m {
                continue;
            }
            let art = tab.basis[r];
            if let Some(j) = (0..n + m).find(|&j| tab.state[j] != State::Basic && tab.at(r, j).abs() > 1e-7) {
                tab.pivot(r, j);
                tab.state[j] = State::Basic;
                tab.state[art] = State::AtLower;
                tab.x[art] = 0.0;
            }
        }
        tab.refresh_basic_values();
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.cost);
    let phase = tab.run(&cost)?;
    stats.pivots += tab.pivots;
    if let Phase::Unbounded = phase {
        return Ok(LpOutcome::Unbounded);
    }
    tab.refresh_basic_values();
    let x: Vec<f64> = tab.x[..n].to_vec();
    let objective = x.iter().zip(&lp.cost).map(|(v, c)| v * c).sum();
    Ok(LpOutcome::Optimal { x, objective })
}

#[derive(Debug, Clone, Copy)]
pub struct MipOptions {
    pub node_limit: u64,
    /// The objective takes integer values at every integer-feasible point,
    /// which lets bounds be rounded up.
    pub integral_objective: bool,
}

impl Default for MipOptions {
    fn default() -> Self {
        Self { node_limit: 200_000, integral_objective: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MipOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

/// Depth-first branch and bound on the fractional integer variables.
pub fn solve_mip(lp: &LinearProgram, opts: MipOptions, stats: &mut SolveStats) -> Result<MipOutcome> {
    let mut stack: Vec<(Vec<f64>, Vec<f64>)> = vec![(lp.lower.clone(), lp.upper.clone())];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut nodes = 0u64;

    while let Some((lower, upper)) = stack.pop() {
        nodes += 1;
        if nodes > opts.node_limit {
            return Err(Error::Solver(format!("branch and bound exceeded {} nodes", opts.node_limit)));
        }
        let (x, obj) = match solve_lp(lp, &lower, &upper, stats)? {
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => return Err(Error::Solver("LP relaxation is unbounded".into())),
            LpOutcome::Optimal { x, objective } => (x, objective),
        };
        if let Some((_, incumbent)) = &best {
            let bound = if opts.integral_objective { (obj - INT_TOL).ceil() } else { obj };
            if bound >= incumbent - 1e-9 {
                continue;
            }
        }
        let fractional = (0..x.len()).find(|&j| lp.integer[j] && (x[j] - x[j].round()).abs() > INT_TOL);
        match fractional {
            None => {
                let mut xi = x;
                for j in 0..xi.len() {
                    if lp.integer[j] {
                        xi[j] = xi[j].round();
                    }
                }
                let obj: f64 = xi.iter().zip(&lp.cost).map(|(v, c)| v * c).sum();
                if best.as_ref().is_none_or(|(_, b)| obj < b - 1e-9) {
                    best = Some((xi, obj));
                }
            }
            Some(j) => {
                let v = x[j];
                let mut down_upper = upper.clone();
                down_upper[j] = v.floor();
                let mut up_lower = lower.clone();
                up_lower[j] = v.ceil();
                let down = (lower, down_upper);
                let up = (up_lower, upper);
                // Explore the nearer side first (pushed last).
                if v - v.floor() >= 0.5 {
                    stack.push(down);
                    stack.push(up);
                } else {
                    stack.push(up);
                    stack.push(down);
                }
            }
        }
    }
    stats.nodes += nodes;
    Ok(match best {
        Some((x, objective)) => MipOutcome::Optimal { x, objective },
        None => MipOutcome::Infeasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp_opt(lp: &LinearProgram) -> (Vec<f64>, f64) {
        let mut st = SolveStats::default();
        match solve_lp(lp, &lp.lower, &lp.upper, &mut st).unwrap() {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_lp() {
        // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 6, x <= 3
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 3.0, false, -3.0);
        let y = lp.add_var(0.0, f64::INFINITY, false, -2.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
        lp.add_row(vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0);
        let (sol, obj) = lp_opt(&lp);
        assert!((obj + 11.0).abs() < 1e-9);
        assert!((sol[0] - 3.0).abs() < 1e-9 && (sol[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ge_and_eq_rows_need_phase_one() {
        // min x + y  s.t. x + y >= 2, x - y = 1
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, f64::INFINITY, false, 1.0);
        let y = lp.add_var(0.0, f64::INFINITY, false, 1.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Ge, 2.0);
        lp.add_row(vec![(x, 1.0), (y, -1.0)], Sense::Eq, 1.0);
        let (sol, obj) = lp_opt(&lp);
        assert!((obj - 2.0).abs() < 1e-9);
        assert!((sol[0] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn free_variable_epigraph() {
        // min z s.t. z >= 1 - x, z >= x - 3, 0 <= x <= 10
        let mut lp = LinearProgram::new();
        let z = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, false, 1.0);
        let x = lp.add_var(0.0, 10.0, false, 0.0);
        lp.add_row(vec![(z, 1.0), (x, 1.0)], Sense::Ge, 1.0);
        lp.add_row(vec![(z, 1.0), (x, -1.0)], Sense::Ge, -3.0);
        let (_, obj) = lp_opt(&lp);
        assert!((obj + 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 1.0, false, 0.0);
        lp.add_row(vec![(x, 1.0)], Sense::Ge, 2.0);
        let mut st = SolveStats::default();
        assert_eq!(solve_lp(&lp, &lp.lower, &lp.upper, &mut st).unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new();
        lp.add_var(0.0, f64::INFINITY, false, -1.0);
        assert_eq!(solve_lp(&lp, &lp.lower, &lp.upper, &mut st).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn knapsack_branch_and_bound() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8, binaries... as integers <= 2
        let mut lp = LinearProgram::new();
        let a = lp.add_var(0.0, 2.0, true, -5.0);
        let b = lp.add_var(0.0, 2.0, true, -4.0);
        let c = lp.add_var(0.0, 2.0, true, -3.0);
        lp.add_row(vec![(a, 2.0), (b, 3.0), (c, 1.0)], Sense::Le, 5.0);
        lp.add_row(vec![(a, 4.0), (b, 1.0), (c, 2.0)], Sense::Le, 11.0);
        lp.add_row(vec![(a, 3.0), (b, 4.0), (c, 2.0)], Sense::Le, 8.0);
        let mut st = SolveStats::default();
        let out = solve_mip(&lp, MipOptions { integral_objective: true, ..Default::default() }, &mut st).unwrap();

        // Brute force.
        let mut best = 0;
        for va in 0..=2i64 {
            for vb in 0..=2i64 {
                for vc in 0..=2i64 {
                    if 2 * va + 3 * vb + vc <= 5 && 4 * va + vb + 2 * vc <= 11 && 3 * va + 4 * vb + 2 * vc <= 8 {
                        best = best.max(5 * va + 4 * vb + 3 * vc);
                    }
                }
            }
        }
        match out {
            MipOutcome::Optimal { objective, .. } => assert_eq!(objective, -(best as f64)),
            MipOutcome::Infeasible => panic!(),
        }
        assert!(st.nodes >= 1);
    }
}
