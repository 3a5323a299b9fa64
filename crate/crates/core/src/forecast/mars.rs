//! Univariate multivariate-adaptive-regression-splines fit on `x = 1..t`.
//!
//! The forward stage greedily adds hinge pairs `max(0, x - c)`, `max(0, c - x)`
//! (optionally multiplied into an existing term), scoring every candidate by
//! the residual sum of squares it removes. Candidates are scored against an
//! orthonormal basis of the current columns, so each score is `O(t * M)`.
//! The backward stage deletes one term at a time and keeps the subset with
//! the lowest generalized cross-validation score.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for treating a candidate column as linearly dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarsConfig {
    /// Maximum number of hinges multiplied into one term (1 or 2).
    pub max_degree: usize,
    /// Cap on the number of terms including the intercept; `None` means
    /// `min(2t + 1, 21)`.
    pub max_terms: Option<usize>,
    /// GCV cost charged per interior knot.
    pub gcv_penalty: f64,
    /// Minimum spacing (in observations) between a new knot and existing
    /// interior knots. `1` only forbids duplicates.
    pub min_obs_between_knots: usize,
    /// Forward stage stops once the best candidate improves R^2 by less than this.
    pub forward_threshold: f64,
}

impl Default for MarsConfig {
    fn default() -> Self {
        Self {
            max_degree: 2,
            max_terms: None,
            gcv_penalty: 3.0,
            min_obs_between_knots: 1,
            forward_threshold: 1e-3,
        }
    }
}

impl MarsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.max_degree) {
            return Err(Error::InvalidConfig(format!("max_degree must be 1 or 2, got {}", self.max_degree)));
        }
        if !(self.gcv_penalty > 0.0) {
            return Err(Error::InvalidConfig("gcv_penalty must be positive".into()));
        }
        if self.min_obs_between_knots == 0 {
            return Err(Error::InvalidConfig("min_obs_between_knots must be >= 1".into()));
        }
        if let Some(m) = self.max_terms {
            if m == 0 {
                return Err(Error::InvalidConfig("max_terms must be >= 1".into()));
            }
        }
        Ok(())
    }

    fn term_cap(&self, t: usize) -> usize {
        self.max_terms.unwrap_or_else(|| (2 * t + 1).min(21))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HingeSign {
    /// `max(0, x - knot)`
    Positive,
    /// `max(0, knot - x)`
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hinge {
    pub sign: HingeSign,
    pub knot: f64,
}

impl Hinge {
    pub fn eval(&self, x: f64) -> f64 {
        match self.sign {
            HingeSign::Positive => (x - self.knot).max(0.0),
            HingeSign::Negative => (self.knot - x).max(0.0),
        }
    }

    /// A hinge anchored at the edge of the data is linear over the whole
    /// training range and does not count as a knot.
    fn is_linear_on(&self, x_min: f64, x_max: f64) -> bool {
        match self.sign {
            HingeSign::Positive => self.knot <= x_min,
            HingeSign::Negative => self.knot >= x_max,
        }
    }
}

/// A product of hinges with its fitted coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisTerm {
    pub coefficient: f64,
    pub hinges: Vec<Hinge>,
}

impl BasisTerm {
    pub fn eval(&self, x: f64) -> f64 {
        self.hinges.iter().map(|h| h.eval(x)).product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarsModel {
    pub intercept: f64,
    pub terms: Vec<BasisTerm>,
    /// In-sample fitted values at `x = 1..t`.
    pub fitted: Vec<f64>,
    pub rss: f64,
    pub gcv: f64,
    /// GCV of the unpruned forward-stage model.
    pub forward_gcv: f64,
    /// Number of terms (including the intercept) after the forward stage.
    pub forward_terms: usize,
}

impl MarsModel {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.terms.iter().map(|t| t.coefficient * t.eval(x)).sum::<f64>()
    }

    /// Distinct interior knots across all terms.
    pub fn knots(&self) -> Vec<f64> {
        let t = self.fitted.len() as f64;
        let hinges: Vec<Vec<Hinge>> = self.terms.iter().map(|term| term.hinges.clone()).collect();
        interior_knots(hinges.iter(), 1.0, t)
    }
}

fn interior_knots<'a>(terms: impl Iterator<Item = &'a Vec<Hinge>>, x_min: f64, x_max: f64) -> Vec<f64> {
    let mut knots: Vec<f64> = Vec::new();
    for hinges in terms {
        for h in hinges {
            if !h.is_linear_on(x_min, x_max) && !knots.contains(&h.knot) {
                knots.push(h.knot);
            }
        }
    }
    knots.sort_by(f64::total_cmp);
    knots
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthogonalizes `col` against `basis` (twice, for stability). Returns the
/// normalized remainder, or `None` if `col` is numerically dependent.
fn orthonormalize(col: &[f64], basis: &[Vec<f64>], extra: &[Vec<f64>]) -> Option<Vec<f64>> {
    let norm0 = dot(col, col).sqrt();
    if norm0 == 0.0 {
        return None;
    }
    let mut w = col.to_vec();
    for _ in 0..2 {
        for q in basis.iter().chain(extra) {
            let p = dot(&w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= p * qi;
            }
        }
    }
    let norm = dot(&w, &w).sqrt();
    if norm <= DEPENDENCE_TOL * norm0 {
        return None;
    }
    w.iter_mut().for_each(|v| *v /= norm);
    Some(w)
}

struct Candidate {
    reduction: f64,
    hinges: Vec<Vec<Hinge>>,
    columns: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
}

/// Fits a MARS model to `y` observed at `x = 1..y.len()`.
pub fn fit_mars(y: &[f64], cfg: &MarsConfig) -> Result<MarsModel> {
    cfg.validate()?;
    let t = y.len();
    if t < 2 {
        return Err(Error::InsufficientData { needed: 2, got: t });
    }
    let xs: Vec<f64> = (1..=t).map(|i| i as f64).collect();
    let (x_min, x_max) = (1.0, t as f64);

    // Term 0 is the intercept (empty hinge product).
    let mut terms: Vec<Vec<Hinge>> = vec![Vec::new()];
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; t]];
    let mut q: Vec<Vec<f64>> = vec![vec![1.0 / (t as f64).sqrt(); t]];

    let mean = y.iter().sum::<f64>() / t as f64;
    let mut resid: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let tss = dot(&resid, &resid);
    let mut rss = tss;
    let cap = cfg.term_cap(t);

    // Linear (edge) knots are tried first so that exact ties favour fewer knots.
    let mut knot_order: Vec<f64> = vec![x_min, x_max];
    knot_order.extend(xs.iter().copied().filter(|&k| k > x_min && k < x_max));

    let tie = 1e-12 * tss.max(f64::MIN_POSITIVE);
    while terms.len() < cap && rss > 1e-12 * tss && tss > 0.0 {
        let existing_knots = interior_knots(terms.iter(), x_min, x_max);
        let mut best: Option<Candidate> = None;
        for (parent_idx, parent) in terms.iter().enumerate() {
            if parent.len() >= cfg.max_degree {
                continue;
            }
            let parent_col = &columns[parent_idx];
            for &knot in &knot_order {
                let interior = knot > x_min && knot < x_max;
                if interior
                    && cfg.min_obs_between_knots > 1
                    && existing_knots
                        .iter()
                        .any(|&k| (k - knot).abs() < cfg.min_obs_between_knots as f64)
                {
                    continue;
                }
                let mut cand_hinges = Vec::new();
                let mut cand_cols = Vec::new();
                let mut cand_q: Vec<Vec<f64>> = Vec::new();
                let mut reduction = 0.0;
                for sign in [HingeSign::Positive, HingeSign::Negative] {
                    let hinge = Hinge { sign, knot };
                    let col: Vec<f64> = xs.iter().zip(parent_col).map(|(&x, &p)| p * hinge.eval(x)).collect();
                    if let Some(qn) = orthonormalize(&col, &q, &cand_q) {
                        let proj = dot(&qn, &resid);
                        reduction += proj * proj;
                        let mut h = parent.clone();
                        h.push(hinge);
                        cand_hinges.push(h);
                        cand_cols.push(col);
                        cand_q.push(qn);
                    }
                }
                if cand_cols.is_empty() {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some(b) => reduction > b.reduction + tie,
                };
                if better {
                    best = Some(Candidate { reduction, hinges: cand_hinges, columns: cand_cols, q: cand_q });
                }
            }
        }
        let Some(best) = best else { break };
        if best.reduction <= tie || best.reduction < cfg.forward_threshold * tss {
            break;
        }
        for ((h, col), qn) in best.hinges.into_iter().zip(best.columns).zip(best.q) {
            if terms.len() >= cap {
                break;
            }
            let proj = dot(&qn, &resid);
            for (r, qi) in resid.iter_mut().zip(&qn) {
                *r -= proj * qi;
            }
            terms.push(h);
            columns.push(col);
            q.push(qn);
        }
        rss = dot(&resid, &resid);
    }

    let forward_terms = terms.len();
    let gcv_of = |set: &[usize], rss: f64| -> f64 {
        let knots = interior_knots(set.iter().map(|&i| &terms[i]), x_min, x_max).len();
        let effective = set.len() as f64 + cfg.gcv_penalty * knots as f64;
        gcv(rss, t, effective)
    };

    let mut current: Vec<usize> = (0..terms.len()).collect();
    let full_fit = least_squares(&columns, &current, y);
    let forward_gcv = gcv_of(&current, full_fit.rss);
    let mut best_set = current.clone();
    let mut best_fit = full_fit;
    let mut best_gcv = forward_gcv;

    while current.len() > 1 {
        let mut drop: Option<(usize, LsqFit)> = None;
        for pos in 1..current.len() {
            let mut trial = current.clone();
            trial.remove(pos);
            let fit = least_squares(&columns, &trial, y);
            if drop.as_ref().is_none_or(|(_, f)| fit.rss < f.rss) {
                drop = Some((pos, fit));
            }
        }
        let (pos, fit) = drop.expect("at least one removable term");
        current.remove(pos);
        let g = gcv_of(&current, fit.rss);
        // Ties go to the smaller model.
        if g <= best_gcv * (1.0 + 1e-9) + 1e-300 || (best_gcv.is_infinite() && g.is_finite()) {
            best_gcv = g.min(best_gcv);
            best_set = current.clone();
            best_fit = fit;
        }
    }

    let intercept = best_fit.coefficients[0];
    let model_terms = best_set
        .iter()
        .zip(&best_fit.coefficients)
        .skip(1)
        .map(|(&i, &c)| BasisTerm { coefficient: c, hinges: terms[i].clone() })
        .collect();
    Ok(MarsModel {
        intercept,
        terms: model_terms,
        fitted: best_fit.fitted,
        rss: best_fit.rss,
        gcv: best_gcv,
        forward_gcv,
        forward_terms,
    })
}

/// `RSS/t / (1 - M/t)^2`, infinite once the effective parameter count
/// reaches the number of observations.
pub fn gcv(rss: f64, t: usize, effective_params: f64) -> f64 {
    let n = t as f64;
    if effective_params >= n {
        return f64::INFINITY;
    }
    let denom = 1.0 - effective_params / n;
    rss / n / (denom * denom)
}

struct LsqFit {
    coefficients: Vec<f64>,
    fitted: Vec<f64>,
    rss: f64,
}

fn least_squares(columns: &[Vec<f64>], set: &[usize], y: &[f64]) -> LsqFit {
    let t = y.len();
    let design = DMatrix::from_fn(t, set.len(), |i, j| columns[set[j]][i]);
    let target = DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let coef = svd
        .solve(&target, DEPENDENCE_TOL * max_sv.max(1.0))
        .expect("both singular vector sets were computed");
    let fitted = &design * &coef;
    let rss = fitted.iter().zip(y).map(|(f, v)| (v - f) * (v - f)).sum();
    LsqFit { coefficients: coef.iter().copied().collect(), fitted: fitted.iter().copied().collect(), rss }
}

/// One-step continuation along the slope of the last fitted piece.
///
/// `Δ = ŷ_t − ŷ_{t−1}` (unit spacing), scaled by `factor` when `holiday_next`.
pub fn extrapolate(fitted: &[f64], holiday_next: bool, factor: f64) -> f64 {
    match fitted {
        [] => 0.0,
        [only] => *only,
        [.., prev, last] => {
            let mut slope = last - prev;
            if holiday_next {
                slope *= factor;
            }
            last + slope
        }
    }
}
