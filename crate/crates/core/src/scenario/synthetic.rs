//! Synthetic scenario generator.
//!
//! Weekly intensities follow piecewise-constant rates (so cumulative trends
//! are piecewise linear), split across resources by `weights` and across
//! hubs by `hub_shares`. Noise perturbs each intensity by a scaled normal
//! draw; counts are differences of rounded cumulative sums, so noise 0 gives
//! exact integer trends. Optional pinned totals rescale each resource's
//! counts to an exact horizon total.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::domain::{ResourceSet, Unit250, ABO_LABELS};
use crate::error::{Error, Result};
use crate::forecast::round_half_up;

/// Rate in 250 ml units per week, in effect from `week` (1-based) onward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub week: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Changepoints {
    /// Total supply rate across resources.
    pub supply: Vec<Segment>,
    /// Total demand rate across hubs and resources.
    pub demand: Vec<Segment>,
}

/// Per-resource horizon totals in 500 ml doses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PinnedTotals {
    #[serde(default)]
    pub supply: Option<Vec<f64>>,
    #[serde(default)]
    pub demand: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub horizon: usize,
    pub hubs: usize,
    pub resources: Vec<String>,
    pub weights: Vec<f64>,
    /// Share of total demand per hub; uniform when empty.
    pub hub_shares: Vec<f64>,
    pub changepoints: Changepoints,
    /// Relative noise: an intensity `μ` becomes `max(0, μ + noise·√μ·Z)`.
    pub noise: f64,
    pub holidays: BTreeSet<usize>,
    /// Demand multiplier in holiday weeks.
    pub holiday_factor: f64,
    pub pinned_totals: Option<PinnedTotals>,
    /// Used when no seed is passed explicitly.
    pub seed: Option<u64>,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            horizon: 22,
            hubs: 7,
            resources: ABO_LABELS.iter().map(|s| s.to_string()).collect(),
            weights: vec![0.42, 0.46, 0.09, 0.03],
            hub_shares: Vec::new(),
            changepoints: Changepoints {
                supply: vec![Segment { week: 1, rate: 12.0 }, Segment { week: 8, rate: 30.0 }, Segment { week: 16, rate: 18.0 }],
                demand: vec![Segment { week: 1, rate: 8.0 }, Segment { week: 10, rate: 26.0 }],
            },
            noise: 0.3,
            holidays: BTreeSet::new(),
            holiday_factor: 0.7,
            pinned_totals: None,
            seed: None,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        let r = self.resources.len();
        if self.horizon == 0 || self.hubs == 0 || r == 0 {
            return Err(Error::InvalidConfig("horizon, hubs and resources must be positive".into()));
        }
        check_weights(&self.weights, r, "weights")?;
        if !self.hub_shares.is_empty() {
            check_weights(&self.hub_shares, self.hubs, "hub_shares")?;
        }
        for (name, segs) in [("supply", &self.changepoints.supply), ("demand", &self.changepoints.demand)] {
            if segs.is_empty() || segs[0].week != 1 {
                return Err(Error::InvalidConfig(format!("{name} changepoints must start at week 1")));
            }
            if segs.windows(2).any(|w| w[1].week <= w[0].week) || segs.iter().any(|s| !(s.rate >= 0.0 && s.rate.is_finite())) {
                return Err(Error::InvalidConfig(format!("{name} changepoints must have increasing weeks and non-negative rates")));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) || !(self.holiday_factor >= 0.0 && self.holiday_factor.is_finite()) {
            return Err(Error::InvalidConfig("noise and holiday_factor must be non-negative".into()));
        }
        if let Some(p) = &self.pinned_totals {
            for v in [&p.supply, &p.demand].into_iter().flatten() {
                if v.len() != r {
                    return Err(Error::InvalidDimension(format!("pinned totals list {} values for {r} resources", v.len())));
                }
            }
        }
        Ok(())
    }
}

fn check_weights(w: &[f64], n: usize, what: &str) -> Result<()> {
    if w.len() != n {
        return Err(Error::InvalidDimension(format!("{what}: {} values for {n} entries", w.len())));
    }
    if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("{what} must be non-negative and sum to 1")));
    }
    Ok(())
}

fn rate_at(segs: &[Segment], week: usize) -> f64 {
    segs.iter().take_while(|s| s.week <= week).last().map_or(0.0, |s| s.rate)
}

fn perturb(mu: f64, noise: f64, rng: &mut ChaCha8Rng) -> f64 {
    if noise == 0.0 || mu <= 0.0 {
        return mu.max(0.0);
    }
    let z: f64 = StandardNormal.sample(rng);
    (mu + noise * mu.sqrt() * z).max(0.0)
}

/// Integer counts from a sequence of intensities: differences of rounded
/// cumulative sums.
fn counts_from(intensities: &[f64]) -> Vec<u64> {
    let mut acc = 0.0;
    let mut prev = 0i64;
    intensities
        .iter()
        .map(|&m| {
            acc += m;
            let c = round_half_up(acc).max(prev);
            let d = (c - prev) as u64;
            prev = c;
            d
        })
        .collect()
}

/// Distributes `total` over cells in proportion to `intensity` by the
/// largest-remainder method, in exact integer arithmetic.
fn pin(total: u64, intensity: &[f64]) -> Result<Vec<u64>> {
    if total == 0 {
        return Ok(vec![0; intensity.len()]);
    }
    let w: Vec<u128> = intensity.iter().map(|&m| (m * 1e6).round().max(0.0) as u128).collect();
    let sum: u128 = w.iter().sum();
    if sum == 0 {
        return Err(Error::Infeasible(format!("cannot pin a total of {total} units onto zero intensity")));
    }
    let t = total as u128;
    let mut out: Vec<u64> = w.iter().map(|&x| (t * x / sum) as u64).collect();
    let mut left = total - out.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| ((t * w[b]) % sum).cmp(&((t * w[a]) % sum)).then(a.cmp(&b)));
    for &i in &order {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    Ok(out)
}

pub fn generate_synthetic(params: &SyntheticParams, seed: u64) -> Result<Scenario> {
    params.validate()?;
    let t = params.horizon;
    let h = params.hubs;
    let r = params.resources.len();
    let shares: Vec<f64> = if params.hub_shares.is_empty() { vec![1.0 / h as f64; h] } else { params.hub_shares.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Supply intensities [resource][week].
    let mut supply_mu = vec![vec![0.0; t]; r];
    for w in 0..t {
        let rate = rate_at(&params.changepoints.supply, w + 1);
        for (k, row) in supply_mu.iter_mut().enumerate() {
            row[w] = perturb(rate * params.weights[k], params.noise, &mut rng);
        }
    }
    // Demand intensities [hub][resource][week].
    let mut demand_mu = vec![vec![vec![0.0; t]; r]; h];
    for w in 0..t {
        let mut rate = rate_at(&params.changepoints.demand, w + 1);
        if params.holidays.contains(&(w + 1)) {
            rate *= params.holiday_factor;
        }
        for (hub, grid) in demand_mu.iter_mut().enumerate() {
            for (k, row) in grid.iter_mut().enumerate() {
                row[w] = perturb(rate * shares[hub] * params.weights[k], params.noise, &mut rng);
            }
        }
    }

    let pinned = params.pinned_totals.clone().unwrap_or_default();
    let mut supply = vec![vec![Unit250::ZERO; r]; t];
    for k in 0..r {
        let counts = match &pinned.supply {
            Some(totals) => pin(Unit250::from_doses_500ml(totals[k])?.0, &supply_mu[k])?,
            None => counts_from(&supply_mu[k]),
        };
        for w in 0..t {
            supply[w][k] = Unit250(counts[w]);
        }
    }
    let mut demand = vec![vec![vec![Unit250::ZERO; r]; h]; t];
    for k in 0..r {
        match &pinned.demand {
            Some(totals) => {
                let cells: Vec<f64> = (0..h).flat_map(|hub| demand_mu[hub][k].iter().copied()).collect();
                let counts = pin(Unit250::from_doses_500ml(totals[k])?.0, &cells)?;
                for hub in 0..h {
                    for w in 0..t {
                        demand[w][hub][k] = Unit250(counts[hub * t + w]);
                    }
                }
            }
            None => {
                for hub in 0..h {
                    for (w, c) in counts_from(&demand_mu[hub][k]).into_iter().enumerate() {
                        demand[w][hub][k] = Unit250(c);
                    }
                }
            }
        }
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("source".into(), "synthetic".into());
    metadata.insert("seed".into(), seed.to_string());
    let scenario = Scenario {
        resources: ResourceSet::new(&params.resources)?,
        hubs: (1..=h).map(|i| format!("hub{i}")).collect(),
        weeks: t,
        supply,
        demand,
        holiday_weeks: params.holidays.clone(),
        metadata,
    };
    scenario.validate()?;
    Ok(scenario)
}
