//! Weekly scenarios: actual new supply per resource and actual new demand per
//! hub and resource, plus the holiday calendar.

pub mod ingest;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use ingest::{build_weekly, load_csv, load_hub_csv, load_supply_csv, HubUnitRecord, SupplyRecord};
pub use synthetic::{generate_synthetic, Changepoints, PinnedTotals, Segment, SyntheticParams};

use crate::domain::{CumulativeSeries, Entity, ResourceSet, Unit250};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub resources: ResourceSet,
    pub hubs: Vec<String>,
    pub weeks: usize,
    /// `[week][resource]`, week 1 first.
    pub supply: Vec<Vec<Unit250>>,
    /// `[week][hub][resource]`.
    pub demand: Vec<Vec<Vec<Unit250>>>,
    /// 1-based holiday week numbers.
    #[serde(default)]
    pub holiday_weeks: BTreeSet<usize>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let r = self.resources.len();
        let h = self.hubs.len();
        if self.supply.len() != self.weeks || self.demand.len() != self.weeks {
            return Err(Error::InvalidDimension(format!(
                "{} weeks declared, {} supply rows, {} demand rows",
                self.weeks,
                self.supply.len(),
                self.demand.len()
            )));
        }
        for (w, row) in self.supply.iter().enumerate() {
            if row.len() != r {
                return Err(Error::InvalidDimension(format!("week {}: supply has {} resources, expected {r}", w + 1, row.len())));
            }
        }
        for (w, grid) in self.demand.iter().enumerate() {
            if grid.len() != h || grid.iter().any(|row| row.len() != r) {
                return Err(Error::InvalidDimension(format!("week {}: demand grid is not {h}x{r}", w + 1)));
            }
        }
        Ok(())
    }

    pub fn num_resources(&self) -> usize {
        self.resources.len()
    }

    pub fn num_hubs(&self) -> usize {
        self.hubs.len()
    }

    pub fn supply_increments(&self, resource: usize) -> Vec<u64> {
        self.supply.iter().map(|row| row[resource].0).collect()
    }

    pub fn demand_increments(&self, hub: usize, resource: usize) -> Vec<u64> {
        self.demand.iter().map(|grid| grid[hub][resource].0).collect()
    }

    pub fn supply_series(&self, resource: usize) -> CumulativeSeries {
        CumulativeSeries::from_increments(Entity::Supplier, Some(resource), &self.supply_increments(resource), self.holiday_weeks.clone())
    }

    pub fn demand_series(&self, hub: usize, resource: usize) -> CumulativeSeries {
        CumulativeSeries::from_increments(Entity::Hub(hub), Some(resource), &self.demand_increments(hub, resource), self.holiday_weeks.clone())
    }

    /// Supply summed over resources.
    pub fn aggregate_supply_series(&self) -> CumulativeSeries {
        let inc: Vec<u64> = self.supply.iter().map(|row| row.iter().map(|u| u.0).sum()).collect();
        CumulativeSeries::from_increments(Entity::Supplier, None, &inc, self.holiday_weeks.clone())
    }

    /// One hub's demand summed over resources.
    pub fn aggregate_demand_series(&self, hub: usize) -> CumulativeSeries {
        let inc: Vec<u64> = self.demand.iter().map(|grid| grid[hub].iter().map(|u| u.0).sum()).collect();
        CumulativeSeries::from_increments(Entity::Hub(hub), None, &inc, self.holiday_weeks.clone())
    }

    pub fn total_supply(&self, resource: usize) -> Unit250 {
        self.supply.iter().map(|row| row[resource]).sum()
    }

    pub fn total_demand(&self, resource: usize) -> Unit250 {
        self.demand.iter().flat_map(|grid| grid.iter()).map(|row| row[resource]).sum()
    }

    pub fn hub_total_demand(&self, hub: usize) -> Unit250 {
        self.demand.iter().flat_map(|grid| grid[hub].iter().copied()).sum()
    }

    /// The first `weeks` weeks.
    pub fn truncated(&self, weeks: usize) -> Result<Scenario> {
        if weeks > self.weeks {
            return Err(Error::Horizon { requested: weeks, available: self.weeks });
        }
        let mut s = self.clone();
        s.weeks = weeks;
        s.supply.truncate(weeks);
        s.demand.truncate(weeks);
        Ok(s)
    }

    pub fn from_json_str(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load_json(path: &Path) -> Result<Scenario> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Scenario {
        Scenario {
            resources: ResourceSet::new(&["A", "O"]).unwrap(),
            hubs: vec!["h1".into()],
            weeks: 2,
            supply: vec![vec![Unit250(3), Unit250(1)], vec![Unit250(0), Unit250(2)]],
            demand: vec![vec![vec![Unit250(1), Unit250(1)]], vec![vec![Unit250(2), Unit250(0)]]],
            holiday_weeks: BTreeSet::from([2]),
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn json_round_trip() {
        let s = tiny();
        let back = Scenario::from_json_str(&s.to_json_string().unwrap()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn series_views() {
        let s = tiny();
        assert_eq!(s.supply_series(1).values, vec![1, 3]);
        assert_eq!(s.aggregate_supply_series().values, vec![4, 6]);
        assert_eq!(s.demand_series(0, 0).values, vec![1, 3]);
        assert_eq!(s.aggregate_demand_series(0).values, vec![2, 4]);
        assert!(s.supply_series(0).is_holiday(2));
        assert_eq!(s.total_demand(0), Unit250(3));
        assert_eq!(s.hub_total_demand(0), Unit250(4));
    }

    #[test]
    fn bad_shape_rejected() {
        let mut s = tiny();
        s.supply.pop();
        assert!(s.validate().is_err());
        assert!(tiny().truncated(3).is_err());
    }
}
