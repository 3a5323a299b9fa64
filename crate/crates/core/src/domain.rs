//! Core vocabulary shared by every other module: resource kinds, the
//! compatibility matrix, 250 ml units, week indices and cumulative series.

use std::collections::BTreeSet;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Blood groups used by the convalescent-plasma preset.
pub const ABO_LABELS: [&str; 4] = ["A", "O", "B", "AB"];

/// Cross-group substitutions permitted by the CONCOR-1 rule set, as
/// `(demand label, supply label)` pairs.
pub const CONCOR1_RULES: [(&str, &str); 2] = [("O", "A"), ("B", "AB")];

/// Population ABO frequencies used to split aggregate counts.
pub const ABO_WEIGHTS: [(&str, f64); 4] = [("A", 0.42), ("O", 0.46), ("B", 0.09), ("AB", 0.03)];

/// ABO population frequencies when `resources` are the ABO groups (in any
/// order), otherwise uniform.
pub fn default_weights(resources: &ResourceSet) -> Vec<f64> {
    let abo: Option<Vec<f64>> = resources
        .labels()
        .iter()
        .map(|l| ABO_WEIGHTS.iter().find(|(g, _)| g.eq_ignore_ascii_case(l)).map(|(_, w)| *w))
        .collect();
    match abo {
        Some(w) if resources.len() == 4 => w,
        _ => vec![1.0 / resources.len() as f64; resources.len()],
    }
}

/// One resource kind, identified by a dense index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceKind {
    pub id: usize,
    pub label: String,
}

/// The ordered set of resource kinds `0..R`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ResourceSet {
    kinds: Vec<ResourceKind>,
}

impl ResourceSet {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidDimension("resource set must not be empty".into()));
        }
        let mut seen = BTreeSet::new();
        let mut kinds = Vec::with_capacity(labels.len());
        for (id, label) in labels.iter().enumerate() {
            let label = label.as_ref().trim().to_string();
            if label.is_empty() || !seen.insert(label.clone()) {
                return Err(Error::InvalidConfig(format!("duplicate or empty resource label {label:?}")));
            }
            kinds.push(ResourceKind { id, label });
        }
        Ok(Self { kinds })
    }

    /// The four ABO groups in the order `A, O, B, AB`.
    pub fn abo() -> Self {
        Self::new(&ABO_LABELS).expect("static labels are valid")
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kinds(&self) -> &[ResourceKind] {
        &self.kinds
    }

    pub fn labels(&self) -> Vec<String> {
        self.kinds.iter().map(|k| k.label.clone()).collect()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.kinds[id].label
    }

    /// Case-insensitive label lookup.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        let label = label.trim();
        self.kinds
            .iter()
            .position(|k| k.label.eq_ignore_ascii_case(label))
    }
}

impl TryFrom<Vec<String>> for ResourceSet {
    type Error = Error;
    fn try_from(labels: Vec<String>) -> Result<Self> {
        Self::new(&labels)
    }
}

impl From<ResourceSet> for Vec<String> {
    fn from(set: ResourceSet) -> Self {
        set.labels()
    }
}

/// Boolean `R x R` grid; entry `(r, r')` is true iff demand for `r` may be
/// served by a unit of `r'`. The diagonal is always true.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<bool>>", into = "Vec<Vec<bool>>")]
pub struct CompatibilityMatrix {
    size: usize,
    entries: Vec<bool>,
}

impl CompatibilityMatrix {
    pub fn identity(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidDimension("compatibility matrix needs R >= 1".into()));
        }
        let mut entries = vec![false; size * size];
        for r in 0..size {
            entries[r * size + r] = true;
        }
        Ok(Self { size, entries })
    }

    /// The CONCOR-1 preset: identity plus `O <- A` and `B <- AB`.
    ///
    /// The resource set must be exactly the four ABO groups (in any order).
    pub fn concor1(resources: &ResourceSet) -> Result<Self> {
        let mut labels: Vec<String> = resources.labels().iter().map(|l| l.to_ascii_uppercase()).collect();
        labels.sort();
        let mut expected: Vec<String> = ABO_LABELS.iter().map(|s| s.to_string()).collect();
        expected.sort();
        if labels != expected {
            return Err(Error::InvalidConfig(format!(
                "CONCOR-1 preset needs resources {{A, O, B, AB}}, got {:?}",
                resources.labels()
            )));
        }
        Self::from_rules(resources, &CONCOR1_RULES)
    }

    /// Identity plus every `(demand, supply)` rule whose labels are both
    /// present; rules naming absent labels are ignored.
    pub fn from_rules(resources: &ResourceSet, rules: &[(&str, &str)]) -> Result<Self> {
        let mut m = Self::identity(resources.len())?;
        for (demand, supply) in rules {
            if let (Some(r), Some(s)) = (resources.index_of(demand), resources.index_of(supply)) {
                m.entries[r * m.size + s] = true;
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::InvalidDimension("compatibility matrix needs R >= 1".into()));
        }
        let mut entries = Vec::with_capacity(size * size);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidDimension(format!(
                    "compatibility row {r} has {} entries, expected {size}",
                    row.len()
                )));
            }
            if !row[r] {
                return Err(Error::InvalidConfig(format!("compatibility diagonal ({r},{r}) must be true")));
            }
            entries.extend(row);
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Whether demand for `demand` may be satisfied by `supply`.
    pub fn allows(&self, demand: usize, supply: usize) -> bool {
        self.entries[demand * self.size + supply]
    }

    pub fn count_true(&self) -> usize {
        self.entries.iter().filter(|&&e| e).count()
    }

    /// Supply kinds usable for `demand`, ascending.
    pub fn suppliers_of(&self, demand: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&s| self.allows(demand, s))
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        self.entries.chunks(self.size).map(|c| c.to_vec()).collect()
    }
}

impl TryFrom<Vec<Vec<bool>>> for CompatibilityMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<bool>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<CompatibilityMatrix> for Vec<Vec<bool>> {
    fn from(m: CompatibilityMatrix) -> Self {
        m.rows()
    }
}

/// Named compatibility presets, selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompatPreset {
    Identity,
    Concor1,
}

impl CompatPreset {
    pub fn build(self, resources: &ResourceSet) -> Result<CompatibilityMatrix> {
        match self {
            CompatPreset::Identity => CompatibilityMatrix::identity(resources.len()),
            CompatPreset::Concor1 => CompatibilityMatrix::concor1(resources),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CompatPreset::Identity => "identity",
            CompatPreset::Concor1 => "concor1",
        }
    }
}

impl fmt::Display for CompatPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CompatPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" => Ok(Self::Identity),
            "concor1" | "concor-1" => Ok(Self::Concor1),
            other => Err(Error::InvalidConfig(format!("unknown compatibility preset {other:?}"))),
        }
    }
}

/// A count of 250 ml product units. All engine arithmetic is in these units;
/// 500 ml doses are a reporting conversion only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Unit250(pub u64);

impl Unit250 {
    pub const ZERO: Unit250 = Unit250(0);

    pub fn count(self) -> u64 {
        self.0
    }

    /// Value in 500 ml doses (halves are possible).
    pub fn doses_500ml(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Converts a 500 ml quantity back to 250 ml units. Fails unless the
    /// quantity is a non-negative multiple of one half.
    pub fn from_doses_500ml(doses: f64) -> Result<Self> {
        let twice = doses * 2.0;
        if !twice.is_finite() || twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("{doses} is not a whole number of 250 ml units")));
        }
        Ok(Unit250(twice.round() as u64))
    }

    pub fn saturating_sub(self, other: Unit250) -> Unit250 {
        Unit250(self.0.saturating_sub(other.0))
    }
}

impl Add for Unit250 {
    type Output = Unit250;
    fn add(self, rhs: Unit250) -> Unit250 {
        Unit250(self.0 + rhs.0)
    }
}

impl AddAssign for Unit250 {
    fn add_assign(&mut self, rhs: Unit250) {
        self.0 += rhs.0;
    }
}

impl Sub for Unit250 {
    type Output = Unit250;
    fn sub(self, rhs: Unit250) -> Unit250 {
        Unit250(self.0 - rhs.0)
    }
}

impl Sum for Unit250 {
    fn sum<I: Iterator<Item = Unit250>>(iter: I) -> Unit250 {
        Unit250(iter.map(|u| u.0).sum())
    }
}

impl fmt::Display for Unit250 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Week number counted from the start of the scenario, starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeekIndex(pub usize);

impl WeekIndex {
    pub fn new(t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidConfig("week indices start at 1".into()));
        }
        Ok(Self(t))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn next(self) -> Self {
        Self(self.0 + 1)
    }
}

impl fmt::Display for WeekIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A demand hub (customer) of the single supplier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HubId {
    pub index: usize,
    pub label: String,
}

/// Who owns a series: the supplier or one of the hubs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entity {
    Supplier,
    Hub(usize),
}

/// Weekly cumulative counts for one (entity, resource) stream.
///
/// `values[k]` is the cumulative count at the end of week `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeSeries {
    pub owner: Entity,
    /// `None` for aggregate (all-resource) streams.
    pub resource: Option<usize>,
    pub values: Vec<i64>,
    #[serde(default)]
    pub holiday_weeks: BTreeSet<usize>,
}

impl CumulativeSeries {
    /// Builds a cumulative series by prefix-summing weekly counts.
    pub fn from_increments(owner: Entity, resource: Option<usize>, increments: &[u64], holiday_weeks: BTreeSet<usize>) -> Self {
        let mut acc = 0i64;
        let values = increments
            .iter()
            .map(|&x| {
                acc += x as i64;
                acc
            })
            .collect();
        Self { owner, resource, values, holiday_weeks }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Current week `t` (the number of observed weeks).
    pub fn current_week(&self) -> usize {
        self.values.len()
    }

    pub fn last(&self) -> i64 {
        self.values.last().copied().unwrap_or(0)
    }

    /// The first `weeks` observations.
    pub fn truncated(&self, weeks: usize) -> CumulativeSeries {
        CumulativeSeries {
            owner: self.owner,
            resource: self.resource,
            values: self.values[..weeks.min(self.values.len())].to_vec(),
            holiday_weeks: self.holiday_weeks.clone(),
        }
    }

    pub fn is_holiday(&self, week: usize) -> bool {
        self.holiday_weeks.contains(&week)
    }
}

/// A monotonicity or sign violation found by [`validate_series`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeriesViolation {
    /// 1-based position in the series.
    pub index: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    Negative,
    Decreasing,
}

/// Reports every index where the series is negative or decreases.
pub fn validate_series(values: &[i64]) -> std::result::Result<(), Vec<SeriesViolation>> {
    let mut violations = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v < 0 {
            violations.push(SeriesViolation { index: i + 1, kind: ViolationKind::Negative });
        }
        if i > 0 && v < values[i - 1] {
            violations.push(SeriesViolation { index: i + 1, kind: ViolationKind::Decreasing });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matrix_shapes() {
        let m = CompatibilityMatrix::identity(4).unwrap();
        for r in 0..4 {
            for s in 0..4 {
                assert_eq!(m.allows(r, s), r == s);
            }
        }
        let one = CompatibilityMatrix::identity(1).unwrap();
        assert_eq!(one.rows(), vec![vec![true]]);
        assert!(!CompatibilityMatrix::identity(2).unwrap().allows(0, 1));
        assert!(matches!(CompatibilityMatrix::identity(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn concor1_rules() {
        let abo = ResourceSet::abo();
        let m = CompatibilityMatrix::concor1(&abo).unwrap();
        let idx = |l| abo.index_of(l).unwrap();
        assert!(m.allows(idx("O"), idx("A")));
        assert!(m.allows(idx("B"), idx("AB")));
        assert!(!m.allows(idx("A"), idx("O")));
        assert!(!m.allows(idx("AB"), idx("B")));
        assert_eq!(m.count_true(), 6);

        // Enumerate: the only off-diagonal entries are the two rules.
        let mut off = vec![];
        for r in 0..4 {
            for s in 0..4 {
                if r != s && m.allows(r, s) {
                    off.push((abo.label(r).to_string(), abo.label(s).to_string()));
                }
            }
        }
        assert_eq!(off, vec![("O".to_string(), "A".to_string()), ("B".to_string(), "AB".to_string())]);
    }

    #[test]
    fn concor1_is_order_independent_but_label_strict() {
        let shuffled = ResourceSet::new(&["AB", "B", "O", "A"]).unwrap();
        let m = CompatibilityMatrix::concor1(&shuffled).unwrap();
        assert!(m.allows(2, 3)); // O <- A
        assert!(m.allows(1, 0)); // B <- AB

        let wrong = ResourceSet::new(&["A", "O"]).unwrap();
        assert!(matches!(CompatibilityMatrix::concor1(&wrong), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn matrix_json_rejects_false_diagonal() {
        let bad: std::result::Result<CompatibilityMatrix, _> = serde_json::from_str("[[true,false],[false,false]]");
        assert!(bad.is_err());
        let ok: CompatibilityMatrix = serde_json::from_str("[[true,false],[true,true]]").unwrap();
        assert!(ok.allows(1, 0));
    }

    #[test]
    fn validate_series_cases() {
        assert!(validate_series(&[0, 2, 5]).is_ok());
        assert!(validate_series(&[]).is_ok());
        let err = validate_series(&[3, 1]).unwrap_err();
        assert_eq!(err, vec![SeriesViolation { index: 2, kind: ViolationKind::Decreasing }]);
        let err = validate_series(&[-1, 0]).unwrap_err();
        assert_eq!(err[0].kind, ViolationKind::Negative);
    }

    #[test]
    fn unit_conversion() {
        assert_eq!(Unit250(3).doses_500ml(), 1.5);
        assert_eq!(Unit250::from_doses_500ml(84.5).unwrap(), Unit250(169));
        assert!(Unit250::from_doses_500ml(0.3).is_err());
    }

    #[test]
    fn cumulative_from_increments() {
        let s = CumulativeSeries::from_increments(Entity::Supplier, Some(0), &[2, 0, 3], BTreeSet::new());
        assert_eq!(s.values, vec![2, 2, 5]);
        assert!(validate_series(&s.values).is_ok());
    }
}
