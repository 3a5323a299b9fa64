//! CSV ingestion of supplier stock snapshots and hub unit records, and
//! aggregation into a weekly [`Scenario`].
//!
//! Supplier file columns: `date,A,AB,B,O,Total` (stock after shipment).
//! Hub file columns: `hospitalhub_ID,receiveddate,DNL,productABOgroup,
//! productdose,matched,thawed`. Header names are matched case-insensitively.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::domain::{ResourceSet, Unit250};
use crate::error::{Error, Result};

/// Supplier stock snapshot, in 250 ml units, ABO order `A, O, B, AB`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplyRecord {
    pub date: NaiveDate,
    pub counts: [u64; 4],
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubUnitRecord {
    pub hub_id: String,
    pub received_date: NaiveDate,
    pub unit_id: String,
    /// Index into [`ResourceSet::abo`].
    pub abo_group: usize,
    /// 1 for 250 ml, 2 for 500 ml.
    pub dose: u8,
    pub matched: bool,
    pub thawed_broken: bool,
}

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(headers: &csv::StringRecord) -> Self {
        let index = headers.iter().enumerate().map(|(i, h)| (h.trim().to_ascii_lowercase(), i)).collect();
        Self { index }
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index.get(&name.to_ascii_lowercase()).copied().ok_or_else(|| Error::Row { line: 1, message: format!("missing column {name:?}") })
    }
}

fn row_err(line: u64, message: impl Into<String>) -> Error {
    Error::Row { line, message: message.into() }
}

fn parse_date(s: &str, line: u64) -> Result<NaiveDate> {
    let s = s.trim();
    for fmt in ["%Y-%m-%d", "%m/%d/%Y", "%d-%b-%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(s, fmt) {
            return Ok(d);
        }
    }
    Err(row_err(line, format!("unparseable date {s:?}")))
}

fn parse_count(s: &str, column: &str, line: u64) -> Result<u64> {
    let v: i64 = s.trim().parse().map_err(|_| row_err(line, format!("{column}: not an integer: {s:?}")))?;
    if v < 0 {
        return Err(row_err(line, format!("{column}: negative count {v}")));
    }
    Ok(v as u64)
}

fn parse_bool(s: &str, column: &str, line: u64) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" | "y" => Ok(true),
        "0" | "false" | "f" | "no" | "n" | "" => Ok(false),
        other => Err(row_err(line, format!("{column}: not a boolean: {other:?}"))),
    }
}

fn reader<R: Read>(mut input: R, what: &str) -> Result<Option<csv::Reader<std::io::Cursor<Vec<u8>>>>> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.iter().all(|b| b.is_ascii_whitespace()) {
        warn!("{what} file is empty");
        return Ok(None);
    }
    Ok(Some(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(std::io::Cursor::new(buf))))
}

pub fn load_supply_csv<R: Read>(input: R) -> Result<Vec<SupplyRecord>> {
    let Some(mut rdr) = reader(input, "supply")? else {
        return Ok(Vec::new());
    };
    let cols = Columns::new(rdr.headers()?);
    let date = cols.require("date")?;
    let groups = [cols.require("A")?, cols.require("O")?, cols.require("B")?, cols.require("AB")?];
    let total = cols.require("Total")?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| rec.get(i).ok_or_else(|| row_err(line, "short row"));
        let mut counts = [0u64; 4];
        for (k, &i) in groups.iter().enumerate() {
            counts[k] = parse_count(get(i)?, ["A", "O", "B", "AB"][k], line)?;
        }
        let total = parse_count(get(total)?, "Total", line)?;
        if total != counts.iter().sum::<u64>() {
            return Err(row_err(line, format!("Total {total} does not equal the group sum {}", counts.iter().sum::<u64>())));
        }
        out.push(SupplyRecord { date: parse_date(get(date)?, line)?, counts, total });
    }
    if out.is_empty() {
        warn!("supply file has no rows");
    }
    Ok(out)
}

pub fn load_hub_csv<R: Read>(input: R) -> Result<Vec<HubUnitRecord>> {
    let Some(mut rdr) = reader(input, "hub")? else {
        return Ok(Vec::new());
    };
    let cols = Columns::new(rdr.headers()?);
    let hub = cols.require("hospitalhub_ID")?;
    let date = cols.require("receiveddate")?;
    let dnl = cols.require("DNL")?;
    let group = cols.require("productABOgroup")?;
    let dose = cols.require("productdose")?;
    let matched = cols.require("matched")?;
    let thawed = cols.require("thawed")?;
    let abo = ResourceSet::abo();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| rec.get(i).ok_or_else(|| row_err(line, "short row"));
        let g = get(group)?;
        let abo_group = abo.index_of(g).ok_or_else(|| row_err(line, format!("unknown ABO group {g:?}")))?;
        let d = parse_count(get(dose)?, "productdose", line)?;
        if !(1..=2).contains(&d) {
            return Err(row_err(line, format!("productdose must be 1 or 2, got {d}")));
        }
        let record = HubUnitRecord {
            hub_id: get(hub)?.to_string(),
            received_date: parse_date(get(date)?, line)?,
            unit_id: get(dnl)?.to_string(),
            abo_group,
            dose: d as u8,
            matched: parse_bool(get(matched)?, "matched", line)?,
            thawed_broken: parse_bool(get(thawed)?, "thawed", line)?,
        };
        if record.thawed_broken {
            log::debug!("line {line}: unit {} flagged as thawed/broken", record.unit_id);
        }
        out.push(record);
    }
    if out.is_empty() {
        warn!("hub file has no rows");
    }
    Ok(out)
}

/// Reads both files.
pub fn load_csv(supply_file: &Path, hub_file: &Path) -> Result<(Vec<SupplyRecord>, Vec<HubUnitRecord>)> {
    let supply = load_supply_csv(std::fs::File::open(supply_file)?)?;
    let hubs = load_hub_csv(std::fs::File::open(hub_file)?)?;
    Ok((supply, hubs))
}

/// Week number of `date`, counting 7-day blocks from `anchor` (week 1).
fn week_of(date: NaiveDate, anchor: NaiveDate) -> Option<usize> {
    let days = (date - anchor).num_days();
    (days >= 0).then(|| days as usize / 7 + 1)
}

/// Aggregates records into weekly new supply and demand.
///
/// Demand counts matched, intact units by received week, dose-weighted.
/// New supply is the units received by hubs that week plus the change in the
/// supplier's after-shipment stock (stock before week 1 is zero).
pub fn build_weekly(supply: &[SupplyRecord], units: &[HubUnitRecord], anchor: NaiveDate) -> Result<Scenario> {
    for pair in supply.windows(2) {
        if pair[1].date <= pair[0].date {
            return Err(Error::InvalidConfig(format!("supply snapshots out of order: {} after {}", pair[1].date, pair[0].date)));
        }
    }
    let intact: Vec<&HubUnitRecord> = units.iter().filter(|u| !u.thawed_broken).collect();
    let mut weeks = 0usize;
    for s in supply {
        match week_of(s.date, anchor) {
            Some(w) => weeks = weeks.max(w),
            None => return Err(Error::InvalidConfig(format!("supply snapshot {} precedes the anchor {anchor}", s.date))),
        }
    }
    for u in &intact {
        match week_of(u.received_date, anchor) {
            Some(w) => weeks = weeks.max(w),
            None => return Err(Error::InvalidConfig(format!("unit {} received {} before the anchor {anchor}", u.unit_id, u.received_date))),
        }
    }

    let hubs: Vec<String> = intact.iter().map(|u| u.hub_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let hub_index: BTreeMap<&str, usize> = hubs.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();

    let mut demand = vec![vec![vec![Unit250::ZERO; 4]; hubs.len()]; weeks];
    let mut received = vec![[0u64; 4]; weeks];
    for u in &intact {
        let w = week_of(u.received_date, anchor).expect("checked above") - 1;
        received[w][u.abo_group] += u.dose as u64;
        if u.matched {
            demand[w][hub_index[u.hub_id.as_str()]][u.abo_group] += Unit250(u.dose as u64);
        }
    }

    // Stock at the end of each week: the last snapshot in or before it.
    let mut stock = vec![[0u64; 4]; weeks];
    let mut current = [0u64; 4];
    let mut next = supply.iter().peekable();
    for (w, slot) in stock.iter_mut().enumerate() {
        while let Some(s) = next.next_if(|s| week_of(s.date, anchor) == Some(w + 1)) {
            current = s.counts;
        }
        *slot = current;
    }

    let mut new_supply = vec![vec![Unit250::ZERO; 4]; weeks];
    for w in 0..weeks {
        for r in 0..4 {
            let prev = if w == 0 { 0 } else { stock[w - 1][r] as i64 };
            let v = received[w][r] as i64 + stock[w][r] as i64 - prev;
            if v < 0 {
                warn!("week {}: inferred supply for group {} is {v}; clamped to 0", w + 1, ResourceSet::abo().label(r));
            }
            new_supply[w][r] = Unit250(v.max(0) as u64);
        }
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("source".into(), "csv".into());
    metadata.insert("anchor".into(), anchor.to_string());
    let scenario = Scenario {
        resources: ResourceSet::abo(),
        hubs,
        weeks,
        supply: new_supply,
        demand,
        holiday_weeks: BTreeSet::new(),
        metadata,
    };
    scenario.validate()?;
    Ok(scenario)
}
