//! Forecast accuracy (RMSE, MAPE) and allocation fairness summaries.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{Entity, Unit250};
use crate::error::{Error, Result};
use crate::forecast::ForecastStep;

/// Multiplier turning a standard error into a 95% half-width.
pub const Z95: f64 = 1.96;

pub fn rmse(actuals: &[f64], forecasts: &[f64]) -> Result<f64> {
    if actuals.len() != forecasts.len() {
        return Err(Error::LengthMismatch(actuals.len(), forecasts.len()));
    }
    if actuals.is_empty() {
        return Err(Error::UndefinedMetric("rmse of an empty series".into()));
    }
    let sse: f64 = actuals.iter().zip(forecasts).map(|(a, f)| (a - f).powi(2)).sum();
    Ok((sse / actuals.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mape {
    /// Percentage.
    pub value: f64,
    /// Weeks skipped because the actual value was zero.
    pub skipped: usize,
}

pub fn mape(actuals: &[f64], forecasts: &[f64]) -> Result<Mape> {
    if actuals.len() != forecasts.len() {
        return Err(Error::LengthMismatch(actuals.len(), forecasts.len()));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (a, f) in actuals.iter().zip(forecasts) {
        if *a > 0.0 {
            sum += (a - f).abs() / a;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::UndefinedMetric("mape with no positive actual values".into()));
    }
    Ok(Mape { value: 100.0 * sum / n as f64, skipped: actuals.len() - n })
}

/// Whether errors are measured on cumulative values or weekly increments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccuracyBasis {
    #[default]
    Cumulative,
    Weekly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastAccuracy {
    pub entity: Entity,
    pub resource: Option<usize>,
    pub rmse: f64,
    /// `None` when every scored actual is zero.
    pub mape: Option<f64>,
    pub mape_skipped: usize,
    pub n: usize,
}

/// Scores the forecast steps of one stream against its actual cumulative
/// values, starting at the first week with a model-issued forecast.
pub fn score_stream(entity: Entity, resource: Option<usize>, actual_cumulative: &[i64], steps: &[ForecastStep], basis: AccuracyBasis) -> Result<ForecastAccuracy> {
    let first = steps.iter().position(|s| s.issued().is_some()).ok_or_else(|| Error::UndefinedMetric("no issued forecasts to score".into()))?;
    let mut a = Vec::new();
    let mut f = Vec::new();
    for step in &steps[first..] {
        let w = step.week().get();
        if w > actual_cumulative.len() {
            break;
        }
        let actual = actual_cumulative[w - 1];
        match basis {
            AccuracyBasis::Cumulative => {
                a.push(actual as f64);
                f.push(step.implied_cumulative() as f64);
            }
            AccuracyBasis::Weekly => {
                let prev = if w >= 2 { actual_cumulative[w - 2] } else { 0 };
                a.push((actual - prev) as f64);
                f.push(step.increment().0 as f64);
            }
        }
    }
    let rmse = rmse(&a, &f)?;
    let (mape, mape_skipped) = match mape(&a, &f) {
        Ok(m) => (Some(m.value), m.skipped),
        Err(Error::UndefinedMetric(_)) => (None, a.len()),
        Err(e) => return Err(e),
    };
    Ok(ForecastAccuracy { entity, resource, rmse, mape, mape_skipped, n: a.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubFairness {
    pub hub: usize,
    /// Total actual demand over the horizon, in 500 ml doses.
    pub total_demand: f64,
    /// Mean final unmet demand `ū_T`, in 500 ml doses.
    pub mean_unmet: f64,
    pub se_unmet: f64,
    /// Mean unmet ratio `z̄_T` in percent.
    pub mean_ratio_pct: f64,
    pub se_ratio_pct: f64,
    /// Set when the hub had no demand; its ratio is reported as 0.
    pub zero_demand: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessSummary {
    pub runs: usize,
    pub hubs: Vec<HubFairness>,
    /// Same statistics for the sum over hubs.
    pub total: HubFairness,
    /// How `se_*` columns are defined.
    pub se_convention: String,
}

/// Mean and 95% half-width from exact integer moments.
fn mean_and_se(values: &[u64]) -> (f64, f64) {
    let m = values.len() as u128;
    let s1: u128 = values.iter().map(|&v| v as u128).sum();
    let s2: u128 = values.iter().map(|&v| (v as u128) * (v as u128)).sum();
    let mean = s1 as f64 / m as f64;
    if m < 2 {
        return (mean, 0.0);
    }
    let var = (m * s2 - s1 * s1) as f64 / (m * (m - 1)) as f64;
    (mean, Z95 * var.sqrt() / (m as f64).sqrt())
}

fn hub_stats(hub: usize, unmet: &[u64], demand: Unit250) -> HubFairness {
    let (mean, se) = mean_and_se(unmet);
    let zero_demand = demand.0 == 0;
    let to_pct = |x: f64| if zero_demand { 0.0 } else { 100.0 * x / demand.0 as f64 };
    HubFairness {
        hub,
        total_demand: demand.doses_500ml(),
        mean_unmet: mean / 2.0,
        se_unmet: se / 2.0,
        mean_ratio_pct: to_pct(mean),
        se_ratio_pct: to_pct(se),
        zero_demand,
    }
}

/// `per_run_unmet[k][h]` is run `k`'s final unmet demand at hub `h`, summed
/// over resources.
pub fn fairness_summary(per_run_unmet: &[Vec<Unit250>], hub_demand: &[Unit250]) -> Result<FairnessSummary> {
    if per_run_unmet.is_empty() {
        return Err(Error::InvalidConfig("fairness summary needs at least one run".into()));
    }
    if let Some(bad) = per_run_unmet.iter().find(|r| r.len() != hub_demand.len()) {
        return Err(Error::LengthMismatch(bad.len(), hub_demand.len()));
    }
    let hubs = (0..hub_demand.len())
        .map(|h| {
            let col: Vec<u64> = per_run_unmet.iter().map(|r| r[h].0).collect();
            hub_stats(h, &col, hub_demand[h])
        })
        .collect();
    let totals: Vec<u64> = per_run_unmet.iter().map(|r| r.iter().map(|u| u.0).sum()).collect();
    let total = hub_stats(usize::MAX, &totals, hub_demand.iter().copied().sum());
    Ok(FairnessSummary {
        runs: per_run_unmet.len(),
        hubs,
        total,
        se_convention: format!("{Z95} * sample_std / sqrt(m); 0 when m = 1"),
    })
}

/// One compatibility setting's column group in the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub setting: String,
    pub summary: FairnessSummary,
}

/// Writes `hub,total_demand,total_forecast_demand,<setting>_u,<setting>_u_se,
/// <setting>_z,<setting>_z_se,...`, one row per hub plus a `total` row.
/// Quantities are 500 ml doses and ratios are percentages.
pub fn write_summary_csv<W: Write>(hub_names: &[String], forecast_demand: &[f64], settings: &[SettingSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["hub".to_string(), "total_demand".into(), "total_forecast_demand".into()];
    for s in settings {
        for suffix in ["u", "u_se", "z", "z_se"] {
            header.push(format!("{}_{suffix}", s.setting));
        }
    }
    w.write_record(&header)?;
    let Some(first) = settings.first() else {
        w.flush()?;
        return Ok(());
    };
    let row = |name: String, demand: f64, forecast: f64, pick: &dyn Fn(&FairnessSummary) -> &HubFairness| {
        let mut rec = vec![name, format!("{demand:.1}"), format!("{forecast:.1}")];
        for s in settings {
            let f = pick(&s.summary);
            rec.extend([format!("{:.2}", f.mean_unmet), format!("{:.2}", f.se_unmet), format!("{:.2}", f.mean_ratio_pct), format!("{:.2}", f.se_ratio_pct)]);
        }
        rec
    };
    for (h, name) in hub_names.iter().enumerate() {
        let demand = first.summary.hubs[h].total_demand;
        w.write_record(row(name.clone(), demand, forecast_demand[h], &|s| &s.hubs[h]))?;
    }
    w.write_record(row("total".into(), first.summary.total.total_demand, forecast_demand.iter().sum(), &|s| &s.total))?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::WeekIndex;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[10.0], &[13.0]).unwrap(), 3.0);
        assert!((rmse(&[0.0, 4.0], &[3.0, 0.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
    }

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&[3.0], &[3.0]).unwrap().value, 0.0);
        assert!((mape(&[10.0], &[12.0]).unwrap().value - 20.0).abs() < 1e-12);
        let m = mape(&[0.0, 10.0], &[5.0, 15.0]).unwrap();
        assert!((m.value - 50.0).abs() < 1e-12);
        assert_eq!(m.skipped, 1);
        assert!(matches!(mape(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn fairness_examples() {
        let s = fairness_summary(&[vec![Unit250(2)]], &[Unit250(10)]).unwrap();
        assert_eq!(s.hubs[0].mean_unmet, 1.0);
        assert_eq!(s.hubs[0].se_unmet, 0.0);
        assert!((s.hubs[0].mean_ratio_pct - 20.0).abs() < 1e-12);

        let s = fairness_summary(&[vec![Unit250(2)]], &[Unit250(25)]).unwrap();
        assert_eq!(format!("{:.2}", s.hubs[0].mean_ratio_pct), "8.00");

        let s = fairness_summary(&[vec![Unit250(4)], vec![Unit250(8)]], &[Unit250(40)]).unwrap();
        assert_eq!(s.hubs[0].mean_unmet, 3.0);
        let want = Z95 * 2f64.sqrt() / 2f64.sqrt();
        assert!((s.hubs[0].se_unmet - want).abs() < 1e-12);
    }

    #[test]
    fn zero_demand_hub_is_flagged() {
        let s = fairness_summary(&[vec![Unit250(0), Unit250(1)]], &[Unit250(0), Unit250(4)]).unwrap();
        assert!(s.hubs[0].zero_demand);
        assert_eq!(s.hubs[0].mean_ratio_pct, 0.0);
        assert!(fairness_summary(&[], &[Unit250(1)]).is_err());
    }

    #[test]
    fn run_order_does_not_matter() {
        let runs = vec![vec![Unit250(3), Unit250(0)], vec![Unit250(5), Unit250(2)], vec![Unit250(1), Unit250(7)]];
        let mut rev = runs.clone();
        rev.reverse();
        let d = [Unit250(20), Unit250(30)];
        assert_eq!(fairness_summary(&runs, &d).unwrap(), fairness_summary(&rev, &d).unwrap());
    }

    #[test]
    fn stream_scoring_starts_at_first_issue() {
        use crate::forecast::{clamp_forecast, ForecastStep};
        let steps = vec![
            ForecastStep::Fallback { week: WeekIndex(2), increment: Unit250(9), last_actual: 1 },
            ForecastStep::Issued(clamp_forecast(WeekIndex(3), 4.0, 4.0, 2, None)),
        ];
        let acc = score_stream(Entity::Supplier, Some(0), &[1, 2, 5], &steps, AccuracyBasis::Cumulative).unwrap();
        assert_eq!(acc.n, 1);
        assert_eq!(acc.rmse, 1.0);
        let acc = score_stream(Entity::Supplier, Some(0), &[1, 2, 5], &steps, AccuracyBasis::Weekly).unwrap();
        assert_eq!(acc.rmse, 1.0);
    }
}
