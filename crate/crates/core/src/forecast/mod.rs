//! Online one-week-ahead forecasting of cumulative series.
//!
//! Each week the whole history is refit: MARS fit, extrapolation along the
//! last piece, AR(l) correction of the in-sample residuals, then a clamp so
//! that issued cumulative forecasts never decrease.

pub mod ar;
pub mod mars;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use ar::{fit_ar, predict_error, ArModel};
pub use mars::{extrapolate, fit_mars, MarsConfig, MarsModel};

use crate::domain::{CumulativeSeries, Unit250, WeekIndex};
use crate::error::{Error, Result};

/// Which week triggers holiday damping of the extrapolated slope.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolidayMode {
    /// Damp when the week being forecast is a holiday week.
    #[default]
    TargetWeek,
    /// Damp when the last observed week (end of the fitted piece) is a holiday week.
    FittedSegment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    pub mars: MarsConfig,
    pub ar_lag: usize,
    /// Minimum number of observed weeks before a model forecast is issued.
    pub warmup: usize,
    pub holiday_factor: f64,
    pub holiday_mode: HolidayMode,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            mars: MarsConfig::default(),
            ar_lag: 1,
            warmup: 4,
            holiday_factor: 0.7,
            holiday_mode: HolidayMode::TargetWeek,
        }
    }
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        self.mars.validate()?;
        if self.ar_lag == 0 {
            return Err(Error::InvalidConfig("ar_lag must be >= 1".into()));
        }
        if self.warmup < 2 {
            return Err(Error::InvalidConfig("warmup must be >= 2 weeks".into()));
        }
        if !(self.holiday_factor.is_finite() && self.holiday_factor >= 0.0) {
            return Err(Error::InvalidConfig("holiday_factor must be a non-negative number".into()));
        }
        Ok(())
    }
}

/// The forecast published for week `t + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssuedForecast {
    pub week: WeekIndex,
    /// MARS extrapolation `ŷ'_{t+1}`.
    pub raw_cumulative: f64,
    /// `ŷ'_{t+1} + ε̂_{t+1}`.
    pub corrected_cumulative: f64,
    /// After the non-decreasing clamp.
    pub issued_cumulative: f64,
    pub weekly_increment: Unit250,
    /// Observed cumulative value at week `t`.
    pub last_actual: i64,
}

/// Rounds halves away from negative infinity (`2.5 -> 3`, `-2.5 -> -2`).
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Runs the full pipeline on `series` (weeks `1..=t`) and issues the
/// forecast for week `t + 1`.
pub fn forecast_week(series: &CumulativeSeries, prev_issued: Option<f64>, cfg: &ForecastConfig) -> Result<IssuedForecast> {
    cfg.validate()?;
    let t = series.current_week();
    if t < cfg.warmup {
        return Err(Error::Warmup { history: t, warmup: cfg.warmup });
    }
    let y: Vec<f64> = series.values.iter().map(|&v| v as f64).collect();
    let model = fit_mars(&y, &cfg.mars)?;

    let holiday = match cfg.holiday_mode {
        HolidayMode::TargetWeek => series.is_holiday(t + 1),
        HolidayMode::FittedSegment => series.is_holiday(t),
    };
    let raw = extrapolate(&model.fitted, holiday, cfg.holiday_factor);

    let residuals: Vec<f64> = y.iter().zip(&model.fitted).map(|(a, f)| a - f).collect();
    let ar = fit_ar(&residuals, cfg.ar_lag);
    let correction = predict_error(&ar, &residuals);
    let corrected = raw + correction;

    Ok(clamp_forecast(WeekIndex(t + 1), raw, corrected, series.last(), prev_issued))
}

/// Applies the online clamp and derives the integer weekly increment.
pub fn clamp_forecast(week: WeekIndex, raw: f64, corrected: f64, last_actual: i64, prev_issued: Option<f64>) -> IssuedForecast {
    let floor = prev_issued.unwrap_or(last_actual as f64);
    let issued = corrected.max(floor);
    let increment = (round_half_up(issued) - last_actual).max(0) as u64;
    IssuedForecast {
        week,
        raw_cumulative: raw,
        corrected_cumulative: corrected,
        issued_cumulative: issued,
        weekly_increment: Unit250(increment),
        last_actual,
    }
}

/// Increment used before the warmup period ends: the last observed weekly
/// increment, or zero with fewer than two weeks.
pub fn fallback_increment(values: &[i64]) -> Unit250 {
    match values {
        [] => Unit250::ZERO,
        [first] => Unit250((*first).max(0) as u64),
        [.., prev, last] => Unit250((last - prev).max(0) as u64),
    }
}

/// Outcome of one online forecasting step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ForecastStep {
    Issued(IssuedForecast),
    Fallback { week: WeekIndex, increment: Unit250, last_actual: i64 },
}

impl ForecastStep {
    pub fn increment(&self) -> Unit250 {
        match self {
            ForecastStep::Issued(f) => f.weekly_increment,
            ForecastStep::Fallback { increment, .. } => *increment,
        }
    }

    pub fn week(&self) -> WeekIndex {
        match self {
            ForecastStep::Issued(f) => f.week,
            ForecastStep::Fallback { week, .. } => *week,
        }
    }

    pub fn issued(&self) -> Option<&IssuedForecast> {
        match self {
            ForecastStep::Issued(f) => Some(f),
            ForecastStep::Fallback { .. } => None,
        }
    }

    /// Cumulative value implied by the increment actually used downstream.
    pub fn implied_cumulative(&self) -> i64 {
        match self {
            ForecastStep::Issued(f) => f.last_actual + f.weekly_increment.0 as i64,
            ForecastStep::Fallback { increment, last_actual, .. } => last_actual + increment.0 as i64,
        }
    }
}

/// Stateful forecaster for one stream; remembers the last issued value so
/// issued cumulative forecasts stay non-decreasing.
#[derive(Debug, Clone)]
pub struct OnlineForecaster {
    cfg: ForecastConfig,
    prev_issued: Option<f64>,
}

impl OnlineForecaster {
    pub fn new(cfg: ForecastConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, prev_issued: None })
    }

    /// Forecasts the week after the last observation in `history`.
    pub fn step(&mut self, history: &CumulativeSeries) -> Result<ForecastStep> {
        match forecast_week(history, self.prev_issued, &self.cfg) {
            Ok(f) => {
                self.prev_issued = Some(f.issued_cumulative);
                Ok(ForecastStep::Issued(f))
            }
            Err(Error::Warmup { .. }) => Ok(ForecastStep::Fallback {
                week: WeekIndex(history.current_week() + 1),
                increment: fallback_increment(&history.values),
                last_actual: history.last(),
            }),
            Err(e) => Err(e),
        }
    }

    /// Replays the forecaster over every prefix of `series`, returning the
    /// step issued for each week `2..=len` (week 1 has no history).
    pub fn replay(cfg: &ForecastConfig, series: &CumulativeSeries) -> Result<Vec<ForecastStep>> {
        let mut fc = Self::new(cfg.clone())?;
        (1..series.len()).map(|t| fc.step(&series.truncated(t))).collect()
    }
}

/// One row of the per-week forecast debug dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastRow {
    pub week: usize,
    pub entity: String,
    pub resource: String,
    pub raw: Option<f64>,
    pub corrected: Option<f64>,
    pub issued: Option<f64>,
    pub increment: u64,
}

/// Writes `week,entity,resource,raw,corrected,issued,increment` CSV.
/// Fallback weeks leave the model columns empty.
pub fn write_forecast_dump<W: Write>(rows: &[ForecastRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
