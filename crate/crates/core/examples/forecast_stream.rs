//! Replays the online forecaster over one noisy cumulative stream, then
//! shows the MARS fit and AR(1) correction for the final week.

use epialloc::domain::{CumulativeSeries, Entity};
use epialloc::forecast::{fit_ar, fit_mars, ForecastConfig, ForecastStep, OnlineForecaster};

fn main() -> epialloc::Result<()> {
    let increments = [3, 4, 2, 5, 4, 9, 11, 10, 12, 14, 9, 6, 7, 5, 6];
    let holidays = [13].into_iter().collect();
    let series = CumulativeSeries::from_increments(Entity::Supplier, Some(0), &increments, holidays);
    let cfg = ForecastConfig::default();

    println!("week  actual  issued  increment");
    for step in OnlineForecaster::replay(&cfg, &series)? {
        let w = step.week().get();
        let issued = step.issued().map_or("warmup".to_string(), |f| format!("{:.2}", f.issued_cumulative));
        let kind = if matches!(step, ForecastStep::Fallback { .. }) { " (fallback)" } else { "" };
        println!("{w:>4}  {:>6}  {issued:>6}  {:>4}{kind}", series.values[w - 1], step.increment());
    }

    let y: Vec<f64> = series.values.iter().map(|&v| v as f64).collect();
    let model = fit_mars(&y, &cfg.mars)?;
    println!("\nknots {:?}, {} terms, gcv {:.3}", model.knots(), model.terms.len(), model.gcv);
    let residuals: Vec<f64> = y.iter().zip(&model.fitted).map(|(a, f)| a - f).collect();
    println!("ar(1) on residuals: {:?}", fit_ar(&residuals, 1).coeffs);
    Ok(())
}
