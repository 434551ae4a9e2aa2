//! Empirical rate summaries with binomial 3-sigma half-widths.

use std::fmt;

use crate::harness::report::SimReport;

#[derive(Clone, Debug, PartialEq)]
pub struct RateEstimate {
    pub label: String,
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub half_width_3sigma: f64,
}

impl RateEstimate {
    fn new(label: String, successes: u64, trials: u64) -> RateEstimate {
        let (rate, half_width_3sigma) = if trials == 0 {
            (0.0, 0.0)
        } else {
            let p = successes as f64 / trials as f64;
            (p, 3.0 * (p * (1.0 - p) / trials as f64).sqrt())
        };
        RateEstimate {
            label,
            successes,
            trials,
            rate,
            half_width_3sigma,
        }
    }
}

impl fmt::Display for RateEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}/{} = {:.4} +/- {:.4}",
            self.label, self.successes, self.trials, self.rate, self.half_width_3sigma
        )
    }
}

/// Empirical frequencies for everything countable in a report.
pub fn estimate_rates(report: &SimReport) -> Vec<RateEstimate> {
    let mut rates = Vec::new();
    for s in &report.strategies {
        rates.push(RateEstimate::new(
            format!("{} win rate", s.kind),
            s.wins,
            s.attempts,
        ));
        if s.rolls > 0 {
            rates.push(RateEstimate::new(
                format!("{} per-roll win rate", s.kind),
                s.wins,
                s.rolls,
            ));
        }
    }
    for (i, &wins) in report.per_player_draw_wins.iter().enumerate() {
        rates.push(RateEstimate::new(
            format!("player {} draw frequency", i),
            wins,
            report.draws_total,
        ));
    }
    if let Some(forecast) = &report.mitigation_forecast_accuracy {
        rates.push(RateEstimate::new(
            "forecast accuracy".to_string(),
            forecast.matches,
            forecast.draws,
        ));
    }
    rates
}
