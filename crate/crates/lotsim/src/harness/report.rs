//! Deterministic, canonically serialized run reports.
//!
//! Identical runs produce byte-identical reports: struct fields serialize in
//! declaration order, collections are index- or address-ordered, and wei
//! amounts are decimal strings.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::harness::config::ScenarioConfig;
use crate::harness::HarnessError;
use crate::u256::U256;

/// Aggregated outcome of one strategy across all trials.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrategyReport {
    pub kind: String,
    /// Buys issued / entries made / forecasts made, per the strategy kind.
    pub attempts: u64,
    /// Airdrops won / draws won / forecast matches / bypasses achieved.
    pub wins: u64,
    /// Qualifying buys that actually rolled the airdrop.
    pub rolls: u64,
    /// Sum of the tracker values those rolls were evaluated against; divided
    /// by `rolls` and by 1000 it gives the expected per-roll win rate.
    pub tracker_sum_at_roll: u64,
    /// Signed decimal wei: final holdings minus initial holdings, summed
    /// over trials (deployed attack contracts count as holdings).
    pub net_balance_delta_wei: String,
}

/// One cell of the caller-class by guard matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GuardMatrixEntry {
    pub caller: String,
    pub guard: String,
    pub passed: bool,
    pub error: Option<String>,
}

/// Forecast-vs-actual accuracy of the block-variables forecaster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForecastReport {
    pub matches: u64,
    pub draws: u64,
    /// matches / draws in millionths, exact integer arithmetic.
    pub accuracy_millionths: u64,
}

/// Deterministic, serializable output of a scenario run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub config_echo: ScenarioConfig,
    pub trials: u32,
    pub draws_total: u64,
    /// Draw wins per player index (creation order), summed over trials.
    pub per_player_draw_wins: Vec<u64>,
    pub strategies: Vec<StrategyReport>,
    pub mitigation_forecast_accuracy: Option<ForecastReport>,
    /// Exhaustive caller-class by guard outcomes, fixed order.
    pub guard_matrix: Vec<GuardMatrixEntry>,
    /// Always true in an emitted report: a failed conservation check aborts
    /// the run instead of producing a report.
    pub conservation_check: bool,
    /// Keccak over the per-trial final chain-state digests, in trial order.
    pub chain_digest: String,
}

/// Signed decimal rendering of `final - initial`.
pub fn signed_delta(initial: U256, final_balance: U256) -> String {
    if final_balance >= initial {
        final_balance
            .checked_sub(initial)
            .expect("final >= initial")
            .to_string()
    } else {
        format!(
            "-{}",
            initial.checked_sub(final_balance).expect("initial > final")
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl SimReport {
    /// Canonical JSON bytes: pretty-printed with a trailing newline.
    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        bytes
    }

    /// Per-strategy stats table: a header row plus one row per strategy.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = String::from("strategy,attempts,wins,net_balance_delta_wei\n");
        for s in &self.strategies {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.kind, s.attempts, s.wins, s.net_balance_delta_wei
            ));
        }
        out.into_bytes()
    }

    pub fn render(&self, format: ReportFormat) -> Vec<u8> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

/// Writes the canonical serialization to `path`.
pub fn emit_report(report: &SimReport, format: ReportFormat, path: &Path) -> Result<(), HarnessError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&report.render(format))?;
    Ok(())
}
