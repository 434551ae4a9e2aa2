//! Scenario configuration: a TOML document with strict field checking, plus
//! validation that names the offending field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attacks::Strategy;
use crate::contracts::{FomoParams, GuardChoice};
use crate::harness::HarnessError;
use crate::mitigations::RandomSource;
use crate::u256::U256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Lottery,
    Fomo3dLite,
}

fn default_interval() -> u64 {
    12
}

fn default_players() -> u32 {
    6
}

fn default_trials() -> u32 {
    1
}

fn default_guard() -> GuardChoice {
    GuardChoice::CodeSize
}

fn default_source() -> RandomSource {
    RandomSource::BlockVars
}

/// Declarative experiment input. Unknown keys are rejected at parse time;
/// field bounds are checked by [`ScenarioConfig::validate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario_seed: u64,
    /// Block budget per trial.
    pub blocks: u64,
    #[serde(default = "default_interval")]
    pub block_interval_seconds: u64,
    /// Size of the lottery player population.
    #[serde(default = "default_players")]
    pub n_players: u32,
    #[serde(default = "default_trials")]
    pub trials: u32,
    pub game: GameKind,
    #[serde(default = "default_guard")]
    pub guard: GuardChoice,
    /// What randomness backs lottery draws. Ignored by the Fomo3D-lite game,
    /// whose airdrop formula is block variables by definition.
    #[serde(default = "default_source")]
    pub randomness_source: RandomSource,
    #[serde(default)]
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub game_params: GameParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameParams {
    /// Wei per key (decimal string in TOML).
    pub key_price: U256,
    /// Seconds each buy pushes the deadline out; 1..=86400.
    pub round_extension: u64,
    /// Minimum msg.value for a buy to roll the airdrop.
    pub airdrop_min_qualifying: U256,
    /// Starting airdrop tracker; must be below 1000.
    pub tracker_init: u64,
    /// Fraction of each key price feeding the airdrop pot, 0.0..=1.0.
    pub airdrop_pot_fraction: f64,
    /// Round length before the first buy extends it.
    pub initial_round_seconds: u64,
    /// Blocks of the commit window in a commit-reveal draw cycle.
    pub commit_phase_blocks: u64,
    /// Blocks of the reveal window in a commit-reveal draw cycle.
    pub reveal_phase_blocks: u64,
    /// How many sources the multi-source combiner mixes (the on-chain value
    /// plus this many minus one external ones).
    pub multi_source_count: u32,
    /// Starting balance minted to every actor.
    pub initial_balance: U256,
    /// Penalty moved from each commit-reveal withholder to the manager at
    /// finalize time; zero disables slashing.
    pub withhold_slash_wei: U256,
}

impl Default for GameParams {
    fn default() -> GameParams {
        GameParams {
            key_price: U256::from(10_000_000_000_000_000u64),
            round_extension: 30,
            airdrop_min_qualifying: U256::from(100_000_000_000_000_000u64),
            tracker_init: 0,
            airdrop_pot_fraction: 0.10,
            initial_round_seconds: 86_400,
            commit_phase_blocks: 1,
            reveal_phase_blocks: 1,
            multi_source_count: 3,
            initial_balance: "1000000000000000000000".parse().expect("valid decimal"),
            withhold_slash_wei: U256::ZERO,
        }
    }
}

impl GameParams {
    /// Parts-per-thousand form of the airdrop pot fraction.
    pub fn airdrop_pot_permille(&self) -> u32 {
        (self.airdrop_pot_fraction * 1000.0).round() as u32
    }

    pub fn to_fomo_params(&self) -> FomoParams {
        FomoParams {
            key_price: self.key_price,
            round_extension_seconds: U256::from(self.round_extension),
            airdrop_min_qualifying: self.airdrop_min_qualifying,
            airdrop_pot_permille: self.airdrop_pot_permille(),
            initial_round_seconds: U256::from(self.initial_round_seconds),
            tracker_init: U256::from(self.tracker_init),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |field: &'static str, message: &str| {
            Err(HarnessError::Validation {
                field,
                message: message.to_string(),
            })
        };
        if self.blocks == 0 {
            return fail("blocks", "must be at least 1");
        }
        if self.trials == 0 {
            return fail("trials", "must be at least 1");
        }
        if self.block_interval_seconds == 0 {
            return fail("block_interval_seconds", "must be at least 1");
        }
        if self.game == GameKind::Lottery && self.n_players == 0 {
            return fail("n_players", "lottery scenarios need at least one player");
        }
        let p = &self.game_params;
        if p.key_price.is_zero() {
            return fail("game_params.key_price", "must be positive");
        }
        if p.round_extension == 0 || p.round_extension > 86_400 {
            return fail("game_params.round_extension", "must be between 1 and 86400 seconds");
        }
        if p.tracker_init >= 1000 {
            return fail("game_params.tracker_init", "must be below 1000");
        }
        if !(0.0..=1.0).contains(&p.airdrop_pot_fraction) {
            return fail("game_params.airdrop_pot_fraction", "must be within 0.0..=1.0");
        }
        if p.initial_round_seconds == 0 {
            return fail("game_params.initial_round_seconds", "must be at least 1");
        }
        if p.commit_phase_blocks == 0 {
            return fail("game_params.commit_phase_blocks", "must be at least 1");
        }
        if p.reveal_phase_blocks == 0 {
            return fail("game_params.reveal_phase_blocks", "must be at least 1");
        }
        if p.multi_source_count == 0 {
            return fail("game_params.multi_source_count", "must be at least 1");
        }
        if p.initial_balance.is_zero() {
            return fail("game_params.initial_balance", "must be positive");
        }
        for strategy in &self.strategies {
            let fomo_only = matches!(
                strategy,
                Strategy::HonestBuyer { .. }
                    | Strategy::SelectivePredictor
                    | Strategy::ConstructorBypass { .. }
            );
            match self.game {
                GameKind::Lottery if fomo_only => {
                    return fail("strategies", "buyer strategies require the fomo3d_lite game");
                }
                GameKind::Fomo3dLite if !fomo_only => {
                    return fail("strategies", "lottery strategies require the lottery game");
                }
                _ => {}
            }
            if let Strategy::HonestBuyer { period: 0 } | Strategy::ConstructorBypass { period: 0 } =
                strategy
            {
                return fail("strategies.period", "must be at least 1");
            }
        }
        Ok(())
    }
}

/// Reads, parses, and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let config: ScenarioConfig = toml::from_str(&text).map_err(|e| HarnessError::Parse {
        path: path.display().to_string(),
        // toml errors carry line/column spans in their Display form.
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}
