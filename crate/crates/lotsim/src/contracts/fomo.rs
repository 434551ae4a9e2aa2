//! Fomo3D-lite: a round game where key purchases feed a pot and push out a
//! deadline, the last buyer before the deadline wins the pot, and qualifying
//! purchases roll a block-seeded side lottery (the airdrop).
//!
//! The airdrop roll is the vulnerable formula: qualifying buys roll against
//! the tracker value visible before the buy's own increment, so anyone who
//! recomputes the seed off-chain knows the outcome before buying.

use std::convert::Infallible;

use crate::chain::{Address, CallContext, Chain, DeployError};
use crate::contracts::{enforce_guard, CallError, GuardChoice};
use crate::entropy::{airdrop_roll, airdrop_seed};
use crate::u256::U256;

const SECONDS_PER_DAY: u64 = 86_400;
const TRACKER_LIMIT: u64 = 1000;

/// Game parameters. None of these are fixed by the original game's published
/// description; they are scenario configuration with desk-scale defaults.
#[derive(Clone, Debug)]
pub struct FomoParams {
    /// Cost of one key; exactly this much enters the game per buy.
    pub key_price: U256,
    /// Seconds the deadline moves out on each buy; at most 24 hours.
    pub round_extension_seconds: U256,
    /// Minimum msg.value for a buy to roll the airdrop.
    pub airdrop_min_qualifying: U256,
    /// Share of each key price feeding the airdrop pot, in parts per thousand.
    pub airdrop_pot_permille: u32,
    /// Length of the round before any buys extend it.
    pub initial_round_seconds: U256,
    /// Starting tracker value; must stay below 1000.
    pub tracker_init: U256,
}

impl Default for FomoParams {
    fn default() -> FomoParams {
        FomoParams {
            key_price: U256::from(10_000_000_000_000_000u64),
            round_extension_seconds: U256::from(30u64),
            airdrop_min_qualifying: U256::from(100_000_000_000_000_000u64),
            airdrop_pot_permille: 100,
            initial_round_seconds: U256::from(SECONDS_PER_DAY),
            tracker_init: U256::ZERO,
        }
    }
}

impl FomoParams {
    pub fn validate(&self) -> Result<(), CallError> {
        if self.key_price.is_zero() {
            return Err(CallError::RequireFailed("key_price must be positive"));
        }
        if self.round_extension_seconds.is_zero()
            || self.round_extension_seconds > U256::from(SECONDS_PER_DAY)
        {
            return Err(CallError::RequireFailed(
                "round_extension_seconds must be between 1 and 86400",
            ));
        }
        if self.airdrop_pot_permille > 1000 {
            return Err(CallError::RequireFailed(
                "airdrop_pot_permille must be at most 1000",
            ));
        }
        if self.tracker_init >= U256::from(TRACKER_LIMIT) {
            return Err(CallError::RequireFailed("tracker_init must be below 1000"));
        }
        if self.initial_round_seconds.is_zero() {
            return Err(CallError::RequireFailed(
                "initial_round_seconds must be positive",
            ));
        }
        Ok(())
    }
}

/// What a single buy did, airdrop-wise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuyOutcome {
    /// The buy qualified and rolled the airdrop.
    pub airdrop_attempted: bool,
    pub airdrop_won: bool,
    pub airdrop_payout: U256,
    /// Tracker value the roll was evaluated against (before this buy's own
    /// increment). Meaningful only when `airdrop_attempted`.
    pub rolled_tracker: U256,
}

impl BuyOutcome {
    fn no_roll() -> BuyOutcome {
        BuyOutcome {
            airdrop_attempted: false,
            airdrop_won: false,
            airdrop_payout: U256::ZERO,
            rolled_tracker: U256::ZERO,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FomoGame {
    account: Address,
    params: FomoParams,
    pot: U256,
    airdrop_pot: U256,
    last_buyer: Option<Address>,
    deadline: U256,
    air_drop_tracker: U256,
    round_open: bool,
}

impl FomoGame {
    pub fn create(chain: &mut Chain, creator: Address, params: FomoParams) -> Result<FomoGame, CallError> {
        params.validate()?;
        let account = chain
            .deploy_contract::<Infallible, _>(creator, U256::ZERO, |_, _| Ok(()))
            .map_err(|e| match e {
                DeployError::Chain(c) => CallError::Chain(c),
                DeployError::Constructor(never) => match never {},
            })?;
        let deadline = chain
            .env()
            .timestamp
            .checked_add(params.initial_round_seconds)
            .ok_or(CallError::Chain(crate::chain::ChainError::Overflow))?;
        Ok(FomoGame {
            account,
            air_drop_tracker: params.tracker_init,
            params,
            pot: U256::ZERO,
            airdrop_pot: U256::ZERO,
            last_buyer: None,
            deadline,
            round_open: true,
        })
    }

    pub fn account(&self) -> Address {
        self.account
    }

    pub fn params(&self) -> &FomoParams {
        &self.params
    }

    pub fn pot(&self) -> U256 {
        self.pot
    }

    pub fn airdrop_pot(&self) -> U256 {
        self.airdrop_pot
    }

    /// Current airdrop tracker: the value the next qualifying buy will roll
    /// against. Publicly readable, which is what the predictor exploits.
    pub fn tracker(&self) -> U256 {
        self.air_drop_tracker
    }

    pub fn deadline(&self) -> U256 {
        self.deadline
    }

    pub fn last_buyer(&self) -> Option<Address> {
        self.last_buyer
    }

    pub fn round_open(&self) -> bool {
        self.round_open
    }

    fn atomic<T>(
        &mut self,
        chain: &mut Chain,
        f: impl FnOnce(&mut Self, &mut Chain) -> Result<T, CallError>,
    ) -> Result<T, CallError> {
        let chain_snapshot = chain.snapshot();
        let state_snapshot = self.clone();
        match f(self, chain) {
            Ok(v) => Ok(v),
            Err(e) => {
                chain.restore(chain_snapshot);
                *self = state_snapshot;
                Err(e)
            }
        }
    }

    /// Buys one key under the selected guard. The key price moves into the
    /// game (split between pot and airdrop pot), any excess value is
    /// refunded, the sender becomes the last buyer, and the deadline moves
    /// out. A qualifying buy rolls the airdrop against the pre-increment
    /// tracker; a hit pays out the whole airdrop pot and resets the tracker.
    pub fn buy_key(
        &mut self,
        chain: &mut Chain,
        ctx: &CallContext,
        guard: GuardChoice,
    ) -> Result<BuyOutcome, CallError> {
        self.atomic(chain, |state, chain| {
            enforce_guard(guard, ctx, chain)?;
            let env = chain.env().clone();
            if !state.round_open || env.timestamp > state.deadline {
                return Err(CallError::RoundClosed);
            }
            if ctx.msg_value < state.params.key_price {
                return Err(CallError::RequireFailed("msg.value below key price"));
            }

            chain.transfer(ctx.msg_sender, state.account, ctx.msg_value)?;
            let excess = ctx
                .msg_value
                .checked_sub(state.params.key_price)
                .expect("msg.value >= key price");
            if !excess.is_zero() {
                chain.transfer(state.account, ctx.msg_sender, excess)?;
            }

            let airdrop_share = state
                .params
                .key_price
                .checked_mul(U256::from(state.params.airdrop_pot_permille as u64))
                .and_then(|v| v.checked_div(U256::from(1000u64)))
                .ok_or(CallError::Chain(crate::chain::ChainError::Overflow))?;
            let pot_share = state
                .params
                .key_price
                .checked_sub(airdrop_share)
                .expect("share is at most the key price");
            state.pot = state
                .pot
                .checked_add(pot_share)
                .ok_or(CallError::Chain(crate::chain::ChainError::Overflow))?;
            state.airdrop_pot = state
                .airdrop_pot
                .checked_add(airdrop_share)
                .ok_or(CallError::Chain(crate::chain::ChainError::Overflow))?;

            state.last_buyer = Some(ctx.msg_sender);
            state.deadline = env
                .timestamp
                .checked_add(state.params.round_extension_seconds)
                .ok_or(CallError::Chain(crate::chain::ChainError::Overflow))?;

            if ctx.msg_value < state.params.airdrop_min_qualifying {
                return Ok(BuyOutcome::no_roll());
            }

            let rolled_tracker = state.air_drop_tracker;
            let incremented = rolled_tracker
                .checked_add(U256::ONE)
                .expect("tracker stays below 1000");
            state.air_drop_tracker = if incremented >= U256::from(TRACKER_LIMIT) {
                U256::from(TRACKER_LIMIT - 1)
            } else {
                incremented
            };

            let seed = airdrop_seed(&env, ctx.msg_sender)?;
            if airdrop_roll(seed, rolled_tracker) {
                let payout = state.airdrop_pot;
                chain.transfer(state.account, ctx.msg_sender, payout)?;
                state.airdrop_pot = U256::ZERO;
                state.air_drop_tracker = U256::ZERO;
                Ok(BuyOutcome {
                    airdrop_attempted: true,
                    airdrop_won: true,
                    airdrop_payout: payout,
                    rolled_tracker,
                })
            } else {
                Ok(BuyOutcome {
                    airdrop_attempted: true,
                    airdrop_won: false,
                    airdrop_payout: U256::ZERO,
                    rolled_tracker,
                })
            }
        })
    }

    /// Pays the pot to the last buyer once the deadline has passed and closes
    /// the round. Callable by anyone.
    pub fn settle_round(&mut self, chain: &mut Chain) -> Result<Address, CallError> {
        self.atomic(chain, |state, chain| {
            if !state.round_open {
                return Err(CallError::RoundClosed);
            }
            if chain.env().timestamp <= state.deadline {
                return Err(CallError::RoundStillLive);
            }
            let winner = state.last_buyer.ok_or(CallError::NoParticipants)?;
            chain.transfer(state.account, winner, state.pot)?;
            state.pot = U256::ZERO;
            state.round_open = false;
            Ok(winner)
        })
    }

    /// Funds law: the two pots always account for every wei the game holds.
    pub fn check_funds_law(&self, chain: &Chain) -> bool {
        self.pot
            .checked_add(self.airdrop_pot)
            .map(|total| total == chain.balance(self.account))
            .unwrap_or(false)
    }
}
