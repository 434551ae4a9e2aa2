//! The lottery state machine: enter with a fixed 0.1 ether stake, a
//! manager-only draw that pays the whole pool to a block-hash-selected
//! player, and a manager-only refund.

use std::convert::Infallible;

use crate::chain::{Address, CallContext, Chain, DeployError};
use crate::contracts::CallError;
use crate::entropy::lottery_random;
use crate::u256::{tenth_ether, U256};

/// The exact stake an entry must carry: 0.1 ether in wei.
pub fn entry_stake() -> U256 {
    tenth_ether()
}

/// Lottery contract state. The pool itself lives in the contract's chain
/// account; between operations it always equals 0.1 ether times the number
/// of entries.
#[derive(Clone, Debug)]
pub struct Lottery {
    account: Address,
    manager: Address,
    players: Vec<Address>,
}

impl Lottery {
    /// Deploys the lottery; the deployer becomes the immutable manager.
    pub fn create(chain: &mut Chain, manager: Address) -> Result<Lottery, CallError> {
        let account = chain
            .deploy_contract::<Infallible, _>(manager, U256::ZERO, |_, _| Ok(()))
            .map_err(|e| match e {
                DeployError::Chain(c) => CallError::Chain(c),
                DeployError::Constructor(never) => match never {},
            })?;
        Ok(Lottery {
            account,
            manager,
            players: Vec::new(),
        })
    }

    pub fn manager(&self) -> Address {
        self.manager
    }

    pub fn account(&self) -> Address {
        self.account
    }

    /// Entries in insertion order; duplicates allowed, each one a draw slot.
    pub fn players(&self) -> &[Address] {
        &self.players
    }

    pub fn pool_balance(&self, chain: &Chain) -> U256 {
        chain.balance(self.account)
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

    /// Joins the lottery. The sent value moves to the contract on entry and
    /// the call reverts (value returned) unless it is exactly 0.1 ether.
    pub fn enter(&mut self, chain: &mut Chain, ctx: &CallContext) -> Result<(), CallError> {
        self.atomic(chain, |state, chain| {
            chain.transfer(ctx.msg_sender, state.account, ctx.msg_value)?;
            if ctx.msg_value != entry_stake() {
                return Err(CallError::RequireFailed("msg.value must be exactly 0.1 ether"));
            }
            state.players.push(ctx.msg_sender);
            Ok(())
        })
    }

    /// Manager-only draw using the block-variables formula: the vulnerable
    /// path every observer can recompute.
    pub fn pick_winner(&mut self, chain: &mut Chain, ctx: &CallContext) -> Result<Address, CallError> {
        let value = lottery_random(chain.env(), &self.players);
        self.pick_winner_with(chain, ctx, value)
    }

    /// Manager-only draw from a supplied random value, the plug point for
    /// mitigated randomness sources. The winner index is the value modulo the
    /// player count; the winner receives the entire contract balance and the
    /// player list resets.
    pub fn pick_winner_with(
        &mut self,
        chain: &mut Chain,
        ctx: &CallContext,
        random_value: U256,
    ) -> Result<Address, CallError> {
        self.atomic(chain, |state, chain| {
            if ctx.msg_sender != state.manager {
                return Err(CallError::OnlyManager);
            }
            if state.players.is_empty() {
                return Err(CallError::EmptyPool);
            }
            let count = U256::from(state.players.len() as u64);
            let index = random_value
                .checked_rem(count)
                .expect("player count is nonzero")
                .low_u64() as usize;
            let winner = state.players[index];
            let balance = chain.balance(state.account);
            chain.transfer(state.account, winner, balance)?;
            state.players.clear();
            Ok(winner)
        })
    }

    /// Manager-only refund: every entry (including duplicates) receives
    /// 0.1 ether in list order, then the list resets.
    pub fn refund(&mut self, chain: &mut Chain, ctx: &CallContext) -> Result<(), CallError> {
        self.atomic(chain, |state, chain| {
            if ctx.msg_sender != state.manager {
                return Err(CallError::OnlyManager);
            }
            for player in &state.players {
                chain.transfer(state.account, *player, entry_stake())?;
            }
            state.players.clear();
            Ok(())
        })
    }
}
