//! Built-in function-test fixtures: six accounts bet once each, the
//! administrator draws, and the administrator refunds. Exact-value checks
//! over the lottery's three operations.

use crate::chain::{AccountKind, Address, CallContext, Chain};
use crate::contracts::{entry_stake, CallError, Lottery};
use crate::u256::{ether, U256};

pub struct FixtureResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl FixtureResult {
    fn pass(name: &'static str, detail: impl Into<String>) -> FixtureResult {
        FixtureResult {
            name,
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> FixtureResult {
        FixtureResult {
            name,
            passed: false,
            detail: detail.into(),
        }
    }
}

fn setup(seed: u64) -> Result<(Chain, Lottery, Address, Vec<Address>), CallError> {
    let mut chain = Chain::new(seed);
    let manager = chain.create_account(AccountKind::Eoa, ether(10));
    let players: Vec<Address> = (0..6)
        .map(|_| chain.create_account(AccountKind::Eoa, ether(1)))
        .collect();
    let lottery = Lottery::create(&mut chain, manager)?;
    Ok((chain, lottery, manager, players))
}

fn enter_all(chain: &mut Chain, lottery: &mut Lottery, players: &[Address]) -> Result<(), CallError> {
    for &player in players {
        lottery.enter(chain, &CallContext::eoa_call(player, entry_stake(), Vec::new()))?;
    }
    Ok(())
}

fn betting_fixture() -> FixtureResult {
    const NAME: &str = "betting";
    let (mut chain, mut lottery, _, players) = match setup(1001) {
        Ok(v) => v,
        Err(e) => return FixtureResult::fail(NAME, e.to_string()),
    };
    if let Err(e) = enter_all(&mut chain, &mut lottery, &players) {
        return FixtureResult::fail(NAME, e.to_string());
    }
    let pool = lottery.pool_balance(&chain);
    let expected: U256 = "600000000000000000".parse().expect("valid decimal");
    if pool != expected {
        return FixtureResult::fail(NAME, format!("pool is {} wei, expected 0.6 ether", pool));
    }
    if lottery.players().len() != 6 {
        return FixtureResult::fail(
            NAME,
            format!("participant count is {}, expected 6", lottery.players().len()),
        );
    }
    for &player in &players {
        let spent = ether(1).checked_sub(chain.balance(player)).unwrap_or(U256::MAX);
        if spent != entry_stake() {
            return FixtureResult::fail(NAME, format!("player balance decreased by {} wei", spent));
        }
    }
    FixtureResult::pass(NAME, "pool reached 0.6 ether with six participants")
}

fn drawing_fixture() -> FixtureResult {
    const NAME: &str = "drawing";
    let (mut chain, mut lottery, manager, players) = match setup(1002) {
        Ok(v) => v,
        Err(e) => return FixtureResult::fail(NAME, e.to_string()),
    };
    if let Err(e) = enter_all(&mut chain, &mut lottery, &players) {
        return FixtureResult::fail(NAME, e.to_string());
    }

    // Only the administrator may draw.
    let outsider_ctx = CallContext::eoa_call(players[0], U256::ZERO, Vec::new());
    if lottery.pick_winner(&mut chain, &outsider_ctx) != Err(CallError::OnlyManager) {
        return FixtureResult::fail(NAME, "non-administrator draw was not rejected".to_string());
    }

    let pre_draw = lottery.players().to_vec();
    let manager_ctx = CallContext::eoa_call(manager, U256::ZERO, Vec::new());
    let winner = match lottery.pick_winner(&mut chain, &manager_ctx) {
        Ok(w) => w,
        Err(e) => return FixtureResult::fail(NAME, e.to_string()),
    };
    if !pre_draw.contains(&winner) {
        return FixtureResult::fail(NAME, "winner was not a participant".to_string());
    }
    let expected = ether(1)
        .checked_sub(entry_stake())
        .and_then(|b| b.checked_add("600000000000000000".parse().expect("valid decimal")))
        .expect("desk-scale arithmetic");
    if chain.balance(winner) != expected {
        return FixtureResult::fail(
            NAME,
            format!("winner balance is {} wei, expected stake change +0.6 ether", chain.balance(winner)),
        );
    }
    if !lottery.players().is_empty() || !lottery.pool_balance(&chain).is_zero() {
        return FixtureResult::fail(NAME, "pool or participant list not cleared".to_string());
    }
    FixtureResult::pass(NAME, format!("winner {} received the full 0.6 ether pool", winner))
}

fn refund_fixture() -> FixtureResult {
    const NAME: &str = "refund";
    let (mut chain, mut lottery, manager, players) = match setup(1003) {
        Ok(v) => v,
        Err(e) => return FixtureResult::fail(NAME, e.to_string()),
    };
    if let Err(e) = enter_all(&mut chain, &mut lottery, &players) {
        return FixtureResult::fail(NAME, e.to_string());
    }

    let outsider_ctx = CallContext::eoa_call(players[0], U256::ZERO, Vec::new());
    if lottery.refund(&mut chain, &outsider_ctx) != Err(CallError::OnlyManager) {
        return FixtureResult::fail(NAME, "non-administrator refund was not rejected".to_string());
    }

    let manager_ctx = CallContext::eoa_call(manager, U256::ZERO, Vec::new());
    if let Err(e) = lottery.refund(&mut chain, &manager_ctx) {
        return FixtureResult::fail(NAME, e.to_string());
    }
    for &player in &players {
        if chain.balance(player) != ether(1) {
            return FixtureResult::fail(
                NAME,
                format!("player balance is {} wei after refund", chain.balance(player)),
            );
        }
    }
    if !lottery.players().is_empty() || !lottery.pool_balance(&chain).is_zero() {
        return FixtureResult::fail(NAME, "pool or participant list not cleared".to_string());
    }
    FixtureResult::pass(NAME, "each participant got 0.1 ether back; pool and list cleared")
}

/// Runs all three fixtures and returns their results in order.
pub fn run_function_test_fixtures() -> Vec<FixtureResult> {
    vec![betting_fixture(), drawing_fixture(), refund_fixture()]
}
