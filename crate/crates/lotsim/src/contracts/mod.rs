//! The two contract state machines and the caller guards, all executing under
//! chain revert semantics: any error inside a call leaves balances and
//! contract state exactly as before the call.

pub mod fomo;
pub mod guards;
pub mod lottery;

pub use fomo::{BuyOutcome, FomoGame, FomoParams};
pub use guards::{enforce_guard, guard_codesize, guard_origin, guard_signature, GuardChoice, GuardError};
pub use lottery::{entry_stake, Lottery};

use crate::chain::ChainError;
use crate::entropy::EntropyError;

/// Errors raised by contract calls. Every error rolls the enclosing call
/// back completely.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CallError {
    #[error("require failed: {0}")]
    RequireFailed(&'static str),
    #[error("caller is not the manager")]
    OnlyManager,
    #[error("no players in the pool")]
    EmptyPool,
    #[error("round is closed")]
    RoundClosed,
    #[error("round deadline has not passed")]
    RoundStillLive,
    #[error("round has no participants")]
    NoParticipants,
    #[error("guard rejected caller: {0}")]
    Guard(#[from] GuardError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Seed(#[from] EntropyError),
}
