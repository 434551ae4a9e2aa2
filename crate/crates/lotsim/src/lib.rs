//! Deterministic desk-scale simulator of an Ethereum-like chain hosting two
//! gambling contracts (a Fomo3D-style airdrop game and a simple lottery),
//! the randomness-prediction and constructor-bypass attacks against them,
//! and the prevention catalog that blunts those attacks, all driven by a
//! scenario harness that measures win rates and emits reproducible reports.

pub mod attacks;
pub mod chain;
pub mod contracts;
pub mod entropy;
pub mod harness;
pub mod mitigations;
pub mod u256;

pub use chain::{Account, AccountKind, Address, BlockEnv, CallContext, Chain, ChainError};
pub use contracts::{CallError, FomoGame, FomoParams, GuardChoice, GuardError, Lottery};
pub use entropy::{airdrop_roll, airdrop_seed, encode_packed, keccak256, lottery_random, Digest};
pub use harness::{load_scenario, run_scenario, ScenarioConfig, SimReport};
pub use u256::U256;
