//! Deterministic single-instance model of an Ethereum-like ledger: accounts,
//! balances, block progression, value transfer, and contract deployment with
//! constructor-phase code-size semantics.
//!
//! Gas is not metered; `gaslimit` exists only as an entropy input. One
//! `BlockEnv` is shared by every call issued between two `advance_block`
//! invocations, so attacker and victim code observe the same block variables,
//! which is exactly the real-chain condition the seed attack needs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::entropy::{keccak256, Digest};
use crate::u256::U256;

/// Fixed 20-byte account identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 20]);

impl Address {
    /// Reserved; never assigned to a created account.
    pub const ZERO: Address = Address([0; 20]);

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        let digits: String = self.0.iter().map(|b| format!("{:02x}", b)).collect();
        format!("0x{}", digits)
    }
}

impl std::fmt::Debug for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl std::fmt::Display for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl serde::Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccountKind {
    Eoa,
    Contract,
}

#[derive(Clone, Debug)]
pub struct Account {
    pub address: Address,
    pub balance: U256,
    /// Bytes of deployed code. Zero for EOAs, zero for contracts strictly
    /// during their constructor, positive forever after deployment completes.
    pub code_size: u32,
    pub kind: AccountKind,
}

/// Per-block metadata that feeds every entropy formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockEnv {
    pub number: U256,
    /// Seconds; also the value of `now`. Always at least 1.
    pub timestamp: U256,
    pub difficulty: U256,
    pub gaslimit: U256,
    pub coinbase: Address,
}

impl BlockEnv {
    fn genesis() -> BlockEnv {
        BlockEnv {
            number: U256::ZERO,
            timestamp: U256::ONE,
            difficulty: U256::ZERO,
            gaslimit: U256::ZERO,
            coinbase: Address::ZERO,
        }
    }
}

/// Identifier of a registered signing key. Each EOA owns exactly one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyId(pub u64);

/// Simulated deterministic signature: the key that signed, plus the digest of
/// what was signed. Stands in for (r, s, v) and `ecrecover`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub key_id: KeyId,
    pub digest: Digest,
}

/// Who calls, on whose behalf, with how much value, and whether from inside a
/// constructor.
#[derive(Clone, Debug)]
pub struct CallContext {
    pub msg_sender: Address,
    pub tx_origin: Address,
    pub msg_value: U256,
    pub in_constructor: bool,
    pub msg_data: Vec<u8>,
    pub signature: Option<Signature>,
}

impl CallContext {
    /// A top-level call from an EOA: msg.sender equals tx.origin.
    pub fn eoa_call(sender: Address, value: U256, data: Vec<u8>) -> CallContext {
        CallContext {
            msg_sender: sender,
            tx_origin: sender,
            msg_value: value,
            in_constructor: false,
            msg_data: data,
            signature: None,
        }
    }

    /// A call routed through a contract: msg.sender is the contract, the
    /// originating EOA stays in tx.origin.
    pub fn contract_call(
        contract: Address,
        origin: Address,
        value: U256,
        in_constructor: bool,
        data: Vec<u8>,
    ) -> CallContext {
        CallContext {
            msg_sender: contract,
            tx_origin: origin,
            msg_value: value,
            in_constructor,
            msg_data: data,
            signature: None,
        }
    }

    pub fn with_signature(mut self, signature: Option<Signature>) -> CallContext {
        self.signature = signature;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("block time must advance by at least one second")]
    Monotonicity,
    #[error("insufficient balance for transfer")]
    InsufficientFunds,
    #[error("account {0} does not exist")]
    UnknownAccount(Address),
    #[error("arithmetic overflow in chain accounting")]
    Overflow,
}

/// Why a deployment failed: either the chain rejected it, or the constructor
/// body itself raised (in which case the whole deployment is rolled back).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeployError<E> {
    #[error(transparent)]
    Chain(ChainError),
    #[error("constructor reverted: {0}")]
    Constructor(E),
}

/// Opaque full-state snapshot used for revert semantics.
pub struct ChainSnapshot(Chain);

/// A single chain instance. All operations on one instance happen from one
/// logical thread; independent instances may run in parallel.
#[derive(Clone)]
pub struct Chain {
    accounts: BTreeMap<Address, Account>,
    env: BlockEnv,
    total_supply: U256,
    keys: BTreeMap<Address, KeyId>,
    next_key: u64,
    addr_rng: ChaCha8Rng,
}

impl Chain {
    /// New chain at genesis (block 0, timestamp 1). Address generation is a
    /// deterministic function of the seed.
    pub fn new(seed: u64) -> Chain {
        Chain {
            accounts: BTreeMap::new(),
            env: BlockEnv::genesis(),
            total_supply: U256::ZERO,
            keys: BTreeMap::new(),
            next_key: 1,
            addr_rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn env(&self) -> &BlockEnv {
        &self.env
    }

    pub fn account(&self, addr: Address) -> Option<&Account> {
        self.accounts.get(&addr)
    }

    /// Balance of an address; unknown addresses report zero.
    pub fn balance(&self, addr: Address) -> U256 {
        self.accounts.get(&addr).map_or(U256::ZERO, |a| a.balance)
    }

    /// Code size at an address; unknown addresses report zero.
    pub fn extcodesize(&self, addr: Address) -> u32 {
        self.accounts.get(&addr).map_or(0, |a| a.code_size)
    }

    pub fn total_supply(&self) -> U256 {
        self.total_supply
    }

    /// Registers a fresh account with the given balance (minted into total
    /// supply) and code size zero. EOAs also get a signing key.
    pub fn create_account(&mut self, kind: AccountKind, initial_balance: U256) -> Address {
        let address = loop {
            let candidate = Address(self.addr_rng.gen());
            if candidate != Address::ZERO && !self.accounts.contains_key(&candidate) {
                break candidate;
            }
        };
        self.accounts.insert(
            address,
            Account {
                address,
                balance: initial_balance,
                code_size: 0,
                kind,
            },
        );
        self.total_supply = self
            .total_supply
            .checked_add(initial_balance)
            .expect("total minted supply fits in 256 bits");
        if kind == AccountKind::Eoa {
            self.keys.insert(address, KeyId(self.next_key));
            self.next_key += 1;
        }
        address
    }

    /// Moves to the next block. Both number and timestamp strictly increase.
    pub fn advance_block(
        &mut self,
        delta_seconds: U256,
        difficulty: U256,
        gaslimit: U256,
        coinbase: Address,
    ) -> Result<BlockEnv, ChainError> {
        if delta_seconds.is_zero() {
            return Err(ChainError::Monotonicity);
        }
        let number = self
            .env
            .number
            .checked_add(U256::ONE)
            .ok_or(ChainError::Overflow)?;
        let timestamp = self
            .env
            .timestamp
            .checked_add(delta_seconds)
            .ok_or(ChainError::Overflow)?;
        self.env = BlockEnv {
            number,
            timestamp,
            difficulty,
            gaslimit,
            coinbase,
        };
        Ok(self.env.clone())
    }

    /// Moves `amount` between two existing accounts. On error nothing moves.
    pub fn transfer(&mut self, from: Address, to: Address, amount: U256) -> Result<(), ChainError> {
        if !self.accounts.contains_key(&from) {
            return Err(ChainError::UnknownAccount(from));
        }
        if !self.accounts.contains_key(&to) {
            return Err(ChainError::UnknownAccount(to));
        }
        let from_balance = self.balance(from);
        let new_from = from_balance
            .checked_sub(amount)
            .ok_or(ChainError::InsufficientFunds)?;
        if from == to {
            return Ok(());
        }
        let new_to = self
            .balance(to)
            .checked_add(amount)
            .ok_or(ChainError::Overflow)?;
        self.accounts.get_mut(&from).expect("checked above").balance = new_from;
        self.accounts.get_mut(&to).expect("checked above").balance = new_to;
        Ok(())
    }

    /// Creates a contract account and runs `body` as its constructor. While
    /// the body executes, the new account's code size is zero; once it
    /// returns, the code size becomes positive. If the body errors, the whole
    /// deployment is rolled back: account removed, endowment returned.
    ///
    /// Bodies that mutate state outside the chain are responsible for leaving
    /// that state clean on error (the contract operations here already do).
    pub fn deploy_contract<E, F>(
        &mut self,
        creator: Address,
        endowment: U256,
        body: F,
    ) -> Result<Address, DeployError<E>>
    where
        F: FnOnce(&mut Chain, Address) -> Result<(), E>,
    {
        if !self.accounts.contains_key(&creator) {
            return Err(DeployError::Chain(ChainError::UnknownAccount(creator)));
        }
        if self.balance(creator) < endowment {
            return Err(DeployError::Chain(ChainError::InsufficientFunds));
        }
        let snapshot = self.snapshot();
        let address = self.create_account(AccountKind::Contract, U256::ZERO);
        self.transfer(creator, address, endowment)
            .expect("creator balance was checked");
        match body(self, address) {
            Ok(()) => {
                // Only the zero/non-zero distinction matters; deployed code
                // size is fixed at 1.
                self.accounts
                    .get_mut(&address)
                    .expect("created above")
                    .code_size = 1;
                Ok(address)
            }
            Err(e) => {
                self.restore(snapshot);
                Err(DeployError::Constructor(e))
            }
        }
    }

    /// Signs `data` with the key registered to `signer`, if any. Contracts
    /// have no keys and cannot sign.
    pub fn sign(&self, signer: Address, data: &[u8]) -> Option<Signature> {
        self.keys.get(&signer).map(|&key_id| Signature {
            key_id,
            digest: keccak256(data),
        })
    }

    /// True iff the signature was produced by the key registered to
    /// `claimed` over the digest of `data`.
    pub fn verify_signature(&self, sig: &Signature, claimed: Address, data: &[u8]) -> bool {
        self.keys.get(&claimed) == Some(&sig.key_id) && sig.digest == keccak256(data)
    }

    pub fn snapshot(&self) -> ChainSnapshot {
        ChainSnapshot(self.clone())
    }

    pub fn restore(&mut self, snapshot: ChainSnapshot) {
        *self = snapshot.0;
    }

    /// True iff account balances sum exactly to the minted supply.
    pub fn check_conservation(&self) -> bool {
        let mut sum = U256::ZERO;
        for account in self.accounts.values() {
            match sum.checked_add(account.balance) {
                Some(s) => sum = s,
                None => return false,
            }
        }
        sum == self.total_supply
    }

    /// Canonical digest of the full chain state; byte-identical across
    /// replays of the same operation sequence from the same seed.
    pub fn state_digest(&self) -> Digest {
        let mut bytes = Vec::new();
        for (addr, account) in &self.accounts {
            bytes.extend_from_slice(addr.as_bytes());
            bytes.extend_from_slice(&account.balance.to_be_bytes());
            bytes.extend_from_slice(&account.code_size.to_be_bytes());
            bytes.push(match account.kind {
                AccountKind::Eoa => 0,
                AccountKind::Contract => 1,
            });
        }
        bytes.extend_from_slice(&self.env.number.to_be_bytes());
        bytes.extend_from_slice(&self.env.timestamp.to_be_bytes());
        bytes.extend_from_slice(&self.env.difficulty.to_be_bytes());
        bytes.extend_from_slice(&self.env.gaslimit.to_be_bytes());
        bytes.extend_from_slice(self.env.coinbase.as_bytes());
        bytes.extend_from_slice(&self.total_supply.to_be_bytes());
        keccak256(&bytes)
    }
}
