//! The randomness formulas the two contracts rely on: packed encoding,
//! Keccak-256, the airdrop seed, the airdrop threshold roll, and the lottery
//! random value.
//!
//! Everything here is a pure function of its inputs. That purity is the whole
//! vulnerability: anyone holding the same block variables computes the same
//! "random" values the contracts do.

use crate::chain::{Address, BlockEnv};
use crate::u256::U256;

const KECCAK_ROUNDS: usize = 24;
const KECCAK_RATE: usize = 136;

const ROUND_CONSTANTS: [u64; KECCAK_ROUNDS] = [
    0x0000000000000001,
    0x0000000000008082,
    0x800000000000808a,
    0x8000000080008000,
    0x000000000000808b,
    0x0000000080000001,
    0x8000000080008081,
    0x8000000000008009,
    0x000000000000008a,
    0x0000000000000088,
    0x0000000080008009,
    0x000000008000000a,
    0x000000008000808b,
    0x800000000000008b,
    0x8000000000008089,
    0x8000000000008003,
    0x8000000000008002,
    0x8000000000000080,
    0x000000000000800a,
    0x800000008000000a,
    0x8000000080008081,
    0x8000000000008080,
    0x0000000080000001,
    0x8000000080008008,
];

// Rotation offsets for the rho step, indexed by lane position x + 5y.
#[rustfmt::skip]
const RHO_OFFSETS: [u32; 25] = [
     0,  1, 62, 28, 27,
    36, 44,  6, 55, 20,
     3, 10, 43, 25, 39,
    41, 45, 15, 21,  8,
    18,  2, 61, 56, 14,
];

fn keccak_f(a: &mut [u64; 25]) {
    for rc in ROUND_CONSTANTS {
        // theta
        let mut c = [0u64; 5];
        for x in 0..5 {
            c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
        }
        for x in 0..5 {
            let d = c[(x + 4) % 5] ^ c[(x + 1) % 5].rotate_left(1);
            for y in 0..5 {
                a[x + 5 * y] ^= d;
            }
        }
        // rho and pi
        let mut b = [0u64; 25];
        for x in 0..5 {
            for y in 0..5 {
                let dest = y + 5 * ((2 * x + 3 * y) % 5);
                b[dest] = a[x + 5 * y].rotate_left(RHO_OFFSETS[x + 5 * y]);
            }
        }
        // chi
        for x in 0..5 {
            for y in 0..5 {
                a[x + 5 * y] = b[x + 5 * y] ^ (!b[(x + 1) % 5 + 5 * y] & b[(x + 2) % 5 + 5 * y]);
            }
        }
        // iota
        a[0] ^= rc;
    }
}

fn absorb(state: &mut [u64; 25], block: &[u8]) {
    for i in 0..KECCAK_RATE / 8 {
        state[i] ^= u64::from_le_bytes(block[8 * i..8 * i + 8].try_into().expect("8-byte chunk"));
    }
}

/// 32-byte Keccak-256 output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Big-endian interpretation as an unsigned integer, the `uint256(...)`
    /// cast the contracts apply to hash outputs.
    pub fn to_u256(&self) -> U256 {
        U256::from_be_bytes(self.0)
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{:02x}", b)).collect()
    }
}

impl std::fmt::Debug for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl std::fmt::Display for Digest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl serde::Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

/// Keccak-256 with the original Keccak padding (the pre-NIST variant used by
/// Ethereum), not standardized SHA3-256.
pub fn keccak256(data: &[u8]) -> Digest {
    let mut state = [0u64; 25];
    let mut chunks = data.chunks_exact(KECCAK_RATE);
    for block in chunks.by_ref() {
        absorb(&mut state, block);
        keccak_f(&mut state);
    }
    let rem = chunks.remainder();
    let mut last = [0u8; KECCAK_RATE];
    last[..rem.len()].copy_from_slice(rem);
    last[rem.len()] ^= 0x01;
    last[KECCAK_RATE - 1] ^= 0x80;
    absorb(&mut state, &last);
    keccak_f(&mut state);

    let mut out = [0u8; 32];
    for i in 0..4 {
        out[8 * i..8 * i + 8].copy_from_slice(&state[i].to_le_bytes());
    }
    Digest(out)
}

/// A value that packed encoding accepts: the only two element kinds the
/// contract formulas use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PackedItem {
    Uint(U256),
    Addr(Address),
}

impl From<U256> for PackedItem {
    fn from(v: U256) -> PackedItem {
        PackedItem::Uint(v)
    }
}

impl From<Address> for PackedItem {
    fn from(a: Address) -> PackedItem {
        PackedItem::Addr(a)
    }
}

/// Tightly packed byte sequence: 32 big-endian bytes per integer, 20 bytes
/// per address, no separators or padding.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PackedBytes(Vec<u8>);

impl PackedBytes {
    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn push_uint(&mut self, v: U256) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }

    fn push_addr(&mut self, a: Address) {
        self.0.extend_from_slice(a.as_bytes());
    }
}

pub fn encode_packed(items: &[PackedItem]) -> PackedBytes {
    let mut out = PackedBytes::default();
    for item in items {
        match item {
            PackedItem::Uint(v) => out.push_uint(*v),
            PackedItem::Addr(a) => out.push_addr(*a),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EntropyError {
    /// A checked addition in the seed formula overflowed; the on-chain
    /// SafeMath equivalent reverts the whole call.
    #[error("seed arithmetic overflowed 256 bits")]
    Overflow,
    #[error("division by zero in seed formula")]
    DivisionByZero,
}

fn hash_of_address(addr: Address) -> U256 {
    keccak256(encode_packed(&[addr.into()]).as_slice()).to_u256()
}

/// The airdrop seed: keccak of the checked six-term sum `timestamp +
/// difficulty + keccak(coinbase)/timestamp + gaslimit +
/// keccak(sender)/timestamp + number`, with both `now` divisions using the
/// block timestamp.
pub fn airdrop_seed(env: &BlockEnv, sender: Address) -> Result<U256, EntropyError> {
    let now = env.timestamp;
    let coinbase_term = hash_of_address(env.coinbase)
        .checked_div(now)
        .ok_or(EntropyError::DivisionByZero)?;
    let sender_term = hash_of_address(sender)
        .checked_div(now)
        .ok_or(EntropyError::DivisionByZero)?;

    let sum = env
        .timestamp
        .checked_add(env.difficulty)
        .and_then(|s| s.checked_add(coinbase_term))
        .and_then(|s| s.checked_add(env.gaslimit))
        .and_then(|s| s.checked_add(sender_term))
        .and_then(|s| s.checked_add(env.number))
        .ok_or(EntropyError::Overflow)?;

    Ok(keccak256(encode_packed(&[sum.into()]).as_slice()).to_u256())
}

/// The airdrop threshold check, computed exactly as the contract writes it:
/// `seed - ((seed / 1000) * 1000) < tracker`.
pub fn airdrop_roll(seed: U256, tracker: U256) -> bool {
    let thousand = U256::from(1000u64);
    let quotient = seed.checked_div(thousand).expect("divisor is nonzero");
    let floored = quotient
        .checked_mul(thousand)
        .expect("(seed / 1000) * 1000 never exceeds seed");
    let residue = seed.checked_sub(floored).expect("floored <= seed");
    residue < tracker
}

/// The lottery's random value: keccak over difficulty, timestamp, and the
/// player list in insertion order.
pub fn lottery_random(env: &BlockEnv, players: &[Address]) -> U256 {
    let mut items = Vec::with_capacity(players.len() + 2);
    items.push(PackedItem::Uint(env.difficulty));
    items.push(PackedItem::Uint(env.timestamp));
    items.extend(players.iter().map(|p| PackedItem::Addr(*p)));
    keccak256(encode_packed(&items).as_slice()).to_u256()
}
