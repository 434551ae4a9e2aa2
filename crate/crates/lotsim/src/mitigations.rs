//! The prevention catalog, pluggable as the lottery's randomness source:
//! publicly verifiable commit-reveal, multi-source combination, a trusted
//! third-party oracle, and periodic source rotation.
//!
//! The oracle's proof scheme is a simplified VRF stand-in. It models the
//! request/verify workflow, not the cryptography: anyone who already knows a
//! value can derive a matching proof, so it must never be treated as a sound
//! VRF.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::{Address, BlockEnv};
use crate::entropy::{encode_packed, keccak256, Digest, PackedItem};
use crate::u256::U256;

/// Which randomness backs a draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomSource {
    /// Block variables only: the vulnerable baseline.
    BlockVars,
    CommitReveal,
    MultiSource,
    Oracle,
}

impl RandomSource {
    pub fn name(&self) -> &'static str {
        match self {
            RandomSource::BlockVars => "block_vars",
            RandomSource::CommitReveal => "commit_reveal",
            RandomSource::MultiSource => "multi_source",
            RandomSource::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MitigationError {
    #[error("operation attempted outside its phase window")]
    PhaseError,
    #[error("participant already committed")]
    DuplicateCommit,
    #[error("participant already revealed")]
    DuplicateReveal,
    #[error("reveal does not match the commitment")]
    RevealMismatch,
    #[error("participant never committed")]
    NotCommitted,
    #[error("no revealed entropy to combine")]
    NoEntropy,
    #[error("reveal phase has not ended")]
    RoundStillLive,
    #[error("unknown oracle key")]
    UnknownKey,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

/// One participant's commitment and (eventually) its opening.
#[derive(Clone, Debug)]
pub struct CommitRecord {
    pub participant: Address,
    pub commitment: Digest,
    pub revealed_value: Option<U256>,
    pub salt: Option<U256>,
}

/// The digest a participant publishes: keccak over the packed value and salt.
pub fn commitment_digest(value: U256, salt: U256) -> Digest {
    keccak256(encode_packed(&[value.into(), salt.into()]).as_slice())
}

/// Result of finalizing a commit-reveal round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitRevealOutcome {
    pub value: U256,
    /// Participants who committed but never revealed, in address order. The
    /// last revealer can compute the outcome before revealing; surfacing
    /// withholders is what lets scenarios attach a penalty.
    pub withholders: Vec<Address>,
}

/// A two-phase randomness round: commitments until `commit_deadline`,
/// reveals until `reveal_deadline`, then a finalize that combines every
/// revealed value.
#[derive(Clone, Debug)]
pub struct CommitRevealPool {
    commit_deadline: U256,
    reveal_deadline: U256,
    records: BTreeMap<Address, CommitRecord>,
}

impl CommitRevealPool {
    pub fn new(commit_deadline: U256, reveal_deadline: U256) -> Result<CommitRevealPool, MitigationError> {
        if reveal_deadline <= commit_deadline {
            return Err(MitigationError::Config(
                "reveal deadline must come after the commit deadline",
            ));
        }
        Ok(CommitRevealPool {
            commit_deadline,
            reveal_deadline,
            records: BTreeMap::new(),
        })
    }

    pub fn commit_deadline(&self) -> U256 {
        self.commit_deadline
    }

    pub fn reveal_deadline(&self) -> U256 {
        self.reveal_deadline
    }

    pub fn record(&self, participant: Address) -> Option<&CommitRecord> {
        self.records.get(&participant)
    }

    pub fn commit(
        &mut self,
        participant: Address,
        commitment: Digest,
        env: &BlockEnv,
    ) -> Result<(), MitigationError> {
        if env.timestamp > self.commit_deadline {
            return Err(MitigationError::PhaseError);
        }
        if self.records.contains_key(&participant) {
            return Err(MitigationError::DuplicateCommit);
        }
        self.records.insert(
            participant,
            CommitRecord {
                participant,
                commitment,
                revealed_value: None,
                salt: None,
            },
        );
        Ok(())
    }

    pub fn reveal(
        &mut self,
        participant: Address,
        value: U256,
        salt: U256,
        env: &BlockEnv,
    ) -> Result<(), MitigationError> {
        if env.timestamp <= self.commit_deadline || env.timestamp > self.reveal_deadline {
            return Err(MitigationError::PhaseError);
        }
        let record = self
            .records
            .get_mut(&participant)
            .ok_or(MitigationError::NotCommitted)?;
        if record.revealed_value.is_some() {
            return Err(MitigationError::DuplicateReveal);
        }
        if commitment_digest(value, salt) != record.commitment {
            return Err(MitigationError::RevealMismatch);
        }
        record.revealed_value = Some(value);
        record.salt = Some(salt);
        Ok(())
    }

    /// Combines every revealed value (in participant-address order) into one
    /// output and reports who withheld.
    pub fn finalize(&self, env: &BlockEnv) -> Result<CommitRevealOutcome, MitigationError> {
        if env.timestamp <= self.reveal_deadline {
            return Err(MitigationError::RoundStillLive);
        }
        let mut revealed = Vec::new();
        let mut withholders = Vec::new();
        for record in self.records.values() {
            match record.revealed_value {
                Some(value) => revealed.push(PackedItem::Uint(value)),
                None => withholders.push(record.participant),
            }
        }
        if revealed.is_empty() {
            return Err(MitigationError::NoEntropy);
        }
        let value = keccak256(encode_packed(&revealed).as_slice()).to_u256();
        Ok(CommitRevealOutcome { value, withholders })
    }
}

/// Hash-combination of independent sources. Any single unpredictable source
/// makes the output unpredictable; hashing rather than XOR denies
/// attacker-influenced sources the chance to cancel each other.
pub fn multi_source_random(sources: &[U256]) -> Result<U256, MitigationError> {
    if sources.is_empty() {
        return Err(MitigationError::NoEntropy);
    }
    let items: Vec<PackedItem> = sources.iter().map(|&s| PackedItem::Uint(s)).collect();
    Ok(keccak256(encode_packed(&items).as_slice()).to_u256())
}

/// A draw from the oracle plus the material to check it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleDraw {
    pub value: U256,
    pub proof: Digest,
}

/// Registry of trusted third-party randomness providers. Each key id holds a
/// secret; outputs are deterministic per (key, request) and auditable.
#[derive(Clone, Debug, Default)]
pub struct OracleRegistry {
    secrets: BTreeMap<u64, U256>,
}

impl OracleRegistry {
    pub fn new() -> OracleRegistry {
        OracleRegistry::default()
    }

    pub fn register(&mut self, key_id: u64, secret: U256) {
        self.secrets.insert(key_id, secret);
    }

    /// value = keccak(secret, request_seed); proof binds key id, request and
    /// value together for `verify_oracle`.
    pub fn random(&self, key_id: u64, request_seed: U256) -> Result<OracleDraw, MitigationError> {
        let secret = self.secrets.get(&key_id).ok_or(MitigationError::UnknownKey)?;
        let value = keccak256(encode_packed(&[(*secret).into(), request_seed.into()]).as_slice())
            .to_u256();
        Ok(OracleDraw {
            value,
            proof: oracle_proof(key_id, request_seed, value),
        })
    }
}

fn oracle_proof(key_id: u64, request_seed: U256, value: U256) -> Digest {
    keccak256(
        encode_packed(&[
            U256::from(key_id).into(),
            request_seed.into(),
            value.into(),
        ])
        .as_slice(),
    )
}

/// Checks that a claimed oracle output matches its proof.
pub fn verify_oracle(value: U256, proof: Digest, key_id: u64, request_seed: U256) -> bool {
    oracle_proof(key_id, request_seed, value) == proof
}

/// Periodic source rotation: block numbers are bucketed by `period` and walk
/// the schedule round-robin.
pub fn rotate_source(
    schedule: &[RandomSource],
    block_number: U256,
    period: u64,
) -> Result<RandomSource, MitigationError> {
    if schedule.is_empty() {
        return Err(MitigationError::Config("rotation schedule is empty"));
    }
    if period == 0 {
        return Err(MitigationError::Config("rotation period must be positive"));
    }
    let bucket = block_number
        .checked_div(U256::from(period))
        .expect("period is nonzero");
    let index = bucket
        .checked_rem(U256::from(schedule.len() as u64))
        .expect("schedule is nonempty")
        .low_u64() as usize;
    Ok(schedule[index])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn env_at(ts: u64) -> BlockEnv {
        BlockEnv {
            number: U256::from(ts),
            timestamp: U256::from(ts),
            difficulty: U256::from(1u64),
            gaslimit: U256::from(1u64),
            coinbase: Address([0x01; 20]),
        }
    }

    fn addr(b: u8) -> Address {
        Address([b; 20])
    }

    fn pool() -> CommitRevealPool {
        // Commits through t=100, reveals through t=200.
        CommitRevealPool::new(U256::from(100u64), U256::from(200u64)).unwrap()
    }

    #[test]
    fn commit_then_matching_reveal_is_accepted() {
        let mut pool = pool();
        let (value, salt) = (U256::from(42u64), U256::from(7u64));
        pool.commit(addr(1), commitment_digest(value, salt), &env_at(50)).unwrap();
        pool.reveal(addr(1), value, salt, &env_at(150)).unwrap();
        let outcome = pool.finalize(&env_at(201)).unwrap();
        // Single reveal: the combined value is the keccak of that one value.
        let expected = keccak256(encode_packed(&[value.into()]).as_slice()).to_u256();
        assert_eq!(outcome.value, expected);
        assert!(outcome.withholders.is_empty());
    }

    #[test]
    fn wrong_salt_is_rejected() {
        let mut pool = pool();
        let (value, salt) = (U256::from(42u64), U256::from(7u64));
        pool.commit(addr(1), commitment_digest(value, salt), &env_at(50)).unwrap();
        assert_eq!(
            pool.reveal(addr(1), value, U256::from(8u64), &env_at(150)),
            Err(MitigationError::RevealMismatch)
        );
    }

    #[test]
    fn phase_windows_are_enforced() {
        let mut pool = pool();
        let (value, salt) = (U256::ONE, U256::ONE);
        let commitment = commitment_digest(value, salt);
        assert_eq!(
            pool.commit(addr(1), commitment, &env_at(101)),
            Err(MitigationError::PhaseError)
        );
        pool.commit(addr(1), commitment, &env_at(100)).unwrap();
        // Too early and too late reveals.
        assert_eq!(
            pool.reveal(addr(1), value, salt, &env_at(100)),
            Err(MitigationError::PhaseError)
        );
        assert_eq!(
            pool.reveal(addr(1), value, salt, &env_at(201)),
            Err(MitigationError::PhaseError)
        );
        assert_eq!(pool.finalize(&env_at(200)), Err(MitigationError::RoundStillLive));
    }

    #[test]
    fn duplicate_commit_and_reveal_are_rejected() {
        let mut pool = pool();
        let (value, salt) = (U256::from(5u64), U256::from(6u64));
        let commitment = commitment_digest(value, salt);
        pool.commit(addr(1), commitment, &env_at(10)).unwrap();
        assert_eq!(
            pool.commit(addr(1), commitment, &env_at(11)),
            Err(MitigationError::DuplicateCommit)
        );
        pool.reveal(addr(1), value, salt, &env_at(150)).unwrap();
        assert_eq!(
            pool.reveal(addr(1), value, salt, &env_at(151)),
            Err(MitigationError::DuplicateReveal)
        );
    }

    #[test]
    fn reveal_without_commit_is_rejected() {
        let mut pool = pool();
        assert_eq!(
            pool.reveal(addr(1), U256::ONE, U256::ONE, &env_at(150)),
            Err(MitigationError::NotCommitted)
        );
    }

    #[test]
    fn three_reveals_combine_in_address_order() {
        let mut pool = pool();
        let values = [U256::from(11u64), U256::from(22u64), U256::from(33u64)];
        let salts = [U256::from(1u64), U256::from(2u64), U256::from(3u64)];
        // Commit out of address order on purpose.
        for (i, b) in [3u8, 1, 2].iter().enumerate() {
            pool.commit(
                addr(*b),
                commitment_digest(values[*b as usize - 1], salts[i]),
                &env_at(10),
            )
            .unwrap();
        }
        for b in [2u8, 3, 1] {
            let commit_index = [3u8, 1, 2].iter().position(|&x| x == b).unwrap();
            pool.reveal(addr(b), values[b as usize - 1], salts[commit_index], &env_at(150))
                .unwrap();
        }
        let outcome = pool.finalize(&env_at(201)).unwrap();
        // Independent recomputation: values packed in participant-address order.
        let expected = keccak256(
            encode_packed(&[values[0].into(), values[1].into(), values[2].into()]).as_slice(),
        )
        .to_u256();
        assert_eq!(outcome.value, expected);
    }

    #[test]
    fn withholder_is_reported() {
        let mut pool = pool();
        let (value, salt) = (U256::from(9u64), U256::from(10u64));
        pool.commit(addr(1), commitment_digest(value, salt), &env_at(10)).unwrap();
        pool.commit(addr(2), commitment_digest(value, salt), &env_at(10)).unwrap();
        pool.reveal(addr(1), value, salt, &env_at(150)).unwrap();
        let outcome = pool.finalize(&env_at(201)).unwrap();
        assert_eq!(outcome.withholders, vec![addr(2)]);
    }

    #[test]
    fn zero_reveals_is_no_entropy() {
        let mut pool = pool();
        pool.commit(addr(1), commitment_digest(U256::ONE, U256::ONE), &env_at(10)).unwrap();
        assert_eq!(pool.finalize(&env_at(201)), Err(MitigationError::NoEntropy));
    }

    #[test]
    fn changing_one_reveal_changes_the_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut collisions = 0;
        for _ in 0..100 {
            let a = U256::from_be_bytes(rng.gen());
            let b = U256::from_be_bytes(rng.gen());
            let c = U256::from_be_bytes(rng.gen());
            let c2 = U256::from_be_bytes(rng.gen());
            if c == c2 {
                continue;
            }
            let one = multi_source_random(&[a, b, c]).unwrap();
            let two = multi_source_random(&[a, b, c2]).unwrap();
            if one == two {
                collisions += 1;
            }
        }
        assert_eq!(collisions, 0);
    }

    #[test]
    fn multi_source_basics() {
        let x = U256::from(77u64);
        let expected = keccak256(encode_packed(&[x.into()]).as_slice()).to_u256();
        assert_eq!(multi_source_random(&[x]).unwrap(), expected);

        let a = U256::from(1u64);
        let b = U256::from(2u64);
        assert_ne!(
            multi_source_random(&[a, b]).unwrap(),
            multi_source_random(&[b, a]).unwrap()
        );
        assert_eq!(multi_source_random(&[]), Err(MitigationError::NoEntropy));
    }

    #[test]
    fn oracle_outputs_verify_and_tampering_fails() {
        let mut registry = OracleRegistry::new();
        registry.register(1, U256::from(123456u64));
        let draw = registry.random(1, U256::from(9u64)).unwrap();
        assert!(verify_oracle(draw.value, draw.proof, 1, U256::from(9u64)));

        let tampered = draw.value.checked_add(U256::ONE).unwrap();
        assert!(!verify_oracle(tampered, draw.proof, 1, U256::from(9u64)));
        assert!(!verify_oracle(draw.value, draw.proof, 2, U256::from(9u64)));
        assert!(!verify_oracle(draw.value, draw.proof, 1, U256::from(10u64)));

        // Deterministic and auditable per (key, request).
        assert_eq!(registry.random(1, U256::from(9u64)).unwrap(), draw);
        assert_eq!(registry.random(3, U256::ZERO), Err(MitigationError::UnknownKey));
    }

    #[test]
    fn rotation_walks_the_schedule() {
        let schedule = [RandomSource::BlockVars, RandomSource::Oracle];
        assert_eq!(
            rotate_source(&[RandomSource::Oracle], U256::from(123u64), 7).unwrap(),
            RandomSource::Oracle
        );
        for block in 0..10u64 {
            assert_eq!(
                rotate_source(&schedule, U256::from(block), 10).unwrap(),
                RandomSource::BlockVars
            );
            assert_eq!(
                rotate_source(&schedule, U256::from(block + 10), 10).unwrap(),
                RandomSource::Oracle
            );
        }
        // Wraps around.
        assert_eq!(
            rotate_source(&schedule, U256::from(20u64), 10).unwrap(),
            RandomSource::BlockVars
        );
        assert!(matches!(
            rotate_source(&schedule, U256::ZERO, 0),
            Err(MitigationError::Config(_))
        ));
        assert!(matches!(
            rotate_source(&[], U256::ZERO, 10),
            Err(MitigationError::Config(_))
        ));
    }

    #[test]
    fn binding_smoke_search_finds_no_second_opening() {
        // Collision-resistance smoke test, not a proof: 10,000 random
        // candidate openings never match a fixed commitment.
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let value = U256::from_be_bytes(rng.gen());
        let salt = U256::from_be_bytes(rng.gen());
        let commitment = commitment_digest(value, salt);
        for _ in 0..10_000 {
            let v2 = U256::from_be_bytes(rng.gen());
            let s2 = U256::from_be_bytes(rng.gen());
            if v2 == value && s2 == salt {
                continue;
            }
            assert_ne!(commitment_digest(v2, s2), commitment);
        }
    }

    #[test]
    fn hiding_smoke_distinct_pairs_distinct_commitments() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..10_000 {
            let value = U256::from_be_bytes(rng.gen());
            let salt = U256::from_be_bytes(rng.gen());
            assert!(seen.insert(commitment_digest(value, salt).0));
        }
    }
}
