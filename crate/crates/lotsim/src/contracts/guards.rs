//! The three caller-identity guards: code-size check, signature check, and
//! tx.origin check.
//!
//! The code-size guard is the one with the hole: a contract's code size is
//! zero while its constructor runs, so a purchase issued from a constructor
//! walks straight through it.

use serde::{Deserialize, Serialize};

use crate::chain::{CallContext, Chain};

/// Which guard variant protects a call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardChoice {
    #[serde(rename = "codesize")]
    CodeSize,
    Signature,
    Origin,
}

impl GuardChoice {
    pub const ALL: [GuardChoice; 3] = [GuardChoice::CodeSize, GuardChoice::Signature, GuardChoice::Origin];

    pub fn name(&self) -> &'static str {
        match self {
            GuardChoice::CodeSize => "codesize",
            GuardChoice::Signature => "signature",
            GuardChoice::Origin => "origin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GuardError {
    #[error("sorry_humans_only")]
    HumansOnly,
    #[error("missing or invalid signature")]
    BadSignature,
    #[error("tx.origin does not match msg.sender")]
    OriginMismatch,
}

/// Passes iff the caller's code size is zero at call time. EOAs pass;
/// deployed contracts are blocked; contracts still inside their constructor
/// pass, which is the vulnerability.
pub fn guard_codesize(ctx: &CallContext, chain: &Chain) -> Result<(), GuardError> {
    if chain.extcodesize(ctx.msg_sender) == 0 {
        Ok(())
    } else {
        Err(GuardError::HumansOnly)
    }
}

/// Passes iff the call carries a signature over its own call data whose
/// recovered signer equals msg.sender.
pub fn guard_signature(ctx: &CallContext, chain: &Chain) -> Result<(), GuardError> {
    let sig = ctx.signature.as_ref().ok_or(GuardError::BadSignature)?;
    if chain.verify_signature(sig, ctx.msg_sender, &ctx.msg_data) {
        Ok(())
    } else {
        Err(GuardError::BadSignature)
    }
}

/// Passes iff the transaction originator is the direct caller.
pub fn guard_origin(ctx: &CallContext) -> Result<(), GuardError> {
    if ctx.tx_origin == ctx.msg_sender {
        Ok(())
    } else {
        Err(GuardError::OriginMismatch)
    }
}

pub fn enforce_guard(choice: GuardChoice, ctx: &CallContext, chain: &Chain) -> Result<(), GuardError> {
    match choice {
        GuardChoice::CodeSize => guard_codesize(ctx, chain),
        GuardChoice::Signature => guard_signature(ctx, chain),
        GuardChoice::Origin => guard_origin(ctx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{AccountKind, Address, CallContext};
    use crate::u256::{ether, U256};

    const DATA: &[u8] = b"buy";

    fn setup() -> (Chain, Address, Address) {
        let mut chain = Chain::new(42);
        let eoa = chain.create_account(AccountKind::Eoa, ether(10));
        let contract = chain
            .deploy_contract::<std::convert::Infallible, _>(eoa, U256::ZERO, |_, _| Ok(()))
            .unwrap();
        (chain, eoa, contract)
    }

    fn eoa_ctx(chain: &Chain, eoa: Address) -> CallContext {
        let sig = chain.sign(eoa, DATA);
        CallContext::eoa_call(eoa, U256::ZERO, DATA.to_vec()).with_signature(sig)
    }

    fn contract_ctx(chain: &Chain, contract: Address, origin: Address, in_constructor: bool) -> CallContext {
        // The attacker contract forwards the best signature it can get: one
        // made by its originating EOA.
        let sig = chain.sign(origin, DATA);
        CallContext::contract_call(contract, origin, U256::ZERO, in_constructor, DATA.to_vec())
            .with_signature(sig)
    }

    #[test]
    fn codesize_guard_passes_eoa_and_blocks_deployed_contract() {
        let (chain, eoa, contract) = setup();
        assert!(guard_codesize(&eoa_ctx(&chain, eoa), &chain).is_ok());
        let err = guard_codesize(&contract_ctx(&chain, contract, eoa, false), &chain).unwrap_err();
        assert_eq!(err, GuardError::HumansOnly);
        assert_eq!(err.to_string(), "sorry_humans_only");
    }

    #[test]
    fn codesize_guard_passes_mid_constructor() {
        let (mut chain, eoa, _) = setup();
        let mut verdict = None;
        chain
            .deploy_contract::<std::convert::Infallible, _>(eoa, U256::ZERO, |chain, me| {
                let ctx = contract_ctx(chain, me, eoa, true);
                verdict = Some(guard_codesize(&ctx, chain).is_ok());
                Ok(())
            })
            .unwrap();
        assert_eq!(verdict, Some(true));
    }

    #[test]
    fn signature_guard_truth_table() {
        // Enumerated by hand from the verify rule: the recovered signer must
        // equal msg.sender.
        let (chain, eoa, contract) = setup();

        // EOA signs its own call data: recovered = EOA = msg.sender.
        assert!(guard_signature(&eoa_ctx(&chain, eoa), &chain).is_ok());

        // Contract forwards its origin's signature: recovered = EOA != contract.
        assert_eq!(
            guard_signature(&contract_ctx(&chain, contract, eoa, false), &chain),
            Err(GuardError::BadSignature)
        );

        // Missing signature.
        let bare = CallContext::eoa_call(eoa, U256::ZERO, DATA.to_vec());
        assert_eq!(guard_signature(&bare, &chain), Err(GuardError::BadSignature));

        // Signature over different data than the call carries.
        let stale = chain.sign(eoa, b"other");
        let mismatched = CallContext::eoa_call(eoa, U256::ZERO, DATA.to_vec()).with_signature(stale);
        assert_eq!(guard_signature(&mismatched, &chain), Err(GuardError::BadSignature));
    }

    #[test]
    fn origin_guard_only_passes_direct_calls() {
        let (chain, eoa, contract) = setup();
        assert!(guard_origin(&eoa_ctx(&chain, eoa)).is_ok());
        assert_eq!(
            guard_origin(&contract_ctx(&chain, contract, eoa, false)),
            Err(GuardError::OriginMismatch)
        );
        assert_eq!(
            guard_origin(&contract_ctx(&chain, contract, eoa, true)),
            Err(GuardError::OriginMismatch)
        );
    }

    /// The module's central security assertion: exhaustive caller-class by
    /// guard outcomes. CodeSize passes EOAs and in-constructor contracts;
    /// Origin passes only EOAs; Signature passes only EOAs with a valid
    /// self-signature.
    #[test]
    fn guard_truth_table_exhaustive() {
        let (mut chain, eoa, deployed) = setup();

        let mut results = Vec::new();
        for guard in GuardChoice::ALL {
            // EOA direct.
            results.push((guard, "eoa", enforce_guard(guard, &eoa_ctx(&chain, eoa), &chain).is_ok()));
            // Deployed contract.
            results.push((
                guard,
                "contract",
                enforce_guard(guard, &contract_ctx(&chain, deployed, eoa, false), &chain).is_ok(),
            ));
            // Contract mid-constructor.
            let mut passed = None;
            chain
                .deploy_contract::<std::convert::Infallible, _>(eoa, U256::ZERO, |chain, me| {
                    let ctx = contract_ctx(chain, me, eoa, true);
                    passed = Some(enforce_guard(guard, &ctx, chain).is_ok());
                    Ok(())
                })
                .unwrap();
            results.push((guard, "constructor", passed.unwrap()));
        }

        let expected = [
            (GuardChoice::CodeSize, "eoa", true),
            (GuardChoice::CodeSize, "contract", false),
            (GuardChoice::CodeSize, "constructor", true),
            (GuardChoice::Signature, "eoa", true),
            (GuardChoice::Signature, "contract", false),
            (GuardChoice::Signature, "constructor", false),
            (GuardChoice::Origin, "eoa", true),
            (GuardChoice::Origin, "contract", false),
            (GuardChoice::Origin, "constructor", false),
        ];
        assert_eq!(results, expected);
    }
}
