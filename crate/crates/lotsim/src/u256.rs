//! Unsigned 256-bit integers with checked arithmetic.
//!
//! All value and seed quantities in the simulator are `U256`. Addition is
//! checked (overflow is an error, never silent wraparound) and division
//! truncates toward zero, matching the on-chain semantics the contracts rely
//! on.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

/// Number of wei in one ether.
pub const WEI_PER_ETHER: u64 = 1_000_000_000_000_000_000;

/// Unsigned 256-bit integer, stored as four little-endian u64 limbs.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct U256([u64; 4]);

impl U256 {
    pub const ZERO: U256 = U256([0, 0, 0, 0]);
    pub const ONE: U256 = U256([1, 0, 0, 0]);
    pub const MAX: U256 = U256([u64::MAX; 4]);

    pub fn is_zero(&self) -> bool {
        self.0 == [0, 0, 0, 0]
    }

    /// Big-endian 32-byte encoding, as used by packed ABI encoding.
    pub fn to_be_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (i, limb) in self.0.iter().rev().enumerate() {
            out[8 * i..8 * i + 8].copy_from_slice(&limb.to_be_bytes());
        }
        out
    }

    pub fn from_be_bytes(bytes: [u8; 32]) -> U256 {
        let mut limbs = [0u64; 4];
        for i in 0..4 {
            let mut chunk = [0u8; 8];
            chunk.copy_from_slice(&bytes[8 * i..8 * i + 8]);
            limbs[3 - i] = u64::from_be_bytes(chunk);
        }
        U256(limbs)
    }

    /// Returns the value as u64 if it fits.
    pub fn to_u64(&self) -> Option<u64> {
        if self.0[1] == 0 && self.0[2] == 0 && self.0[3] == 0 {
            Some(self.0[0])
        } else {
            None
        }
    }

    /// Low 64 bits, discarding the rest.
    pub fn low_u64(&self) -> u64 {
        self.0[0]
    }

    pub fn checked_add(self, rhs: U256) -> Option<U256> {
        let (sum, overflow) = self.overflowing_add(rhs);
        if overflow {
            None
        } else {
            Some(sum)
        }
    }

    pub fn checked_sub(self, rhs: U256) -> Option<U256> {
        if rhs > self {
            None
        } else {
            Some(self.wrapping_sub(rhs))
        }
    }

    pub fn checked_mul(self, rhs: U256) -> Option<U256> {
        let wide = self.widening_mul(rhs);
        if wide[4..] != [0, 0, 0, 0] {
            return None;
        }
        Some(U256([wide[0], wide[1], wide[2], wide[3]]))
    }

    /// Truncating division; `None` when dividing by zero.
    pub fn checked_div(self, rhs: U256) -> Option<U256> {
        self.div_rem(rhs).map(|(q, _)| q)
    }

    pub fn checked_rem(self, rhs: U256) -> Option<U256> {
        self.div_rem(rhs).map(|(_, r)| r)
    }

    /// Quotient and remainder of truncating division; `None` for zero divisor.
    pub fn div_rem(self, divisor: U256) -> Option<(U256, U256)> {
        if divisor.is_zero() {
            return None;
        }
        if self < divisor {
            return Some((U256::ZERO, self));
        }
        // Single-limb divisors (timestamps, the literal 1000, decimal base)
        // take the word-by-word path.
        if let Some(d) = divisor.to_u64() {
            let mut quotient = [0u64; 4];
            let mut rem = 0u64;
            for i in (0..4).rev() {
                let cur = ((rem as u128) << 64) | self.0[i] as u128;
                quotient[i] = (cur / d as u128) as u64;
                rem = (cur % d as u128) as u64;
            }
            return Some((U256(quotient), U256::from(rem)));
        }
        // Binary long division, most significant bit first.
        let mut quotient = U256::ZERO;
        let mut remainder = U256::ZERO;
        for i in (0..256).rev() {
            remainder = remainder.shl1();
            if self.bit(i) {
                remainder.0[0] |= 1;
            }
            if remainder >= divisor {
                remainder = remainder.wrapping_sub(divisor);
                quotient.set_bit(i);
            }
        }
        Some((quotient, remainder))
    }

    fn overflowing_add(self, rhs: U256) -> (U256, bool) {
        let mut out = [0u64; 4];
        let mut carry = 0u64;
        for (i, slot) in out.iter_mut().enumerate() {
            let sum = self.0[i] as u128 + rhs.0[i] as u128 + carry as u128;
            *slot = sum as u64;
            carry = (sum >> 64) as u64;
        }
        (U256(out), carry != 0)
    }

    fn wrapping_sub(self, rhs: U256) -> U256 {
        let mut out = [0u64; 4];
        let mut borrow = 0u64;
        for (i, slot) in out.iter_mut().enumerate() {
            let lhs = self.0[i] as u128;
            let sub = rhs.0[i] as u128 + borrow as u128;
            if lhs >= sub {
                *slot = (lhs - sub) as u64;
                borrow = 0;
            } else {
                *slot = (lhs + (1u128 << 64) - sub) as u64;
                borrow = 1;
            }
        }
        U256(out)
    }

    fn widening_mul(self, rhs: U256) -> [u64; 8] {
        let mut out = [0u64; 8];
        for i in 0..4 {
            let mut carry = 0u64;
            for j in 0..4 {
                let acc = out[i + j] as u128 + self.0[i] as u128 * rhs.0[j] as u128 + carry as u128;
                out[i + j] = acc as u64;
                carry = (acc >> 64) as u64;
            }
            out[i + 4] = carry;
        }
        out
    }

    fn bit(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    fn set_bit(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn shl1(self) -> U256 {
        let mut out = [0u64; 4];
        let mut carry = 0u64;
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = (self.0[i] << 1) | carry;
            carry = self.0[i] >> 63;
        }
        U256(out)
    }
}

impl From<u64> for U256 {
    fn from(v: u64) -> U256 {
        U256([v, 0, 0, 0])
    }
}

impl From<u32> for U256 {
    fn from(v: u32) -> U256 {
        U256([v as u64, 0, 0, 0])
    }
}

impl From<u128> for U256 {
    fn from(v: u128) -> U256 {
        U256([v as u64, (v >> 64) as u64, 0, 0])
    }
}

impl Ord for U256 {
    fn cmp(&self, other: &U256) -> Ordering {
        for i in (0..4).rev() {
            match self.0[i].cmp(&other.0[i]) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for U256 {
    fn partial_cmp(&self, other: &U256) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut digits = Vec::with_capacity(78);
        let ten = U256::from(10u64);
        let mut value = *self;
        while !value.is_zero() {
            let (q, r) = value.div_rem(ten).expect("divisor is nonzero");
            digits.push(b'0' + r.low_u64() as u8);
            value = q;
        }
        digits.reverse();
        f.write_str(std::str::from_utf8(&digits).expect("digits are ascii"))
    }
}

impl fmt::Debug for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U256({})", self)
    }
}

impl fmt::LowerHex for U256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for byte in self.to_be_bytes() {
            write!(f, "{:02x}", byte)?;
        }
        Ok(())
    }
}

/// Error parsing a decimal string into a `U256`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseU256Error {
    #[error("empty string is not a U256")]
    Empty,
    #[error("invalid decimal digit {0:?}")]
    InvalidDigit(char),
    #[error("value exceeds 2^256 - 1")]
    Overflow,
}

impl FromStr for U256 {
    type Err = ParseU256Error;

    fn from_str(s: &str) -> Result<U256, ParseU256Error> {
        if s.is_empty() {
            return Err(ParseU256Error::Empty);
        }
        let ten = U256::from(10u64);
        let mut acc = U256::ZERO;
        for c in s.chars() {
            let digit = c.to_digit(10).ok_or(ParseU256Error::InvalidDigit(c))?;
            acc = acc
                .checked_mul(ten)
                .and_then(|v| v.checked_add(U256::from(digit as u64)))
                .ok_or(ParseU256Error::Overflow)?;
        }
        Ok(acc)
    }
}

impl serde::Serialize for U256 {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for U256 {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<U256, D::Error> {
        struct Visitor;

        impl serde::de::Visitor<'_> for Visitor {
            type Value = U256;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal string or non-negative integer")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<U256, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<U256, E> {
                Ok(U256::from(v))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<U256, E> {
                u64::try_from(v)
                    .map(U256::from)
                    .map_err(|_| E::custom("negative value is not a U256"))
            }
        }

        deserializer.deserialize_any(Visitor)
    }
}

/// `n` ether expressed in wei.
pub fn ether(n: u64) -> U256 {
    U256::from(n)
        .checked_mul(U256::from(WEI_PER_ETHER))
        .expect("desk-scale ether amounts fit in 256 bits")
}

/// One tenth of an ether in wei: the lottery stake.
pub fn tenth_ether() -> U256 {
    U256::from(WEI_PER_ETHER / 10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_parts(hi: u128, lo: u128) -> U256 {
        let mut limbs = [0u64; 4];
        limbs[0] = lo as u64;
        limbs[1] = (lo >> 64) as u64;
        limbs[2] = hi as u64;
        limbs[3] = (hi >> 64) as u64;
        U256(limbs)
    }

    #[test]
    fn be_bytes_round_trip() {
        let v = from_parts(0x0123_4567_89ab_cdef, 0xfedc_ba98_7654_3210);
        assert_eq!(U256::from_be_bytes(v.to_be_bytes()), v);
        assert_eq!(U256::from_be_bytes([0u8; 32]), U256::ZERO);
        let mut one = [0u8; 32];
        one[31] = 1;
        assert_eq!(U256::from_be_bytes(one), U256::ONE);
    }

    #[test]
    fn checked_add_overflow() {
        assert_eq!(U256::MAX.checked_add(U256::ONE), None);
        assert_eq!(U256::MAX.checked_add(U256::ZERO), Some(U256::MAX));
        let half = U256::MAX.checked_div(U256::from(2u64)).unwrap();
        assert!(half.checked_add(half).is_some());
        assert!(half
            .checked_add(half)
            .unwrap()
            .checked_add(U256::from(2u64))
            .is_none());
    }

    #[test]
    fn division_truncates_and_rejects_zero() {
        let (q, r) = U256::from(7u64).div_rem(U256::from(2u64)).unwrap();
        assert_eq!(q, U256::from(3u64));
        assert_eq!(r, U256::ONE);
        assert_eq!(U256::from(7u64).div_rem(U256::ZERO), None);
        assert_eq!(U256::ZERO.checked_div(U256::from(5u64)), Some(U256::ZERO));
    }

    #[test]
    fn decimal_round_trip() {
        for s in [
            "0",
            "1",
            "1000",
            "100000000000000000",
            "115792089237316195423570985008687907853269984665640564039457584007913129639935",
        ] {
            let v: U256 = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
        assert_eq!(
            "115792089237316195423570985008687907853269984665640564039457584007913129639936"
                .parse::<U256>(),
            Err(ParseU256Error::Overflow)
        );
        assert_eq!("".parse::<U256>(), Err(ParseU256Error::Empty));
        assert_eq!("12a".parse::<U256>(), Err(ParseU256Error::InvalidDigit('a')));
    }

    #[test]
    fn ether_helpers() {
        assert_eq!(tenth_ether().to_string(), "100000000000000000");
        assert_eq!(ether(1).to_string(), "1000000000000000000");
        let pool: U256 = "600000000000000000".parse().unwrap();
        assert_eq!(
            tenth_ether().checked_mul(U256::from(6u64)).unwrap(),
            pool
        );
    }

    proptest! {
        // u128 arithmetic is the oracle for everything that fits in 128 bits.
        #[test]
        fn add_matches_u128(a in any::<u128>(), b in any::<u128>()) {
            let expected = a.checked_add(b);
            let got = U256::from(a).checked_add(U256::from(b));
            match expected {
                Some(sum) => prop_assert_eq!(got, Some(U256::from(sum))),
                // The sum overflowed u128 but still fits in 256 bits.
                None => {
                    let wide = got.unwrap();
                    let back = (a as u64 as u128).wrapping_add(b as u64 as u128);
                    prop_assert_eq!(wide.low_u64(), back as u64);
                }
            }
        }

        #[test]
        fn sub_matches_u128(a in any::<u128>(), b in any::<u128>()) {
            let expected = a.checked_sub(b).map(U256::from);
            prop_assert_eq!(U256::from(a).checked_sub(U256::from(b)), expected);
        }

        #[test]
        fn mul_matches_u128(a in any::<u64>(), b in any::<u64>()) {
            let expected = U256::from(a as u128 * b as u128);
            prop_assert_eq!(U256::from(a).checked_mul(U256::from(b)), Some(expected));
        }

        #[test]
        fn div_rem_matches_u128(a in any::<u128>(), b in 1..=u128::MAX) {
            let (q, r) = U256::from(a).div_rem(U256::from(b)).unwrap();
            prop_assert_eq!(q, U256::from(a / b));
            prop_assert_eq!(r, U256::from(a % b));
        }

        #[test]
        fn div_rem_reconstructs(a in any::<[u64; 4]>(), b in any::<[u64; 4]>()) {
            let x = U256(a);
            let d = U256(b);
            prop_assume!(!d.is_zero());
            let (q, r) = x.div_rem(d).unwrap();
            prop_assert!(r < d);
            let back = q.checked_mul(d).unwrap().checked_add(r).unwrap();
            prop_assert_eq!(back, x);
        }

        #[test]
        fn ordering_matches_bytes(a in any::<[u64; 4]>(), b in any::<[u64; 4]>()) {
            let x = U256(a);
            let y = U256(b);
            prop_assert_eq!(x.cmp(&y), x.to_be_bytes().cmp(&y.to_be_bytes()));
        }

        #[test]
        fn display_round_trips(a in any::<[u64; 4]>()) {
            let x = U256(a);
            prop_assert_eq!(x.to_string().parse::<U256>().unwrap(), x);
        }
    }
}
