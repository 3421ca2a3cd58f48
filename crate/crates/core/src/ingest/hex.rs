//! `0x`-prefixed hex codecs for JSON-RPC quantities and fixed-size data.

use std::fmt;

use ruint::aliases::U256;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HexError {
    #[error("missing 0x prefix in {0:?}")]
    MissingPrefix(String),
    #[error("no digits after 0x")]
    Empty,
    #[error("invalid hex digit in {0:?}")]
    InvalidDigit(String),
    #[error("{input:?} exceeds {bits} bits")]
    Overflow { input: String, bits: u32 },
    #[error("expected {expected} bytes of data, got {got} hex digits")]
    DataLength { expected: usize, got: usize },
}

fn digits(s: &str) -> Result<&str, HexError> {
    let body = s.strip_prefix("0x").ok_or_else(|| HexError::MissingPrefix(s.to_owned()))?;
    if body.is_empty() {
        return Err(HexError::Empty);
    }
    if !body.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(HexError::InvalidDigit(s.to_owned()));
    }
    Ok(body)
}

/// Unsigned integer that travels as a JSON-RPC quantity (`"0x1a"`).
pub trait Quantity: Sized + Copy {
    const BITS: u32;
    fn from_hex_digits(digits: &str) -> Self;
    fn to_quantity(&self) -> String;

    fn parse_quantity(s: &str) -> Result<Self, HexError> {
        let d = digits(s)?;
        let significant = d.trim_start_matches('0');
        if significant.len() as u32 * 4 > Self::BITS {
            return Err(HexError::Overflow { input: s.to_owned(), bits: Self::BITS });
        }
        Ok(Self::from_hex_digits(if significant.is_empty() { "0" } else { significant }))
    }
}

macro_rules! prim_quantity {
    ($t:ty) => {
        impl Quantity for $t {
            const BITS: u32 = <$t>::BITS;
            fn from_hex_digits(d: &str) -> Self {
                <$t>::from_str_radix(d, 16).expect("digits validated")
            }
            fn to_quantity(&self) -> String {
                format!("{:#x}", self)
            }
        }
    };
}
prim_quantity!(u64);
prim_quantity!(u128);

impl Quantity for U256 {
    const BITS: u32 = 256;
    fn from_hex_digits(d: &str) -> Self {
        U256::from_str_radix(d, 16).expect("digits validated")
    }
    fn to_quantity(&self) -> String {
        format!("{:#x}", self)
    }
}

/// Serde adapter: `#[serde(with = "quantity")]`.
pub mod quantity {
    use super::*;

    pub fn serialize<Q: Quantity, S: Serializer>(v: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_quantity())
    }

    pub fn deserialize<'de, Q: Quantity, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        Q::parse_quantity(&s).map_err(de::Error::custom)
    }
}

/// Fixed-length byte string encoded as `0x` + `2N` hex digits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FixedBytes<const N: usize>(pub [u8; N]);

/// 20-byte account address.
pub type Address = FixedBytes<20>;
/// 32-byte transaction hash.
pub type TxHash = FixedBytes<32>;

impl<const N: usize> FixedBytes<N> {
    pub const fn from_bytes(bytes: [u8; N]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; N] {
        &self.0
    }

    pub fn parse(s: &str) -> Result<Self, HexError> {
        let d = digits(s)?;
        if d.len() != 2 * N {
            return Err(HexError::DataLength { expected: N, got: d.len() });
        }
        let mut out = [0u8; N];
        hex::decode_to_slice(d, &mut out).map_err(|_| HexError::InvalidDigit(s.to_owned()))?;
        Ok(Self(out))
    }
}

impl<const N: usize> fmt::Display for FixedBytes<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl<const N: usize> fmt::Debug for FixedBytes<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<const N: usize> Serialize for FixedBytes<N> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de, const N: usize> Deserialize<'de> for FixedBytes<N> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V<const N: usize>;
        impl<const N: usize> Visitor<'_> for V<N> {
            type Value = FixedBytes<N>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "0x-prefixed {N}-byte hex string")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                FixedBytes::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_str(V::<N>)
    }
}

/// Approximate conversion of a wei amount to ether.
pub fn wei_to_ether(v: U256) -> f64 {
    let limbs = v.as_limbs();
    let mut acc = 0.0f64;
    for &l in limbs.iter().rev() {
        acc = acc * 18_446_744_073_709_551_616.0 + l as f64;
    }
    acc / 1e18
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_and_small_quantities() {
        assert_eq!(u64::parse_quantity("0x0").unwrap(), 0);
        assert_eq!(u64::parse_quantity("0x1a").unwrap(), 26);
        assert_eq!(u64::parse_quantity("0x00ff").unwrap(), 255);
        assert_eq!(0u64.to_quantity(), "0x0");
        assert_eq!(U256::ZERO.to_quantity(), "0x0");
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(u64::parse_quantity("1a"), Err(HexError::MissingPrefix(_))));
        assert!(matches!(u64::parse_quantity("0x"), Err(HexError::Empty)));
        assert!(matches!(u64::parse_quantity("0xzz"), Err(HexError::InvalidDigit(_))));
        assert!(matches!(u64::parse_quantity("0x-1"), Err(HexError::InvalidDigit(_))));
        assert!(matches!(
            u64::parse_quantity("0x10000000000000000"),
            Err(HexError::Overflow { bits: 64, .. })
        ));
        let too_big = format!("0x1{}", "0".repeat(64));
        assert!(U256::parse_quantity(&too_big).is_err());
        assert!(Address::parse("0x1234").is_err());
    }

    #[test]
    fn u256_max() {
        let max = format!("0x{}", "f".repeat(64));
        assert_eq!(U256::parse_quantity(&max).unwrap(), U256::MAX);
        assert_eq!(U256::MAX.to_quantity(), max);
    }

    #[test]
    fn ether_scaling() {
        let one_ether = U256::from(1_000_000_000_000_000_000u64);
        assert!((wei_to_ether(one_ether) - 1.0).abs() < 1e-15);
        let big = U256::from(1u64) << 70;
        assert!((wei_to_ether(big) - 2f64.powi(70) / 1e18).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn u256_quantity_round_trip(limbs in proptest::array::uniform4(any::<u64>())) {
            let v = U256::from_limbs(limbs);
            let s = v.to_quantity();
            prop_assert_eq!(U256::parse_quantity(&s).unwrap(), v);
        }

        #[test]
        fn garbage_never_parses(s in "[g-z ]{1,8}") {
            let with_prefix = format!("0x{s}");
            prop_assert!(u64::parse_quantity(&with_prefix).is_err());
        }
    }
}
