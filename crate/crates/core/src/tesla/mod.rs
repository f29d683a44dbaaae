//! TESLA key chains, truncated-MAC tags and the MACK message.
//!
//! A chain is generated backwards from a secret seed `K_N` by repeated
//! application of a one-way derivation `K_{j-1} = F(K_j)`; the last derived
//! element `K_0` is the root key distributed in DSM-KROOT. Key `K_j` signs the
//! subframe starting `30 * j` seconds after the chain start time and is
//! disclosed in a later MACK, after which any receiver holding an earlier
//! authenticated key can check it by hashing forward.
//!
//! The derivation is salted with the chain id and the epoch of the input key:
//!
//! ```text
//! F(K_j) = trunc_{l_K}( H( K_j || CID (1 byte) || GST(K_j) (4 bytes, big endian) ) )
//! ```
//!
//! where `GST(K_j)` is the packed 32-bit GST word of `start + 30 * j` seconds.

mod chain;
mod mac;
mod mack;
mod tag;
mod verify;

pub use chain::{ChainDump, KeyDerivation, TeslaChain, TeslaParams};
pub use mac::{cmac_aes, HashFunction, MacFunction};
pub use mack::{
    build_mack, macseq, tags_per_mack, MackError, MackMessage, MackRequest, TagRequest,
    MACSEQ_BITS,
};
pub use tag::{compute_tag, make_tag, Adkd, Tag, TagBits, TagInfo, TAG_INFO_BITS};
pub use verify::{receiver_verify_tags, ChainAnchor, PendingSubframe, PendingTag, Verdict};

use crate::bitgrid::{BitError, GstTime};
use std::fmt;
use thiserror::Error;

/// Key lengths indexed by the 4-bit KS field. Codes 9 to 15 are reserved.
pub const KEY_SIZES: [u32; 9] = [96, 104, 112, 120, 128, 160, 192, 224, 256];
/// Tag lengths for TS codes 5 to 9. Codes 0 to 4 and 10 to 15 are reserved.
pub const TAG_SIZES: [u32; 5] = [20, 24, 28, 32, 40];
const FIRST_TS_CODE: u8 = 5;

/// Disclosure delays the MACK builder accepts, in subframes.
pub const DISCLOSURE_DELAYS: [u32; 2] = [1, 10];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TeslaError {
    #[error("key length {0} bits has no KS code")]
    UnsupportedKeyLength(u32),
    #[error("tag length {0} bits has no TS code")]
    UnsupportedTagLength(u32),
    #[error("{field} code {value} is reserved")]
    ReservedCode { field: &'static str, value: u8 },
    #[error("unsupported hash function {0}")]
    UnsupportedHash(String),
    #[error("{0} cannot be keyed with a {1}-bit key")]
    UnsupportedMacFunction(MacFunction, usize),
    #[error("chain id {0} does not fit in 2 bits")]
    BadChainId(u8),
    #[error("chain length must be at least 1")]
    EmptyChain,
    #[error("chain start {0} is not on an hour boundary")]
    UnalignedStart(GstTime),
    #[error("seed is {got} bits, expected {expected}")]
    BadSeedLength { got: usize, expected: u32 },
    #[error("key is {got} bits, expected {expected}")]
    BadKeyLength { got: usize, expected: u32 },
    #[error("candidate key index {candidate} is not after trusted index {trusted}")]
    IndexOrder { candidate: u32, trusted: u32 },
    #[error("key index {index} is outside the chain 1..={length}")]
    ChainExhausted { index: u32, length: u32 },
    #[error("the root key never signs")]
    RootKeySigning,
    #[error("tag width {0} is outside 1..=64")]
    BadTagWidth(u32),
    #[error("{requested} tags requested but a MACK holds {capacity}")]
    TooManyTags { requested: usize, capacity: u32 },
    #[error("disclosure delay {0} is not one of 1 or 10 subframes")]
    BadDisclosureDelay(u32),
    #[error("ADKD {0} is not a modeled strategy")]
    UnknownAdkd(u8),
    #[error("COP {0} does not fit in 4 bits")]
    BadCop(u8),
    #[error("PRN 0 is reserved for empty tag slots")]
    EmptySlotPrn,
    #[error("malformed chain dump: {0}")]
    Dump(String),
    #[error(transparent)]
    Time(#[from] BitError),
}

/// A TESLA chain key.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Key(Vec<u8>);

impl Key {
    pub fn from_bytes(bytes: impl Into<Vec<u8>>) -> Key {
        Key(bytes.into())
    }

    pub fn from_hex(s: &str) -> Result<Key, hex::FromHexError> {
        hex::decode(s.trim()).map(Key)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn bit_len(&self) -> usize {
        self.0.len() * 8
    }

    pub fn to_hex(&self) -> String {
        hex::encode_upper(&self.0)
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Key({})", self.to_hex())
    }
}

/// KS code for a key length.
pub fn ks_code(key_bits: u32) -> Result<u8, TeslaError> {
    KEY_SIZES
        .iter()
        .position(|&k| k == key_bits)
        .map(|p| p as u8)
        .ok_or(TeslaError::UnsupportedKeyLength(key_bits))
}

pub fn key_bits_from_ks(code: u8) -> Result<u32, TeslaError> {
    KEY_SIZES
        .get(usize::from(code))
        .copied()
        .ok_or(TeslaError::ReservedCode {
            field: "KS",
            value: code,
        })
}

/// TS code for a tag length.
pub fn ts_code(tag_bits: u32) -> Result<u8, TeslaError> {
    TAG_SIZES
        .iter()
        .position(|&t| t == tag_bits)
        .map(|p| p as u8 + FIRST_TS_CODE)
        .ok_or(TeslaError::UnsupportedTagLength(tag_bits))
}

pub fn tag_bits_from_ts(code: u8) -> Result<u32, TeslaError> {
    code.checked_sub(FIRST_TS_CODE)
        .and_then(|i| TAG_SIZES.get(usize::from(i)))
        .copied()
        .ok_or(TeslaError::ReservedCode {
            field: "TS",
            value: code,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_ts_tables() {
        for (code, bits) in KEY_SIZES.iter().enumerate() {
            assert_eq!(ks_code(*bits).unwrap(), code as u8);
            assert_eq!(key_bits_from_ks(code as u8).unwrap(), *bits);
        }
        for code in 9..16 {
            assert!(key_bits_from_ks(code).is_err(), "KS {code} is reserved");
        }
        for code in (0..5).chain(10..16) {
            assert!(tag_bits_from_ts(code).is_err(), "TS {code} is reserved");
        }
        for code in 5..10 {
            assert_eq!(ts_code(tag_bits_from_ts(code).unwrap()).unwrap(), code);
        }
        assert_eq!(*KEY_SIZES.first().unwrap(), 96);
        assert_eq!(*KEY_SIZES.last().unwrap(), 256);
        assert_eq!(*TAG_SIZES.first().unwrap(), 20);
        assert_eq!(*TAG_SIZES.last().unwrap(), 40);
        assert!(ks_code(64).is_err());
        assert!(ts_code(10).is_err());
    }
}
