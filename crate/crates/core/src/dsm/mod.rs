//! HKROOT transport: NMA header, DSM-KROOT and DSM-PKR messages, their
//! segmentation into DSM blocks, receiver-side reassembly and the Merkle tree
//! that authenticates broadcast public keys.
//!
//! Every HKROOT section is 120 bits:
//!
//! ```text
//! nominal:  NMA header (8) | DSM ID (4) | BID (4) | block (104)
//! extended: NMA header (8) | DSM ID (4) | BID (7) | block (101)
//! ```
//!
//! The first `BID`-width bits of block 0 carry the block count minus one.

mod blocks;
mod header;
mod kroot;
mod merkle;
mod pkr;

pub use blocks::{segment, Accumulate, DsmAccumulator, DsmBlock, DsmBlockStream, HkrootMessage};
pub use header::{cpks_transition, Cpks, LifecycleEvent, NmaHeader, NmaStatus};
pub use kroot::{build_dsm_kroot, verify_kroot, DsmKroot, KrootHeader, KROOT_PREAMBLE_BITS};
pub use merkle::{fold_path, leaf_hash, MerkleLeaf, MerkleTree, MERKLE_DEPTH, MERKLE_LEAVES};
pub use pkr::{build_dsm_pkr, verify_pkr, DsmPkr, PKR_FIXED_BITS, PKR_METADATA_BITS};

use thiserror::Error;

use crate::bitgrid::BitError;
use crate::tesla::TeslaError;

/// Gross DSM block size.
pub const DSM_BLOCK_BITS: usize = 104;
/// DSM IDs below this value carry DSM-KROOT; the rest carry DSM-PKR.
pub const FIRST_PKR_DSM_ID: u8 = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DsmError {
    #[error("signature of {ds_bits} bits makes DSM-KROOT {total} bits, over the {capacity}-bit {mode} limit")]
    SignatureTooLarge {
        ds_bits: usize,
        total: usize,
        capacity: usize,
        mode: BidMode,
    },
    #[error("public key of {npk_bits} bits makes DSM-PKR {total} bits, over the {capacity}-bit {mode} limit")]
    KeyTooLarge {
        npk_bits: usize,
        total: usize,
        capacity: usize,
        mode: BidMode,
    },
    #[error("{blocks} blocks exceed the {max}-block {mode} limit")]
    CapacityExceeded { blocks: usize, max: usize, mode: BidMode },
    #[error("payload of {0} bits is not a whole number of blocks")]
    Unaligned(usize),
    #[error("DSM is {got} bits, expected {expected}")]
    BadLength { got: usize, expected: usize },
    #[error("block count field says {field} blocks, message has {actual}")]
    BadBlockCount { field: usize, actual: usize },
    #[error("non-zero padding")]
    MalformedPadding,
    #[error("non-zero reserved bits")]
    ReservedBits,
    #[error("{0} is reserved")]
    ReservedValue(&'static str),
    #[error("transition {event:?} is not defined from {from:?}")]
    InvalidTransition { from: Cpks, event: LifecycleEvent },
    #[error("DSM ID {0} does not fit in 4 bits")]
    BadDsmId(u8),
    #[error("NPKID {0} does not fit in 4 bits")]
    BadNpkid(u8),
    #[error("NPKT {0} has no known key length")]
    UnknownNpkt(u8),
    #[error("tree leaf {0} does not hold this key")]
    LeafMismatch(u8),
    #[error("Merkle tree needs exactly 16 leaves, got {0}")]
    LeafCount(usize),
    #[error("Merkle tree file line {line}: {reason}")]
    TreeFile { line: usize, reason: String },
    #[error("signing failed: {0}")]
    Signing(String),
    #[error(transparent)]
    Tesla(#[from] TeslaError),
    #[error(transparent)]
    Bits(#[from] BitError),
}

/// Width of the block id field and, with it, the net block size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum BidMode {
    /// 4-bit BID, 104-bit blocks, 16 blocks at most.
    #[default]
    Nominal,
    /// 7-bit BID taken from the block, 101-bit blocks, 128 blocks at most.
    Extended,
}

impl BidMode {
    pub fn bid_bits(self) -> u32 {
        match self {
            BidMode::Nominal => 4,
            BidMode::Extended => 7,
        }
    }

    /// Payload bits carried per block.
    pub fn block_bits(self) -> usize {
        DSM_BLOCK_BITS - (self.bid_bits() as usize - 4)
    }

    pub fn max_blocks(self) -> usize {
        1 << self.bid_bits()
    }

    /// `max_blocks * 104`: 1664 nominal, 13312 extended.
    pub fn gross_capacity_bits(self) -> usize {
        self.max_blocks() * DSM_BLOCK_BITS
    }

    /// `max_blocks * block_bits`: 1664 nominal, 12928 extended.
    pub fn net_capacity_bits(self) -> usize {
        self.max_blocks() * self.block_bits()
    }

    /// Blocks needed for `payload_bits`, or `None` past the block limit.
    pub fn blocks_needed(self, payload_bits: usize) -> Option<usize> {
        let n = payload_bits.div_ceil(self.block_bits());
        (n <= self.max_blocks()).then_some(n)
    }

    /// `payload_bits` rounded up to whole blocks.
    pub fn padded_len(self, payload_bits: usize) -> usize {
        payload_bits.div_ceil(self.block_bits()) * self.block_bits()
    }

    pub fn name(self) -> &'static str {
        match self {
            BidMode::Nominal => "nominal",
            BidMode::Extended => "extended",
        }
    }

    pub fn from_name(s: &str) -> Option<BidMode> {
        match s.to_ascii_lowercase().as_str() {
            "nominal" => Some(BidMode::Nominal),
            "extended" => Some(BidMode::Extended),
            _ => None,
        }
    }
}

impl std::fmt::Display for BidMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DsmKind {
    Kroot,
    Pkr,
}

impl DsmKind {
    pub fn of(dsm_id: u8) -> DsmKind {
        if dsm_id < FIRST_PKR_DSM_ID {
            DsmKind::Kroot
        } else {
            DsmKind::Pkr
        }
    }
}

/// Reads the block count from the start of a reassembled DSM.
pub(crate) fn read_nb(bits: &crate::bitgrid::BitSlice, mode: BidMode) -> Option<usize> {
    let mut r = crate::bitgrid::BitReader::new(bits);
    r.read(mode.bid_bits()).ok().map(|v| v as usize + 1)
}
