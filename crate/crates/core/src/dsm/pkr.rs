use super::merkle::{fold_path, leaf_hash, Node, MERKLE_DEPTH};
use super::{read_nb, BidMode, DsmError, MerkleTree};
use crate::bitgrid::{BitReader, BitSlice, BitString, BitWriter};

/// NB, NPKT, NPKID and reserved bits.
pub const PKR_METADATA_BITS: usize = 16;
/// Metadata plus the four 256-bit path nodes.
pub const PKR_FIXED_BITS: usize = PKR_METADATA_BITS + MERKLE_DEPTH * 256;

/// A DSM-PKR message.
///
/// Metadata (nominal): NB(4) NPKT(4) NPKID(4) R(4); extended mode widens NB
/// to 7 bits and leaves 1 reserved bit. The Merkle path, bottom sibling
/// first, the new public key and zero padding follow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DsmPkr {
    pub npkt: u8,
    pub npkid: u8,
    pub path: [Node; MERKLE_DEPTH],
    pub npk: Vec<u8>,
}

impl DsmPkr {
    pub fn length_in(mode: BidMode, npk_bits: usize) -> Result<usize, DsmError> {
        let padded = mode.padded_len(PKR_FIXED_BITS + npk_bits);
        let capacity = mode.net_capacity_bits();
        if padded > capacity {
            return Err(DsmError::KeyTooLarge {
                npk_bits,
                total: padded,
                capacity,
                mode,
            });
        }
        Ok(padded)
    }

    pub fn to_bits(&self, mode: BidMode) -> Result<BitString, DsmError> {
        if self.npkt > 15 {
            return Err(DsmError::UnknownNpkt(self.npkt));
        }
        if self.npkid > 15 {
            return Err(DsmError::BadNpkid(self.npkid));
        }
        let total = Self::length_in(mode, self.npk.len() * 8)?;
        let mut w = BitWriter::with_capacity(total);
        w.write((total / mode.block_bits()) as u64 - 1, mode.bid_bits())?;
        w.write(u64::from(self.npkt), 4)?;
        w.write(u64::from(self.npkid), 4)?;
        w.write(0, 8 - mode.bid_bits())?;
        for node in &self.path {
            w.write_bytes(node);
        }
        w.write_bytes(&self.npk);
        w.pad_to(total);
        Ok(w.finish())
    }

    /// Parses a reassembled DSM-PKR. `npk_bits` gives the key length for an
    /// NPKT value.
    pub fn parse(
        bits: &BitSlice,
        mode: BidMode,
        npk_bits: impl Fn(u8) -> Option<usize>,
    ) -> Result<DsmPkr, DsmError> {
        let actual = bits.len() / mode.block_bits();
        if bits.len() % mode.block_bits() != 0 || bits.len() < PKR_METADATA_BITS {
            return Err(DsmError::Unaligned(bits.len()));
        }
        let field = read_nb(bits, mode).ok_or(DsmError::Unaligned(bits.len()))?;
        if field != actual {
            return Err(DsmError::BadBlockCount { field, actual });
        }
        let mut r = BitReader::new(bits);
        r.read(mode.bid_bits())?;
        let npkt = r.read(4)? as u8;
        let npkid = r.read(4)? as u8;
        if r.read(8 - mode.bid_bits())? != 0 {
            return Err(DsmError::ReservedBits);
        }
        let key_bits = npk_bits(npkt).ok_or(DsmError::UnknownNpkt(npkt))?;
        let expected = Self::length_in(mode, key_bits)?;
        if bits.len() != expected {
            return Err(DsmError::BadLength {
                got: bits.len(),
                expected,
            });
        }
        let mut path = [[0u8; 32]; MERKLE_DEPTH];
        for node in &mut path {
            node.copy_from_slice(&r.read_bytes(32)?);
        }
        let npk = r.read_bytes(key_bits / 8)?;
        if r.rest().any() {
            return Err(DsmError::MalformedPadding);
        }
        Ok(DsmPkr {
            npkt,
            npkid,
            path,
            npk,
        })
    }

    pub fn leaf_hash(&self) -> Node {
        leaf_hash(self.npkt, self.npkid, &self.npk)
    }
}

/// Assembles the DSM-PKR for the key registered at `npkid`.
pub fn build_dsm_pkr(
    npk: &[u8],
    npkt: u8,
    npkid: u8,
    tree: &MerkleTree,
    mode: BidMode,
) -> Result<DsmPkr, DsmError> {
    let leaf = tree.leaf(npkid).ok_or(DsmError::BadNpkid(npkid))?;
    if leaf.npkt != npkt || leaf.npk != npk {
        return Err(DsmError::LeafMismatch(npkid));
    }
    DsmPkr::length_in(mode, npk.len() * 8)?;
    Ok(DsmPkr {
        npkt,
        npkid,
        path: tree.path(npkid).expect("npkid checked"),
        npk: npk.to_vec(),
    })
}

/// True iff the key and its position fold up to `trusted_root`.
pub fn verify_pkr(pkr: &DsmPkr, trusted_root: &Node) -> bool {
    pkr.npkid < 16 && fold_path(pkr.leaf_hash(), pkr.npkid, &pkr.path) == *trusted_root
}
