use std::collections::BTreeMap;

use super::{read_nb, BidMode, DsmError, NmaHeader};
use crate::bitgrid::{BitReader, BitSlice, BitString, BitWriter, HKROOT_BITS};

/// One DSM block as carried in an HKROOT section.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DsmBlock {
    pub dsm_id: u8,
    pub block_id: u8,
    pub bits: BitString,
}

/// Splits a padded DSM into blocks with ids `0..n`.
pub fn segment(dsm_id: u8, payload: &BitSlice, mode: BidMode) -> Result<Vec<DsmBlock>, DsmError> {
    if dsm_id > 15 {
        return Err(DsmError::BadDsmId(dsm_id));
    }
    let size = mode.block_bits();
    if payload.is_empty() || payload.len() % size != 0 {
        return Err(DsmError::Unaligned(payload.len()));
    }
    let n = payload.len() / size;
    if n > mode.max_blocks() {
        return Err(DsmError::CapacityExceeded {
            blocks: n,
            max: mode.max_blocks(),
            mode,
        });
    }
    Ok(payload
        .chunks(size)
        .enumerate()
        .map(|(i, c)| DsmBlock {
            dsm_id,
            block_id: i as u8,
            bits: c.to_bitvec(),
        })
        .collect())
}

/// A full 120-bit HKROOT section.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HkrootMessage {
    pub nma: NmaHeader,
    pub block: DsmBlock,
}

impl HkrootMessage {
    pub fn to_bits(&self, mode: BidMode) -> Result<BitString, DsmError> {
        if self.block.bits.len() != mode.block_bits() {
            return Err(DsmError::BadLength {
                got: self.block.bits.len(),
                expected: mode.block_bits(),
            });
        }
        let mut w = BitWriter::with_capacity(HKROOT_BITS);
        w.write(u64::from(self.nma.to_u8()), 8)?;
        w.write(u64::from(self.block.dsm_id), 4)?;
        w.write(u64::from(self.block.block_id), mode.bid_bits())?;
        w.write_bits(&self.block.bits);
        Ok(w.finish())
    }

    pub fn parse(bits: &BitSlice, mode: BidMode) -> Result<HkrootMessage, DsmError> {
        if bits.len() != HKROOT_BITS {
            return Err(DsmError::BadLength {
                got: bits.len(),
                expected: HKROOT_BITS,
            });
        }
        let mut r = BitReader::new(bits);
        let nma = NmaHeader::from_u8(r.read(8)? as u8)?;
        let dsm_id = r.read(4)? as u8;
        let block_id = r.read(mode.bid_bits())? as u8;
        Ok(HkrootMessage {
            nma,
            block: DsmBlock {
                dsm_id,
                block_id,
                bits: r.rest().to_bitvec(),
            },
        })
    }
}

/// Outcome of adding one block to a stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Accumulate {
    Incomplete,
    Complete(BitString),
    /// The block contradicts what the stream already holds.
    Conflict,
}

/// Blocks received so far for one DSM ID.
#[derive(Clone, Debug)]
pub struct DsmBlockStream {
    dsm_id: u8,
    mode: BidMode,
    blocks: BTreeMap<u8, BitString>,
}

impl DsmBlockStream {
    pub fn new(dsm_id: u8, mode: BidMode) -> DsmBlockStream {
        DsmBlockStream {
            dsm_id,
            mode,
            blocks: BTreeMap::new(),
        }
    }

    pub fn dsm_id(&self) -> u8 {
        self.dsm_id
    }

    /// Block count, known once block 0 has arrived.
    pub fn nb(&self) -> Option<usize> {
        self.blocks.get(&0).and_then(|b| read_nb(b, self.mode))
    }

    pub fn received(&self) -> usize {
        self.blocks.len()
    }

    pub fn accumulate(&mut self, block: &DsmBlock) -> Accumulate {
        if block.dsm_id != self.dsm_id
            || block.bits.len() != self.mode.block_bits()
            || usize::from(block.block_id) >= self.mode.max_blocks()
        {
            return Accumulate::Conflict;
        }
        match self.blocks.get(&block.block_id) {
            Some(existing) if *existing != block.bits => return Accumulate::Conflict,
            Some(_) => {}
            None => {
                self.blocks.insert(block.block_id, block.bits.clone());
            }
        }
        let Some(nb) = self.nb() else {
            return Accumulate::Incomplete;
        };
        if self.blocks.keys().any(|&id| usize::from(id) >= nb) {
            // Block 0 and a higher block disagree on the length.
            if block.block_id == 0 {
                self.blocks.remove(&0);
            } else {
                self.blocks.remove(&block.block_id);
            }
            return Accumulate::Conflict;
        }
        if self.blocks.len() < nb {
            return Accumulate::Incomplete;
        }
        let mut payload = BitString::with_capacity(nb * self.mode.block_bits());
        for bits in self.blocks.values() {
            payload.extend_from_bitslice(bits);
        }
        Accumulate::Complete(payload)
    }
}

/// Streams for every DSM ID. A stream is dropped when it completes or
/// conflicts.
#[derive(Clone, Debug, Default)]
pub struct DsmAccumulator {
    mode: BidMode,
    streams: BTreeMap<u8, DsmBlockStream>,
}

impl DsmAccumulator {
    pub fn new(mode: BidMode) -> DsmAccumulator {
        DsmAccumulator {
            mode,
            streams: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, block: &DsmBlock) -> Accumulate {
        if block.dsm_id > 15 {
            return Accumulate::Conflict;
        }
        let stream = self
            .streams
            .entry(block.dsm_id)
            .or_insert_with(|| DsmBlockStream::new(block.dsm_id, self.mode));
        let out = stream.accumulate(block);
        if !matches!(out, Accumulate::Incomplete) {
            self.streams.remove(&block.dsm_id);
        }
        out
    }

    pub fn pending(&self, dsm_id: u8) -> Option<&DsmBlockStream> {
        self.streams.get(&dsm_id)
    }

    pub fn clear(&mut self) {
        self.streams.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitgrid::BitWriter;
    use proptest::prelude::*;

    fn payload(mode: BidMode, blocks: usize, fill: u8) -> BitString {
        let mut w = BitWriter::new();
        w.write(blocks as u64 - 1, mode.bid_bits()).unwrap();
        while w.len() + 8 <= blocks * mode.block_bits() {
            w.write(u64::from(fill), 8).unwrap();
        }
        w.pad_to(blocks * mode.block_bits());
        w.finish()
    }

    #[test]
    fn segment_counts() {
        let m = BidMode::Nominal;
        assert_eq!(segment(0, &payload(m, 7, 1), m).unwrap().len(), 7);
        let blocks = segment(12, &payload(m, 16, 1), m).unwrap();
        assert_eq!(blocks.len(), 16);
        assert_eq!(blocks.last().unwrap().block_id, 15);
        let too_many = BitString::repeat(false, 17 * 104);
        assert!(matches!(segment(0, &too_many, m), Err(DsmError::CapacityExceeded { .. })));
        let e = BidMode::Extended;
        assert_eq!(segment(0, &payload(e, 128, 1), e).unwrap().len(), 128);
        assert!(segment(0, &BitString::repeat(false, 103), m).is_err());
        assert!(segment(16, &payload(m, 1, 1), m).is_err());
    }

    #[test]
    fn reverse_order_and_conflicts() {
        let m = BidMode::Nominal;
        let p = payload(m, 5, 0xA5);
        let blocks = segment(3, &p, m).unwrap();
        let mut s = DsmBlockStream::new(3, m);
        for b in blocks[1..].iter().rev() {
            assert_eq!(s.accumulate(b), Accumulate::Incomplete);
        }
        // Duplicate identical block is idempotent.
        assert_eq!(s.accumulate(&blocks[2]), Accumulate::Incomplete);
        let mut forged = blocks[2].clone();
        let flipped = !forged.bits[10];
        forged.bits.set(10, flipped);
        assert_eq!(s.accumulate(&forged), Accumulate::Conflict);
        assert_eq!(s.accumulate(&blocks[0]), Accumulate::Complete(p.clone()));
        // Wrong stream.
        let mut other = blocks[1].clone();
        other.dsm_id = 4;
        assert_eq!(s.accumulate(&other), Accumulate::Conflict);
    }

    #[test]
    fn missing_block_never_completes() {
        let m = BidMode::Nominal;
        let blocks = segment(1, &payload(m, 4, 7), m).unwrap();
        let mut acc = DsmAccumulator::new(m);
        for _ in 0..3 {
            for b in blocks.iter().filter(|b| b.block_id != 2) {
                assert_eq!(acc.push(b), Accumulate::Incomplete);
            }
        }
        assert!(matches!(acc.push(&blocks[2]), Accumulate::Complete(_)));
        assert!(acc.pending(1).is_none());
    }

    #[test]
    fn block_beyond_count_conflicts() {
        let m = BidMode::Nominal;
        let blocks = segment(1, &payload(m, 3, 7), m).unwrap();
        let mut s = DsmBlockStream::new(1, m);
        let stray = DsmBlock {
            dsm_id: 1,
            block_id: 9,
            bits: blocks[1].bits.clone(),
        };
        assert_eq!(s.accumulate(&stray), Accumulate::Incomplete);
        assert_eq!(s.accumulate(&blocks[0]), Accumulate::Conflict);
    }

    #[test]
    fn hkroot_section_round_trip() {
        for m in [BidMode::Nominal, BidMode::Extended] {
            let blocks = segment(13, &payload(m, 3, 0x3C), m).unwrap();
            let msg = HkrootMessage {
                nma: NmaHeader::operational(2),
                block: blocks[2].clone(),
            };
            let bits = msg.to_bits(m).unwrap();
            assert_eq!(bits.len(), 120);
            assert_eq!(HkrootMessage::parse(&bits, m).unwrap(), msg);
        }
    }

    proptest! {
        #[test]
        fn any_order_same_payload(n in 1usize..=16, fill in any::<u8>(), order in Just(()).prop_perturb(|_, mut rng| {
            let mut v: Vec<usize> = (0..16).collect();
            for i in (1..v.len()).rev() {
                let j = (rng.next_u32() as usize) % (i + 1);
                v.swap(i, j);
            }
            v
        })) {
            let m = BidMode::Nominal;
            let p = payload(m, n, fill);
            let blocks = segment(2, &p, m).unwrap();
            let mut s = DsmBlockStream::new(2, m);
            let mut done = None;
            for &i in order.iter().filter(|&&i| i < n) {
                if let Accumulate::Complete(out) = s.accumulate(&blocks[i]) {
                    done = Some(out);
                }
            }
            prop_assert_eq!(done, Some(p));
        }
    }
}
