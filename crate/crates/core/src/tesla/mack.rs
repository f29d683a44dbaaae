use thiserror::Error;

use super::{
    compute_tag, Adkd, Key, Tag, TagBits, TagInfo, TeslaChain, TeslaError, TeslaParams,
    DISCLOSURE_DELAYS, TAG_INFO_BITS,
};
use crate::bitgrid::{BitReader, BitString, BitWriter, GstTime, MACK_BITS};

pub const MACSEQ_BITS: u32 = 12;
const HEADER_RESERVED_BITS: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MackError {
    #[error("MACK is {got} bits, expected 480")]
    BadLength { got: usize },
    #[error("non-zero padding after the disclosed key")]
    MalformedPadding,
    #[error("non-zero reserved bits in the MACK header")]
    ReservedBits,
    #[error("tag slot {slot} is malformed")]
    MalformedSlot { slot: usize },
    #[error(transparent)]
    Tesla(#[from] TeslaError),
}

/// `floor((480 - l_K) / (l_T + 16))`, the number of tags including the
/// header tag.
pub fn tags_per_mack(key_bits: u32, tag_bits: u32) -> u32 {
    (MACK_BITS as u32).saturating_sub(key_bits) / (tag_bits + TAG_INFO_BITS)
}

/// A decoded MACK section.
///
/// `tags` holds the occupied slots after the header tag; unused slots are
/// trailing and serialize as zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MackMessage {
    pub tag0: TagBits,
    pub macseq: u16,
    pub tags: Vec<Tag>,
    pub key: Key,
}

impl MackMessage {
    /// The implicit info of the header tag: ephemeris data of the transmitter.
    pub fn tag0_info(transmitter: u8) -> TagInfo {
        TagInfo {
            prn: transmitter,
            adkd: Adkd::EphemerisClock,
            cop: 0,
        }
    }

    pub fn to_bits(&self, params: &TeslaParams) -> Result<BitString, MackError> {
        let lt = params.tag_bits();
        let nt = params.tags_per_mack();
        if self.tags.len() + 1 > nt as usize {
            return Err(TeslaError::TooManyTags {
                requested: self.tags.len() + 1,
                capacity: nt,
            }
            .into());
        }
        if self.key.bit_len() != params.key_bits() as usize {
            return Err(TeslaError::BadKeyLength {
                got: self.key.bit_len(),
                expected: params.key_bits(),
            }
            .into());
        }
        let mut w = BitWriter::with_capacity(MACK_BITS);
        write_tag_bits(&mut w, self.tag0, lt)?;
        write(&mut w, u64::from(self.macseq), MACSEQ_BITS)?;
        write(&mut w, 0, HEADER_RESERVED_BITS)?;
        for slot in 0..nt as usize - 1 {
            match self.tags.get(slot) {
                Some(tag) => {
                    if tag.info.prn == 0 {
                        return Err(TeslaError::EmptySlotPrn.into());
                    }
                    write_tag_bits(&mut w, tag.bits, lt)?;
                    write(&mut w, u64::from(tag.info.to_u16()), TAG_INFO_BITS)?;
                }
                None => write(&mut w, 0, lt + TAG_INFO_BITS)?,
            }
        }
        w.write_bytes(self.key.as_bytes());
        w.pad_to(MACK_BITS);
        Ok(w.finish())
    }

    pub fn parse(bits: &crate::bitgrid::BitSlice, params: &TeslaParams) -> Result<MackMessage, MackError> {
        if bits.len() != MACK_BITS {
            return Err(MackError::BadLength { got: bits.len() });
        }
        let lt = params.tag_bits();
        let nt = params.tags_per_mack();
        let mut r = BitReader::new(bits);
        let tag0 = TagBits::new(read(&mut r, lt)?, lt)?;
        let macseq = read(&mut r, MACSEQ_BITS)? as u16;
        if read(&mut r, HEADER_RESERVED_BITS)? != 0 {
            return Err(MackError::ReservedBits);
        }
        let mut tags = Vec::new();
        let mut seen_empty = false;
        for slot in 0..nt as usize - 1 {
            let value = read(&mut r, lt)?;
            let word = read(&mut r, TAG_INFO_BITS)? as u16;
            if word >> 8 == 0 {
                if word != 0 || value != 0 {
                    return Err(MackError::MalformedSlot { slot });
                }
                seen_empty = true;
                continue;
            }
            if seen_empty {
                return Err(MackError::MalformedSlot { slot });
            }
            let info = TagInfo::from_u16(word).map_err(|_| MackError::MalformedSlot { slot })?;
            tags.push(Tag {
                bits: TagBits::new(value, lt)?,
                info,
            });
        }
        let key = r
            .read_bytes(params.key_bits() as usize / 8)
            .map_err(|_| MackError::BadLength { got: bits.len() })?;
        if r.rest().any() {
            return Err(MackError::MalformedPadding);
        }
        Ok(MackMessage {
            tag0,
            macseq,
            tags,
            key: Key::from_bytes(key),
        })
    }
}

fn write(w: &mut BitWriter, value: u64, width: u32) -> Result<(), MackError> {
    w.write(value, width)
        .map_err(|_| MackError::Tesla(TeslaError::BadTagWidth(width)))
}

fn write_tag_bits(w: &mut BitWriter, t: TagBits, lt: u32) -> Result<(), MackError> {
    if t.width() != lt {
        return Err(TeslaError::BadTagWidth(t.width()).into());
    }
    write(w, t.value(), lt)
}

fn read(r: &mut BitReader<'_>, width: u32) -> Result<u64, MackError> {
    r.read(width).map_err(|_| MackError::BadLength {
        got: r.position() + r.remaining(),
    })
}

/// Data authenticated by one tag slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagRequest {
    pub info: TagInfo,
    pub data: Vec<u8>,
}

/// Inputs for one MACK section.
#[derive(Clone, Debug)]
pub struct MackRequest {
    /// Chain index of the subframe; its key signs every tag.
    pub subframe_index: u32,
    /// PRN of the transmitting satellite.
    pub transmitter: u8,
    /// Data authenticated by the header tag.
    pub tag0_data: Vec<u8>,
    pub entries: Vec<TagRequest>,
    /// Subframes between signing and disclosure; the MACK at `s` discloses
    /// `K_{s - delay}`, or the root key near the start of the chain.
    pub disclosure_delay: u32,
}

/// MACSEQ: leading 12 bits of `MAC(K_s, PRN || GST || slot infos)`.
pub fn macseq(
    params: &TeslaParams,
    key: &Key,
    transmitter: u8,
    gst: GstTime,
    infos: &[TagInfo],
) -> Result<u16, TeslaError> {
    let mut input = Vec::with_capacity(5 + 2 * infos.len());
    input.push(transmitter);
    input.extend_from_slice(&gst.packed().to_be_bytes());
    for info in infos {
        input.extend_from_slice(&info.to_bytes());
    }
    let mac = params.mac().compute(key.as_bytes(), &input)?;
    Ok(TagBits::from_mac(&mac, MACSEQ_BITS)?.value() as u16)
}

pub fn build_mack(chain: &TeslaChain, req: &MackRequest) -> Result<MackMessage, TeslaError> {
    let params = chain.params();
    if !DISCLOSURE_DELAYS.contains(&req.disclosure_delay) {
        return Err(TeslaError::BadDisclosureDelay(req.disclosure_delay));
    }
    let nt = params.tags_per_mack();
    if req.entries.len() + 1 > nt as usize {
        return Err(TeslaError::TooManyTags {
            requested: req.entries.len() + 1,
            capacity: nt,
        });
    }
    let key = chain.signing_key(req.subframe_index)?;
    let tag0 = compute_tag(
        key,
        &req.tag0_data,
        params,
        MackMessage::tag0_info(req.transmitter),
    )?;
    let mut tags = Vec::with_capacity(req.entries.len());
    for e in &req.entries {
        if e.info.prn == 0 {
            return Err(TeslaError::EmptySlotPrn);
        }
        tags.push(Tag {
            bits: compute_tag(key, &e.data, params, e.info)?,
            info: e.info,
        });
    }
    let infos: Vec<TagInfo> = tags.iter().map(|t| t.info).collect();
    let gst = params.key_gst(req.subframe_index);
    let disclosed = req.subframe_index.saturating_sub(req.disclosure_delay);
    Ok(MackMessage {
        tag0,
        macseq: macseq(params, key, req.transmitter, gst, &infos)?,
        tags,
        key: chain.key(disclosed).expect("index below chain length").clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tesla::{HashFunction, MacFunction, KEY_SIZES, TAG_SIZES};
    use proptest::prelude::*;

    fn params(lk: u32, lt: u32) -> TeslaParams {
        TeslaParams::new(
            lk,
            lt,
            HashFunction::Sha256,
            MacFunction::HmacSha256,
            0,
            40,
            GstTime::new(1300, 3600).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn nt_formula_bounds() {
        assert_eq!(tags_per_mack(128, 40), 6);
        assert_eq!(tags_per_mack(256, 40), 4);
        assert_eq!(tags_per_mack(96, 20), 10);
        for &lk in &KEY_SIZES {
            for &lt in &TAG_SIZES {
                let nt = tags_per_mack(lk, lt);
                assert!((4..=10).contains(&nt), "l_K={lk} l_T={lt} n_t={nt}");
                assert_eq!(nt, (480 - lk) / (lt + 16));
            }
        }
    }

    #[test]
    fn all_zero_parses() {
        let p = params(128, 40);
        let zeros = BitString::repeat(false, 480);
        let m = MackMessage::parse(&zeros, &p).unwrap();
        assert_eq!(m.tag0.value(), 0);
        assert_eq!(m.macseq, 0);
        assert!(m.tags.is_empty());
        assert_eq!(m.key.as_bytes(), &[0u8; 16]);
        assert_eq!(m.to_bits(&p).unwrap(), zeros);
    }

    #[test]
    fn length_and_padding_errors() {
        let p = params(128, 40);
        let short = BitString::repeat(false, 479);
        assert_eq!(
            MackMessage::parse(&short, &p),
            Err(MackError::BadLength { got: 479 })
        );
        let mut padded = BitString::repeat(false, 480);
        padded.set(479, true);
        assert_eq!(
            MackMessage::parse(&padded, &p),
            Err(MackError::MalformedPadding)
        );
        let mut reserved = BitString::repeat(false, 480);
        reserved.set(40 + 12, true);
        assert_eq!(
            MackMessage::parse(&reserved, &p),
            Err(MackError::ReservedBits)
        );
    }

    #[test]
    fn empty_slot_rules() {
        let p = params(128, 40);
        let mut bits = BitString::repeat(false, 480);
        // Tag bits set in an empty slot.
        bits.set(56, true);
        assert_eq!(
            MackMessage::parse(&bits, &p),
            Err(MackError::MalformedSlot { slot: 0 })
        );
        // Occupied slot 1 after empty slot 0.
        let mut bits = BitString::repeat(false, 480);
        bits.set(56 + 56 + 40 + 7, true);
        assert_eq!(
            MackMessage::parse(&bits, &p),
            Err(MackError::MalformedSlot { slot: 1 })
        );
    }

    #[test]
    fn build_discloses_delayed_key() {
        let p = params(128, 40);
        let chain = TeslaChain::generate(p.clone(), &[3; 16]).unwrap();
        let info = TagInfo::new(11, Adkd::Timing, 1).unwrap();
        let mut req = MackRequest {
            subframe_index: 12,
            transmitter: 7,
            tag0_data: b"eph".to_vec(),
            entries: vec![TagRequest {
                info,
                data: b"timing".to_vec(),
            }],
            disclosure_delay: 1,
        };
        let m = build_mack(&chain, &req).unwrap();
        assert_eq!(&m.key, chain.key(11).unwrap());
        assert_eq!(m.to_bits(&p).unwrap().len(), 480);
        req.disclosure_delay = 10;
        assert_eq!(&build_mack(&chain, &req).unwrap().key, chain.key(2).unwrap());
        req.disclosure_delay = 5;
        assert!(build_mack(&chain, &req).is_err());
        req.disclosure_delay = 1;
        req.entries = vec![
            TagRequest {
                info,
                data: vec![]
            };
            6
        ];
        assert_eq!(
            build_mack(&chain, &req),
            Err(TeslaError::TooManyTags {
                requested: 7,
                capacity: 6
            })
        );
        req.entries.clear();
        req.subframe_index = 41;
        assert!(matches!(
            build_mack(&chain, &req),
            Err(TeslaError::ChainExhausted { .. })
        ));
    }

    fn arb_message(lk: u32, lt: u32) -> impl Strategy<Value = MackMessage> {
        let nt = tags_per_mack(lk, lt) as usize;
        let mask = if lt == 64 { u64::MAX } else { (1u64 << lt) - 1 };
        let adkd = prop_oneof![
            Just(Adkd::EphemerisClock),
            Just(Adkd::Timing),
            Just(Adkd::SlowMac)
        ];
        let tag = (any::<u64>(), 1u8..=255, adkd, 0u8..16).prop_map(move |(v, prn, adkd, cop)| Tag {
            bits: TagBits::new(v & mask, lt).unwrap(),
            info: TagInfo { prn, adkd, cop },
        });
        (
            any::<u64>(),
            0u16..4096,
            proptest::collection::vec(tag, 0..nt),
            proptest::collection::vec(any::<u8>(), lk as usize / 8),
        )
            .prop_map(move |(t0, macseq, tags, key)| MackMessage {
                tag0: TagBits::new(t0 & mask, lt).unwrap(),
                macseq,
                tags,
                key: Key::from_bytes(key),
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn parse_inverts_serialize(
            (lk, lt, m) in (0usize..KEY_SIZES.len(), 0usize..TAG_SIZES.len())
                .prop_flat_map(|(i, j)| {
                    let (lk, lt) = (KEY_SIZES[i], TAG_SIZES[j]);
                    arb_message(lk, lt).prop_map(move |m| (lk, lt, m))
                })
        ) {
            let p = params(lk, lt);
            let bits = m.to_bits(&p).unwrap();
            prop_assert_eq!(bits.len(), 480);
            prop_assert_eq!(MackMessage::parse(&bits, &p).unwrap(), m);
        }
    }
}
