use super::{read_nb, BidMode, DsmError, NmaHeader};
use crate::bitgrid::{BitReader, BitSlice, BitString, BitWriter, GstTime};
use crate::sigscheme::{SecretKey, SignatureScheme};
use crate::tesla::{
    key_bits_from_ks, ks_code, tag_bits_from_ts, ts_code, HashFunction, Key, MacFunction,
    TeslaChain, TeslaError, TeslaParams,
};

/// Non-cryptographic fields in front of the root key: one gross block.
pub const KROOT_PREAMBLE_BITS: usize = 104;
/// Largest nominal DSM-KROOT, 14 blocks.
const NOMINAL_KROOT_CAP_BITS: usize = 1456;
const HOUR_S: u32 = 3600;

/// Header fields the broadcaster chooses for a DSM-KROOT.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KrootHeader {
    /// NMA header bound into the signature.
    pub nma: NmaHeader,
    pub pkid: u8,
    pub maclt: u8,
    /// 48-bit chain salt.
    pub alpha: u64,
}

/// A DSM-KROOT message.
///
/// Preamble (nominal): NB(4) PKID(4) CIDKR(2) R(2) HF(2) MF(2) KS(4) TS(4)
/// MACLT(8) R(4) WN(12) TOWH(8) ALPHA(48). In extended mode NB is 7 bits and
/// the second reserved field shrinks to 1 bit. The root key, the signature
/// and zero padding to a whole number of blocks follow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DsmKroot {
    pub pkid: u8,
    pub cidkr: u8,
    pub hash: HashFunction,
    pub mac: MacFunction,
    pub key_bits: u32,
    pub tag_bits: u32,
    pub maclt: u8,
    /// Chain start; always on an hour boundary.
    pub start: GstTime,
    pub alpha: u64,
    pub kroot: Key,
    pub ds: Vec<u8>,
}

impl DsmKroot {
    /// Serialized length before padding.
    pub fn raw_bits(key_bits: usize, ds_bits: usize) -> usize {
        KROOT_PREAMBLE_BITS + key_bits + ds_bits
    }

    /// Serialized length in `mode`, or an error past the mode's limit.
    pub fn length_in(mode: BidMode, key_bits: usize, ds_bits: usize) -> Result<usize, DsmError> {
        let raw = Self::raw_bits(key_bits, ds_bits);
        let padded = mode.padded_len(raw);
        let capacity = match mode {
            BidMode::Nominal => NOMINAL_KROOT_CAP_BITS,
            BidMode::Extended => mode.net_capacity_bits(),
        };
        if padded > capacity {
            return Err(DsmError::SignatureTooLarge {
                ds_bits,
                total: padded,
                capacity,
                mode,
            });
        }
        Ok(padded)
    }

    /// Canonical signed form: NMA header, CIDKR, HF, MF, KS, TS, MACLT, WN,
    /// TOWH, alpha and the root key, zero-padded to a byte boundary.
    pub fn signed_message(&self, nma: NmaHeader) -> Result<Vec<u8>, DsmError> {
        let mut w = BitWriter::new();
        w.write(u64::from(nma.to_u8()), 8)?;
        w.write(u64::from(self.cidkr), 2)?;
        self.write_params(&mut w)?;
        w.write(u64::from(self.start.week()), 12)?;
        w.write(u64::from(self.start.tow() / HOUR_S), 8)?;
        w.write(self.alpha, 48)?;
        w.write_bytes(self.kroot.as_bytes());
        let bits = w.finish();
        Ok(crate::bitgrid::to_bytes(&bits))
    }

    fn write_params(&self, w: &mut BitWriter) -> Result<(), DsmError> {
        w.write(u64::from(self.hash.code()), 2)?;
        w.write(u64::from(self.mac.code()), 2)?;
        w.write(u64::from(ks_code(self.key_bits)?), 4)?;
        w.write(u64::from(ts_code(self.tag_bits)?), 4)?;
        w.write(u64::from(self.maclt), 8)?;
        Ok(())
    }

    pub fn to_bits(&self, mode: BidMode) -> Result<BitString, DsmError> {
        if self.kroot.bit_len() != self.key_bits as usize {
            return Err(TeslaError::BadKeyLength {
                got: self.kroot.bit_len(),
                expected: self.key_bits,
            }
            .into());
        }
        let total = Self::length_in(mode, self.key_bits as usize, self.ds.len() * 8)?;
        let nb = total / mode.block_bits();
        let mut w = BitWriter::with_capacity(total);
        w.write(nb as u64 - 1, mode.bid_bits())?;
        w.write(u64::from(self.pkid), 4)?;
        w.write(u64::from(self.cidkr), 2)?;
        w.write(0, 2)?;
        self.write_params(&mut w)?;
        w.write(0, 8 - mode.bid_bits())?;
        w.write(u64::from(self.start.week()), 12)?;
        w.write(u64::from(self.start.tow() / HOUR_S), 8)?;
        w.write(self.alpha, 48)?;
        debug_assert_eq!(w.len(), KROOT_PREAMBLE_BITS);
        w.write_bytes(self.kroot.as_bytes());
        w.write_bytes(&self.ds);
        w.pad_to(total);
        Ok(w.finish())
    }

    /// Parses a reassembled DSM-KROOT whose signature is `ds_bits` long.
    pub fn parse(bits: &BitSlice, mode: BidMode, ds_bits: usize) -> Result<DsmKroot, DsmError> {
        let actual = bits.len() / mode.block_bits();
        if bits.len() % mode.block_bits() != 0 || bits.len() < KROOT_PREAMBLE_BITS {
            return Err(DsmError::Unaligned(bits.len()));
        }
        let field = read_nb(bits, mode).ok_or(DsmError::Unaligned(bits.len()))?;
        if field != actual {
            return Err(DsmError::BadBlockCount { field, actual });
        }
        let mut r = BitReader::new(bits);
        r.read(mode.bid_bits())?;
        let pkid = r.read(4)? as u8;
        let cidkr = r.read(2)? as u8;
        if r.read(2)? != 0 {
            return Err(DsmError::ReservedBits);
        }
        let hash = HashFunction::from_code(r.read(2)? as u8)?;
        let mac = MacFunction::from_code(r.read(2)? as u8)?;
        let key_bits = key_bits_from_ks(r.read(4)? as u8)?;
        let tag_bits = tag_bits_from_ts(r.read(4)? as u8)?;
        let maclt = r.read(8)? as u8;
        if r.read(8 - mode.bid_bits())? != 0 {
            return Err(DsmError::ReservedBits);
        }
        let week = r.read(12)? as u16;
        let towh = r.read(8)? as u32;
        if towh >= 168 {
            return Err(DsmError::ReservedValue("TOWH beyond the end of the week"));
        }
        let start = GstTime::new(week, towh * HOUR_S)?;
        let alpha = r.read(48)?;
        let expected = Self::length_in(mode, key_bits as usize, ds_bits)?;
        if bits.len() != expected {
            return Err(DsmError::BadLength {
                got: bits.len(),
                expected,
            });
        }
        let kroot = Key::from_bytes(r.read_bytes(key_bits as usize / 8)?);
        let ds = r.read_bytes(ds_bits / 8)?;
        if r.rest().any() {
            return Err(DsmError::MalformedPadding);
        }
        Ok(DsmKroot {
            pkid,
            cidkr,
            hash,
            mac,
            key_bits,
            tag_bits,
            maclt,
            start,
            alpha,
            kroot,
            ds,
        })
    }

    /// Chain parameters announced by this message, for a chain of `length`
    /// keys.
    pub fn tesla_params(&self, length: u32) -> Result<TeslaParams, TeslaError> {
        TeslaParams::new(
            self.key_bits,
            self.tag_bits,
            self.hash,
            self.mac,
            self.cidkr,
            length,
            self.start,
        )
    }
}

/// Signs the root key of `chain` and assembles the DSM-KROOT.
pub fn build_dsm_kroot(
    chain: &TeslaChain,
    signer: &dyn SignatureScheme,
    secret: &SecretKey,
    header: KrootHeader,
    mode: BidMode,
) -> Result<DsmKroot, DsmError> {
    let p = chain.params();
    if header.pkid > 15 {
        return Err(DsmError::BadNpkid(header.pkid));
    }
    let sig_bits = signer.characterization().sig_bits as usize;
    DsmKroot::length_in(mode, p.key_bits() as usize, sig_bits)?;
    let mut msg = DsmKroot {
        pkid: header.pkid,
        cidkr: p.chain_id(),
        hash: p.hash(),
        mac: p.mac(),
        key_bits: p.key_bits(),
        tag_bits: p.tag_bits(),
        maclt: header.maclt,
        start: p.start(),
        alpha: header.alpha & ((1 << 48) - 1),
        kroot: chain.root_key().clone(),
        ds: Vec::new(),
    };
    let signed = msg.signed_message(header.nma)?;
    msg.ds = signer
        .sign(secret, &signed)
        .map_err(|e| DsmError::Signing(e.to_string()))?;
    Ok(msg)
}

/// Checks the DSM-KROOT signature under `public`.
pub fn verify_kroot(
    kroot: &DsmKroot,
    nma: NmaHeader,
    scheme: &dyn SignatureScheme,
    public: &[u8],
) -> bool {
    kroot
        .signed_message(nma)
        .map(|m| scheme.verify(public, &m, &kroot.ds))
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigscheme::Registry;

    fn chain(lk: u32) -> TeslaChain {
        let p = TeslaParams::new(
            lk,
            40,
            HashFunction::Sha256,
            MacFunction::HmacSha256,
            1,
            20,
            GstTime::new(1234, 5 * 3600).unwrap(),
        )
        .unwrap();
        TeslaChain::generate(p, &vec![8; lk as usize / 8]).unwrap()
    }

    fn header() -> KrootHeader {
        KrootHeader {
            nma: NmaHeader::operational(1),
            pkid: 2,
            maclt: 0x22,
            alpha: 0x0123_4567_89AB,
        }
    }

    #[test]
    fn table_corner_lengths() {
        assert_eq!(DsmKroot::length_in(BidMode::Nominal, 96, 512).unwrap(), 728);
        assert_eq!(DsmKroot::length_in(BidMode::Nominal, 256, 1056).unwrap(), 1456);
        assert!(matches!(
            DsmKroot::length_in(BidMode::Nominal, 256, 5328),
            Err(DsmError::SignatureTooLarge { .. })
        ));
        // 104 + 256 + 5328 = 5688 bits in 101-bit blocks.
        assert_eq!(DsmKroot::length_in(BidMode::Extended, 256, 5328).unwrap(), 57 * 101);
        assert!(DsmKroot::length_in(BidMode::Extended, 256, 62848).is_err());
    }

    #[test]
    fn sign_serialize_parse_verify() {
        let reg = Registry::new();
        for (scheme, lk, mode) in [
            ("ECDSA-P256", 128, BidMode::Nominal),
            ("ECDSA-P521", 256, BidMode::Nominal),
            ("Falcon-512", 256, BidMode::Extended),
        ] {
            let p = reg.provider(scheme).unwrap();
            let kp = p.keygen([4; 32]);
            let c = chain(lk);
            let k = build_dsm_kroot(&c, p.as_ref(), &kp.secret, header(), mode).unwrap();
            let bits = k.to_bits(mode).unwrap();
            assert_eq!(bits.len() % mode.block_bits(), 0);
            let parsed = DsmKroot::parse(&bits, mode, k.ds.len() * 8).unwrap();
            assert_eq!(parsed, k);
            assert!(verify_kroot(&parsed, header().nma, p.as_ref(), &kp.public));
            let mut other = header().nma;
            other.cid = 3;
            assert!(!verify_kroot(&parsed, other, p.as_ref(), &kp.public));
            assert_eq!(parsed.tesla_params(20).unwrap(), *c.params());
        }
    }

    #[test]
    fn falcon_rejected_nominal() {
        let reg = Registry::new();
        let p = reg.provider("Falcon-512").unwrap();
        let kp = p.keygen([4; 32]);
        assert!(matches!(
            build_dsm_kroot(&chain(256), p.as_ref(), &kp.secret, header(), BidMode::Nominal),
            Err(DsmError::SignatureTooLarge { .. })
        ));
    }

    #[test]
    fn parse_errors() {
        let reg = Registry::new();
        let p = reg.provider("ECDSA-P256").unwrap();
        let kp = p.keygen([4; 32]);
        let k = build_dsm_kroot(&chain(128), p.as_ref(), &kp.secret, header(), BidMode::Nominal).unwrap();
        let bits = k.to_bits(BidMode::Nominal).unwrap();
        let mut padded = bits.clone();
        let last = padded.len() - 1;
        padded.set(last, true);
        assert_eq!(
            DsmKroot::parse(&padded, BidMode::Nominal, 512),
            Err(DsmError::MalformedPadding)
        );
        let mut nb = bits.clone();
        let flipped = !nb[3];
        nb.set(3, flipped);
        assert!(matches!(
            DsmKroot::parse(&nb, BidMode::Nominal, 512),
            Err(DsmError::BadBlockCount { .. })
        ));
        let mut ks = bits.clone();
        // KS field starts at bit 16; code 15 is reserved.
        for i in 16..20 {
            ks.set(i, true);
        }
        assert!(matches!(
            DsmKroot::parse(&ks, BidMode::Nominal, 512),
            Err(DsmError::Tesla(TeslaError::ReservedCode { field: "KS", .. }))
        ));
    }
}
